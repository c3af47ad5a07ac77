use super::{from_basis, to_basis, MartingaleFamily};
use crate::error::{MprError, Result};
use crate::{Rational, RationalFunctionOfTime};

/// `M_i M_j = Σ_k δ_k(t) M_k(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductLinearization {
    pub i: usize,
    pub j: usize,
    pub delta: Vec<RationalFunctionOfTime>,
}

/// `E(Π M_{k_i}(X_{u_i}, u_i) | F_s) = Σ_j φ_j M_j(X_s, s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct IteratedConditionalExpansion {
    pub times: Vec<Rational>,
    pub orders: Vec<usize>,
    pub s: Rational,
    pub phi: Vec<Rational>,
}

impl MartingaleFamily {
    pub fn linearize_product(&self, i: usize, j: usize) -> Result<ProductLinearization> {
        if i + j > self.order() {
            return Err(MprError::OrderOutOfRange { requested: i + j, available: self.order() });
        }
        let prod = &self.members[i] * &self.members[j];
        Ok(ProductLinearization { i, j, delta: to_basis(&prod, &self.members)? })
    }

    /// `E M_n(X_t, t) M_m(X_t, t)`.
    pub fn cross_moment(&self, n: usize, m: usize) -> Result<RationalFunctionOfTime> {
        let (a, b) = if n <= m { (n, m) } else { (m, n) };
        if b > self.order() {
            return Err(MprError::OrderOutOfRange { requested: b, available: self.order() });
        }
        self.cross
            .get(&(a, b))
            .cloned()
            .ok_or(MprError::InsufficientMoments { needed: a + b, available: self.model.max_order() })
    }

    /// `m_n(t) = E M_n(X_t, t)^2`.
    pub fn second_moment(&self, n: usize) -> Result<RationalFunctionOfTime> {
        self.cross_moment(n, n)
    }

    /// Condition a product of members at times `u_1 ≤ ... ≤ u_k` down to `s ≤ u_1`.
    ///
    /// Works backwards from the latest factor: conditioning the accumulated
    /// expansion onto the previous time keeps its coordinates (martingale
    /// property), then the product with the factor there is re-expanded.
    pub fn iterated_conditional(
        &self,
        factors: &[(Rational, usize)],
        s: &Rational,
    ) -> Result<IteratedConditionalExpansion> {
        let total: usize = factors.iter().map(|f| f.1).sum();
        if total > self.order() {
            return Err(MprError::InsufficientMoments { needed: total, available: self.order() });
        }
        if let Some(w) = factors.windows(2).find(|w| w[1].0 < w[0].0) {
            return Err(MprError::TimeOrderViolation(format!("factor at {} after factor at {}", w[1].0, w[0].0)));
        }
        if let Some(first) = factors.first() {
            if &first.0 < s {
                return Err(MprError::TimeOrderViolation(format!("conditioning time {s} after {}", first.0)));
            }
        }
        let mut phi = vec![Rational::from_integer(1.into())];
        for (u, k) in factors.iter().rev() {
            let basis = self.members_at(u)?;
            let current = from_basis(&phi, &basis);
            phi = to_basis(&(&current * &basis[*k]), &basis)?;
        }
        Ok(IteratedConditionalExpansion {
            times: factors.iter().map(|f| f.0.clone()).collect(),
            orders: factors.iter().map(|f| f.1).collect(),
            s: s.clone(),
            phi,
        })
    }

    /// `E Π M_{k_i}(X_{u_i}, u_i)` for factors in any time order.
    pub fn joint_moment(&self, factors: &[(Rational, usize)]) -> Result<Rational> {
        let mut sorted = factors.to_vec();
        sorted.sort_by(|a, b| a.0.cmp(&b.0));
        let earliest = sorted.first().map(|f| f.0.clone()).unwrap_or_else(|| Rational::from_integer(0.into()));
        let exp = self.iterated_conditional(&sorted, &earliest)?;
        Ok(exp.phi[0].clone())
    }
}
