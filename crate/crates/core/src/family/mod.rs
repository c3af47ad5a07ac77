//! Polynomial martingale families `M_0, ..., M_N` and the operations built on
//! them: basis changes, conditional expectations, product linearizations and
//! moments.

mod json;
mod products;

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::error::{MprError, Result};
use crate::field::{binomial, Field};
use crate::matrix::Matrix;
use crate::model::{default_grid, increment_moments, transition_moments, MomentModel};
use crate::poly::Poly;
use crate::symbols::{at_earlier, at_later, STATE_TWO_TIME_VARS};
use crate::{
    RFMatrix, Rational, RationalFunctionOfTime, SpaceTimePolynomial, StatePolynomial, TwoTimePolynomial,
};

pub use json::FamilyJson;
pub use products::{IteratedConditionalExpansion, ProductLinearization};

#[derive(Clone, Debug)]
pub struct MartingaleFamily {
    model: Arc<MomentModel>,
    members: Vec<SpaceTimePolynomial>,
    canonical: bool,
    certified: Vec<bool>,
    residuals: Vec<TwoTimePolynomial>,
    at_t: Vec<TwoTimePolynomial>,
    at_s: Vec<TwoTimePolynomial>,
    cross: BTreeMap<(usize, usize), RationalFunctionOfTime>,
}

impl PartialEq for MartingaleFamily {
    fn eq(&self, other: &Self) -> bool {
        self.model == other.model && self.members == other.members && self.canonical == other.canonical
    }
}

/// `M_n = x^n - g_n - Σ_{j=1}^{n-1} C(n, j) g_j M_{n-j}`.
pub fn canonical_members(model: &MomentModel, n: usize) -> Result<Vec<SpaceTimePolynomial>> {
    if n > model.max_order() {
        return Err(MprError::OrderOutOfRange { requested: n, available: model.max_order() });
    }
    let g = model.moments();
    let mut members: Vec<SpaceTimePolynomial> = vec![Poly::one()];
    for k in 1..=n {
        let mut m = Poly::monomial(RationalFunctionOfTime::one(), k) - Poly::constant(g[k].clone());
        for j in 1..k {
            if g[j].is_zero() {
                continue;
            }
            let c: RationalFunctionOfTime = binomial(k, j);
            m = m - members[k - j].scale(&(c * &g[j]));
        }
        members.push(m);
    }
    Ok(members)
}

/// `V_n[i][j] = C(i, j) g_{i-j}(t)`: maps `(1, M_1, ..., M_n)` to `(1, x, ..., x^n)`.
pub fn structural_matrix(model: &MomentModel, n: usize) -> Result<RFMatrix> {
    if n > model.max_order() {
        return Err(MprError::OrderOutOfRange { requested: n, available: model.max_order() });
    }
    let g = model.moments();
    let mut v = Matrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=i {
            let c: RationalFunctionOfTime = binomial(i, j);
            v.set(i, j, c * &g[i - j]);
        }
    }
    Ok(v)
}

/// Coordinates of `p` in a monic triangular basis, by back-substitution.
pub fn to_basis<F: Field>(p: &Poly<F>, members: &[Poly<F>]) -> Result<Vec<F>> {
    let deg = p.degree().unwrap_or(0);
    if deg >= members.len() {
        return Err(MprError::OrderOutOfRange { requested: deg, available: members.len().saturating_sub(1) });
    }
    let mut rest = p.clone();
    let mut coords = vec![F::zero(); deg + 1];
    for k in (0..=deg).rev() {
        let c = rest.coeff(k);
        if !c.is_zero() {
            rest = rest - members[k].scale(&c);
        }
        coords[k] = c;
    }
    debug_assert!(rest.is_zero());
    Ok(coords)
}

/// `Σ_k c_k B_k`.
pub fn from_basis<F: Field>(coords: &[F], members: &[Poly<F>]) -> Poly<F> {
    coords
        .iter()
        .zip(members)
        .filter(|(c, _)| !c.is_zero())
        .fold(Poly::zero(), |acc, (c, m)| acc + m.scale(c))
}

/// A state polynomial with time-dependent coefficients at a concrete time.
pub fn eval_in_time(p: &SpaceTimePolynomial, t: &Rational) -> Result<StatePolynomial> {
    let coeffs = p
        .coeffs()
        .iter()
        .map(|c| c.eval(t).ok_or_else(|| MprError::DegenerateAtPoint(t.to_string())))
        .collect::<Result<Vec<_>>>()?;
    Ok(Poly::from_coeffs(coeffs))
}

impl MartingaleFamily {
    /// The canonical family of a model with independent increments. Every
    /// member is certified against the model's transition kernel.
    pub fn build(model: MomentModel, n: usize) -> Result<Self> {
        let members = canonical_members(&model, n)?;
        let fam = Self::assemble(Arc::new(model), members, true)?;
        if let Some(k) = fam.certified.iter().position(|c| !c) {
            return Err(MprError::CertificationFailed {
                order: k,
                residual: fam.residuals[k].to_expr(&STATE_TWO_TIME_VARS),
            });
        }
        for k in 1..=n {
            if fam.cross.contains_key(&(k, k)) {
                fam.check_nondecreasing(k)?;
            }
        }
        Ok(fam)
    }

    /// A user-supplied family, normalized to be monic. Certification is
    /// recorded per member rather than enforced.
    pub fn from_members(model: MomentModel, members: Vec<SpaceTimePolynomial>) -> Result<Self> {
        if members.is_empty() {
            return Err(MprError::Malformed("empty family".into()));
        }
        if members.len() - 1 > model.max_order() {
            return Err(MprError::InsufficientMoments { needed: members.len() - 1, available: model.max_order() });
        }
        let mut normalized = Vec::with_capacity(members.len());
        for (k, m) in members.into_iter().enumerate() {
            if m.degree() != Some(k) {
                return Err(MprError::Malformed(format!("member {k} has degree {:?}", m.degree())));
            }
            let lead = m.leading().expect("nonzero member").clone();
            normalized.push(m.scale(&lead.recip()?));
        }
        let canonical = canonical_members(&model, normalized.len() - 1)? == normalized;
        Self::assemble(Arc::new(model), normalized, canonical)
    }

    fn assemble(model: Arc<MomentModel>, members: Vec<SpaceTimePolynomial>, canonical: bool) -> Result<Self> {
        let n = members.len() - 1;
        let at_t: Vec<TwoTimePolynomial> = members.iter().map(|m| m.map(at_later)).collect();
        let at_s: Vec<TwoTimePolynomial> = members.iter().map(|m| m.map(at_earlier)).collect();

        let kernel = transition_moments(&increment_moments(&model, n)?, n);
        let mut certified = Vec::with_capacity(n + 1);
        let mut residuals = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let image = at_t[k]
                .coeffs()
                .iter()
                .zip(&kernel)
                .fold(TwoTimePolynomial::zero(), |acc, (c, tk)| acc + tk.scale(c));
            let r = image - &at_s[k];
            certified.push(r.is_zero());
            residuals.push(r);
        }

        let cap = model.max_order();
        let mut cross = BTreeMap::new();
        for i in 0..=n {
            for j in i..=n {
                if i + j <= cap {
                    cross.insert((i, j), model.expect(&(&members[i] * &members[j]))?);
                }
            }
        }
        Ok(MartingaleFamily { model, members, canonical, certified, residuals, at_t, at_s, cross })
    }

    fn check_nondecreasing(&self, k: usize) -> Result<()> {
        let m = &self.cross[&(k, k)];
        let mut grid = default_grid();
        grid.insert(0, Rational::zero());
        let vals = grid
            .iter()
            .map(|t| m.eval(t).ok_or_else(|| MprError::DegenerateAtPoint(t.to_string())))
            .collect::<Result<Vec<_>>>()?;
        if !vals[0].is_zero() || vals.windows(2).any(|w| w[1] < w[0]) {
            return Err(MprError::InvalidModel(format!("m_{k}(t) = {} is not nondecreasing from 0", m.to_expr(&["t"]))));
        }
        Ok(())
    }

    pub fn model(&self) -> &MomentModel {
        &self.model
    }

    /// Highest member index `N`.
    pub fn order(&self) -> usize {
        self.members.len() - 1
    }

    pub fn members(&self) -> &[SpaceTimePolynomial] {
        &self.members
    }

    pub fn member(&self, n: usize) -> Result<&SpaceTimePolynomial> {
        self.members.get(n).ok_or(MprError::OrderOutOfRange { requested: n, available: self.order() })
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    pub fn certified(&self) -> &[bool] {
        &self.certified
    }

    pub fn is_certified(&self) -> bool {
        self.certified.iter().all(|&c| c)
    }

    /// `E(M_n(X_t, t) | X_s = x) - M_n(x, s)` under the transition kernel.
    pub fn certification_residual(&self, n: usize) -> &TwoTimePolynomial {
        &self.residuals[n]
    }

    /// Short label stating which family a verdict refers to.
    pub fn label(&self) -> String {
        format!(
            "{} family of {} (N = {})",
            if self.canonical { "canonical" } else { "user-supplied" },
            self.model.name(),
            self.order()
        )
    }

    /// Members evaluated at a concrete time.
    pub fn members_at(&self, t: &Rational) -> Result<Vec<StatePolynomial>> {
        self.members.iter().map(|m| eval_in_time(m, t)).collect()
    }

    pub fn structural_matrix(&self, n: usize) -> Result<RFMatrix> {
        if n > self.order() {
            return Err(MprError::OrderOutOfRange { requested: n, available: self.order() });
        }
        structural_matrix(&self.model, n)
    }

    /// Coordinates of `p` on `(M_0, ..., M_deg p)`.
    pub fn to_martingale_basis(&self, p: &SpaceTimePolynomial) -> Result<Vec<RationalFunctionOfTime>> {
        to_basis(p, &self.members)
    }

    pub fn from_martingale_basis(&self, coords: &[RationalFunctionOfTime]) -> SpaceTimePolynomial {
        from_basis(coords, &self.members)
    }

    /// `E(p(X_t, t) | F_s)` as a polynomial in `x = X_s`, identically in the
    /// independent symbols `s` and `t`.
    pub fn conditional_expectation(&self, p: &SpaceTimePolynomial) -> Result<TwoTimePolynomial> {
        let coords = to_basis(&p.map(at_later), &self.at_t)?;
        Ok(coords
            .iter()
            .zip(&self.at_s)
            .filter(|(c, _)| !c.is_zero())
            .fold(TwoTimePolynomial::zero(), |acc, (c, m)| acc + m.scale(c)))
    }

    /// `E(p(X_t, t) | X_s = x)` at concrete times `s ≤ t`.
    pub fn conditional_expectation_at(
        &self,
        p: &SpaceTimePolynomial,
        s: &Rational,
        t: &Rational,
    ) -> Result<StatePolynomial> {
        if s > t {
            return Err(MprError::TimeOrderViolation(format!("s = {s} > t = {t}")));
        }
        let coords = to_basis(&eval_in_time(p, t)?, &self.members_at(t)?)?;
        Ok(from_basis(&coords, &self.members_at(s)?))
    }
}
