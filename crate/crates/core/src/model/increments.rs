//! Moments of increments `γ_n(s, t) = E (X_t - X_s)^n` and the Lévy identity.

use num_traits::{One, Zero};

use super::MomentModel;
use crate::error::{MprError, Result};
use crate::field::{binomial, Field};
use crate::poly::Poly;
use crate::report::CheckReport;
use crate::symbols::{at_earlier, at_later, eval_two_time, on_diagonal, TWO_TIME_VARS};
use crate::{Rational, RationalFunctionOfTime, TwoTimeFunction, TwoTimePolynomial};

/// `γ_0..γ_n` as functions of the two independent times `s` and `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct IncrementMoments {
    gamma: Vec<TwoTimeFunction>,
}

impl IncrementMoments {
    pub fn order(&self) -> usize {
        self.gamma.len() - 1
    }

    pub fn gamma(&self, n: usize) -> &TwoTimeFunction {
        &self.gamma[n]
    }

    pub fn all(&self) -> &[TwoTimeFunction] {
        &self.gamma
    }

    /// `γ_n(s, t)` at concrete times.
    pub fn eval(&self, n: usize, s: &Rational, t: &Rational) -> Option<Rational> {
        eval_two_time(self.gamma.get(n)?, s, t)
    }
}

/// Deconvolve `g(t) = g(s) ⋆ γ(s, t)` (binomial convolution), which holds
/// whenever the increment `X_t - X_s` is independent of `X_s`.
pub fn increment_moments(model: &MomentModel, n: usize) -> Result<IncrementMoments> {
    if n > model.max_order() {
        return Err(MprError::OrderOutOfRange { requested: n, available: model.max_order() });
    }
    let gt: Vec<TwoTimeFunction> = model.moments()[..=n].iter().map(at_later).collect();
    let gs: Vec<TwoTimeFunction> = model.moments()[..=n].iter().map(at_earlier).collect();
    let mut gamma: Vec<TwoTimeFunction> = vec![TwoTimeFunction::one()];
    for k in 1..=n {
        let mut acc = gt[k].clone();
        for j in 1..=k {
            if gs[j].is_zero() || gamma[k - j].is_zero() {
                continue;
            }
            let c: TwoTimeFunction = binomial(k, j);
            acc = acc - &(c * &gs[j] * &gamma[k - j]);
        }
        gamma.push(acc);
    }
    for (k, g) in gamma.iter().enumerate().skip(1) {
        let diag = on_diagonal(g).ok_or_else(|| MprError::InvalidModel(format!("γ_{k} undefined on s = t")))?;
        if !diag.is_zero() {
            return Err(MprError::InvalidModel(format!(
                "γ_{k}(s, s) = {} does not vanish",
                diag.to_expr(&["s"])
            )));
        }
    }
    Ok(IncrementMoments { gamma })
}

/// `E(X_t^k | X_s = x) = Σ_j C(k, j) x^j γ_{k-j}(s, t)` for `k = 0..=n`, the
/// transition moments of a process with independent increments.
pub fn transition_moments(inc: &IncrementMoments, n: usize) -> Vec<TwoTimePolynomial> {
    (0..=n)
        .map(|k| {
            Poly::from_coeffs(
                (0..=k)
                    .map(|j| {
                        let c: TwoTimeFunction = binomial(k, j);
                        c * inc.gamma(k - j)
                    })
                    .collect(),
            )
        })
        .collect()
}

/// Stationarity of increments: `g_n(t - s) = Σ_j C(n, j) g_{n-j}(t) g_j(-s)`
/// for every `n ≤ N`. Residuals are rendered in `t` and `s`.
pub fn levy_check(model: &MomentModel, n_max: usize) -> Result<CheckReport> {
    if n_max > model.max_order() {
        return Err(MprError::OrderOutOfRange { requested: n_max, available: model.max_order() });
    }
    let polys = model.moments()[..=n_max]
        .iter()
        .enumerate()
        .map(|(n, g)| g.as_poly().cloned().ok_or(MprError::NonPolynomialTime(n)))
        .collect::<Result<Vec<_>>>()?;

    let shifted_arg: Poly<RationalFunctionOfTime> =
        Poly::from_coeffs(vec![-RationalFunctionOfTime::var(), RationalFunctionOfTime::one()]);
    let neg_t: Poly<Rational> = Poly::monomial(-Rational::one(), 1);

    let mut report = CheckReport::new("levy");
    report.note("moment generating function assumed to exist near 0 (not verifiable from finitely many moments)");
    for n in 0..=n_max {
        let lhs_poly = polys[n].map(|c| RationalFunctionOfTime::constant(c.clone())).compose(&shifted_arg);
        let lhs = TwoTimeFunction::from_poly(lhs_poly);
        let mut rhs = TwoTimeFunction::zero();
        for j in 0..=n {
            let g_t = at_later(&RationalFunctionOfTime::from_poly(polys[n - j].clone()));
            let g_neg_s = at_earlier(&RationalFunctionOfTime::from_poly(polys[j].compose(&neg_t)));
            let c: TwoTimeFunction = binomial(n, j);
            rhs = rhs + c * g_t * g_neg_s;
        }
        let residual = rhs - lhs;
        report.residual(format!("n={n}"), residual.to_expr(&TWO_TIME_VARS), residual.is_zero());
    }
    if !report.passed() {
        report.note("increments are not stationary: g_n(t - s) differs from the convolution of g(t) with g(-s)");
    }
    Ok(report)
}
