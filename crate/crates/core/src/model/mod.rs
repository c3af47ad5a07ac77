//! Processes presented by their raw moment functions `g_n(t) = E X_t^n`.

mod increments;
mod parse;

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};

use crate::error::{MprError, Result};
use crate::field::{binomial, Field};
use crate::matrix::Matrix;
use crate::poly::Poly;
use crate::symbols::ratio;
use crate::{Rational, RationalFunctionOfTime, SpaceTimePolynomial, TimePolynomial};

pub use increments::{increment_moments, levy_check, transition_moments, IncrementMoments};
pub use parse::parse_model;

/// Times at which moment feasibility is checked by default.
pub fn default_grid() -> Vec<Rational> {
    vec![ratio(1, 2), ratio(1, 1), ratio(2, 1), ratio(3, 1)]
}

/// Moment functions `g_0 = 1, g_1, ..., g_N` of a process started at 0.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentModel {
    name: String,
    g: Vec<RationalFunctionOfTime>,
}

impl MomentModel {
    /// Structural validation only: `g_0 = 1` and `g_n(0) = 0` for `n >= 1`.
    /// Moment feasibility is checked separately by [`MomentModel::check_feasibility`].
    pub fn new(name: impl Into<String>, g: Vec<RationalFunctionOfTime>) -> Result<Self> {
        if g.first().is_none_or(|g0| !g0.is_one()) {
            return Err(MprError::InvalidModel("g[0] must be identically 1".into()));
        }
        for (n, gn) in g.iter().enumerate().skip(1) {
            match gn.eval(&Rational::zero()) {
                Some(v) if v.is_zero() => {}
                _ => {
                    return Err(MprError::InvalidModel(format!(
                        "g[{n}](0) must vanish for a process started at 0"
                    )))
                }
            }
        }
        Ok(MomentModel { name: name.into(), g })
    }

    pub fn builtin(which: &Builtin, max_order: usize) -> Result<Self> {
        which.model(max_order)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn max_order(&self) -> usize {
        self.g.len() - 1
    }

    pub fn moments(&self) -> &[RationalFunctionOfTime] {
        &self.g
    }

    pub fn g(&self, n: usize) -> Result<&RationalFunctionOfTime> {
        self.g.get(n).ok_or(MprError::InsufficientMoments { needed: n, available: self.max_order() })
    }

    pub fn is_polynomial(&self) -> bool {
        self.g.iter().all(RationalFunctionOfTime::is_polynomial)
    }

    /// Same moment functions truncated to order `n`.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n > self.max_order() {
            return Err(MprError::OrderOutOfRange { requested: n, available: self.max_order() });
        }
        Ok(MomentModel { name: self.name.clone(), g: self.g[..=n].to_vec() })
    }

    /// `E p(X_t)` for a polynomial in the state with time-dependent coefficients.
    pub fn expect(&self, p: &SpaceTimePolynomial) -> Result<RationalFunctionOfTime> {
        let deg = p.degree().unwrap_or(0);
        if deg > self.max_order() {
            return Err(MprError::InsufficientMoments { needed: deg, available: self.max_order() });
        }
        Ok(p.coeffs()
            .iter()
            .zip(&self.g)
            .fold(RationalFunctionOfTime::zero(), |acc, (c, g)| acc + &(c.clone() * g)))
    }

    /// `E p(X_t)` at a concrete time.
    pub fn expect_at(&self, p: &Poly<Rational>, t: &Rational) -> Result<Rational> {
        let deg = p.degree().unwrap_or(0);
        if deg > self.max_order() {
            return Err(MprError::InsufficientMoments { needed: deg, available: self.max_order() });
        }
        let mut acc = Rational::zero();
        for (c, g) in p.coeffs().iter().zip(&self.g) {
            acc += c * self.value(g, t)?;
        }
        Ok(acc)
    }

    /// `g_n(t)` at a concrete time.
    pub fn moment_at(&self, n: usize, t: &Rational) -> Result<Rational> {
        self.value(self.g(n)?, t)
    }

    fn value(&self, g: &RationalFunctionOfTime, t: &Rational) -> Result<Rational> {
        g.eval(t).ok_or_else(|| MprError::InvalidModel(format!("moment function undefined at t = {t}")))
    }

    /// Truncated Hankel matrix `[g_{i+j}(t)]` of size `⌊N/2⌋ + 1`.
    pub fn hankel_at(&self, t: &Rational) -> Result<Matrix<Rational>> {
        let k = self.max_order() / 2;
        let mut data = Vec::with_capacity((k + 1) * (k + 1));
        for i in 0..=k {
            for j in 0..=k {
                data.push(self.moment_at(i + j, t)?);
            }
        }
        Matrix::new(k + 1, k + 1, data)
    }

    /// Every leading principal minor of the truncated Hankel matrix must be
    /// positive at every grid time.
    pub fn check_feasibility(&self, grid: &[Rational]) -> Result<()> {
        for t in grid {
            let h = self.hankel_at(t)?;
            for size in 1..=h.rows() {
                let minor = Matrix::new(
                    size,
                    size,
                    (0..size).flat_map(|i| h.row(i)[..size].to_vec()).collect(),
                )?;
                if !minor.determinant()?.is_positive() {
                    return Err(MprError::MomentInfeasible { t: t.to_string(), minor: size });
                }
            }
        }
        Ok(())
    }

    /// Canonical model-file text; [`parse_model`] inverts it for polynomial models.
    pub fn serialize(&self) -> Result<String> {
        let mut out = format!("model \"{}\"\n", self.name);
        for (n, g) in self.g.iter().enumerate().skip(1) {
            let p = g.as_poly().ok_or(MprError::NonPolynomialTime(n))?;
            out.push_str(&format!("g[{n}] = {}\n", p.to_expr(&["t"])));
        }
        Ok(out)
    }
}

/// Reference Lévy processes with exact moments.
#[derive(Clone, Debug, PartialEq)]
pub enum Builtin {
    Wiener,
    Poisson(Rational),
    /// Gamma subordinator with shape `t` and unit rate.
    Gamma,
    /// Compound Poisson with rate λ and symmetric ±1 jumps.
    BernoulliJumps(Rational),
}

impl Builtin {
    /// Cumulant `κ_n(t)`, always linear in `t` for these processes.
    pub fn cumulant(&self, n: usize) -> TimePolynomial {
        let t = |c: Rational| Poly::monomial(c, 1);
        match self {
            Builtin::Wiener if n == 2 => t(Rational::one()),
            Builtin::Wiener => Poly::zero(),
            Builtin::Poisson(l) => t(l.clone()),
            Builtin::Gamma => t((1..n).fold(Rational::one(), |acc, k| acc * Rational::from_int(k as i64))),
            Builtin::BernoulliJumps(l) if n.is_multiple_of(2) => t(l.clone()),
            Builtin::BernoulliJumps(_) => Poly::zero(),
        }
    }

    /// Moments from cumulants: `g_n = Σ_{k=1}^{n} C(n-1, k-1) κ_k g_{n-k}`.
    pub fn moments(&self, max_order: usize) -> Vec<TimePolynomial> {
        let mut g: Vec<TimePolynomial> = vec![Poly::one()];
        for n in 1..=max_order {
            let mut acc = Poly::zero();
            for k in 1..=n {
                let c: Rational = binomial(n - 1, k - 1);
                acc = acc + (&self.cumulant(k) * &g[n - k]).scale(&c);
            }
            g.push(acc);
        }
        g
    }

    pub fn model(&self, max_order: usize) -> Result<MomentModel> {
        if max_order < 2 {
            return Err(MprError::InvalidParameter(format!("model order {max_order} < 2")));
        }
        if let Builtin::Poisson(l) | Builtin::BernoulliJumps(l) = self {
            if !l.is_positive() {
                return Err(MprError::InvalidParameter(format!("rate {l} must be positive")));
            }
        }
        let g = self.moments(max_order).into_iter().map(RationalFunctionOfTime::from_poly).collect();
        MomentModel::new(self.to_string(), g)
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Builtin::Wiener => write!(f, "wiener"),
            Builtin::Poisson(l) => write!(f, "poisson({l})"),
            Builtin::Gamma => write!(f, "gamma"),
            Builtin::BernoulliJumps(l) => write!(f, "bernoulli-jumps({l})"),
        }
    }
}

impl FromStr for Builtin {
    type Err = MprError;

    /// Accepts `wiener`, `gamma`, `poisson:λ`, `poisson(λ)`, `bernoulli-jumps:λ`;
    /// rates default to 1.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, param) = if let Some((n, p)) = s.split_once(':') {
            (n, Some(p))
        } else if let Some((n, rest)) = s.split_once('(') {
            (n, Some(rest.strip_suffix(')').ok_or_else(|| MprError::UnknownModel(s.into()))?))
        } else {
            (s, None)
        };
        let rate = || -> Result<Rational> {
            match param {
                None => Ok(Rational::one()),
                Some(p) => crate::field::parse_rational(p)
                    .ok_or_else(|| MprError::InvalidParameter(format!("bad rate `{p}`"))),
            }
        };
        let no_param = |b: Builtin| match param {
            None => Ok(b),
            Some(p) => Err(MprError::InvalidParameter(format!("`{name}` takes no parameter (got `{p}`)"))),
        };
        match name {
            "wiener" => no_param(Builtin::Wiener),
            "gamma" => no_param(Builtin::Gamma),
            "poisson" => Ok(Builtin::Poisson(rate()?)),
            "bernoulli-jumps" => Ok(Builtin::BernoulliJumps(rate()?)),
            other => Err(MprError::UnknownModel(other.into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::rational;

    fn tp(c: &[i64]) -> TimePolynomial {
        Poly::from_coeffs(c.iter().map(|&v| rational(v)).collect())
    }

    fn moments_of(b: &Builtin, n: usize) -> Vec<TimePolynomial> {
        b.model(n).unwrap().moments().iter().map(|g| g.as_poly().unwrap().clone()).collect()
    }

    /// Gaussian moments E X^{2k} = (2k-1)!! t^k.
    #[test]
    fn wiener_moments_double_factorial() {
        let g = moments_of(&Builtin::Wiener, 8);
        for (n, gn) in g.iter().enumerate() {
            if n % 2 == 1 {
                assert!(gn.is_zero());
            } else {
                let k = n / 2;
                let df: i64 = (1..=k as i64).map(|i| 2 * i - 1).product();
                assert_eq!(gn, &Poly::monomial(rational(df), k));
            }
        }
        assert_eq!(g[4], tp(&[0, 0, 3]));
    }

    /// Touchard polynomials: E N^n = Σ_k S(n, k) (λt)^k.
    #[test]
    fn poisson_moments_touchard() {
        fn stirling2(n: usize, k: usize) -> i64 {
            match (n, k) {
                (0, 0) => 1,
                (_, 0) | (0, _) => 0,
                _ => k as i64 * stirling2(n - 1, k) + stirling2(n - 1, k - 1),
            }
        }
        let g = moments_of(&Builtin::Poisson(rational(1)), 7);
        for (n, gn) in g.iter().enumerate() {
            let expect = Poly::from_coeffs((0..=n).map(|k| rational(stirling2(n, k))).collect());
            assert_eq!(gn, &expect, "order {n}");
        }
        assert_eq!(g[3], tp(&[0, 1, 3, 1]));
        // rate 2 rescales time
        let g2 = moments_of(&Builtin::Poisson(rational(2)), 2);
        assert_eq!(g2[2], tp(&[0, 2, 4]));
    }

    /// Gamma(shape t): E X^n = t (t+1) ... (t+n-1).
    #[test]
    fn gamma_moments_rising_factorial() {
        let g = moments_of(&Builtin::Gamma, 6);
        for (n, gn) in g.iter().enumerate() {
            let rising = (0..n).fold(tp(&[1]), |acc, i| &acc * &tp(&[i as i64, 1]));
            assert_eq!(gn, &rising);
        }
        assert_eq!(g[2], tp(&[0, 1, 1]));
    }

    /// Symmetric ±1 jumps at rate λ: odd moments vanish, E X^2 = λt, E X^4 = λt + 3(λt)^2.
    #[test]
    fn bernoulli_jump_moments() {
        let g = moments_of(&Builtin::BernoulliJumps(rational(1)), 6);
        assert!(g[1].is_zero() && g[3].is_zero() && g[5].is_zero());
        assert_eq!(g[2], tp(&[0, 1]));
        assert_eq!(g[4], tp(&[0, 1, 3]));
    }

    #[test]
    fn builtin_names_round_trip() {
        for s in ["wiener", "gamma", "poisson(1)", "poisson(3/2)", "bernoulli-jumps(2)"] {
            let b: Builtin = s.parse().unwrap();
            assert_eq!(b.to_string(), s);
        }
        assert_eq!("poisson:1".parse::<Builtin>().unwrap(), Builtin::Poisson(rational(1)));
        assert!(matches!("levy".parse::<Builtin>(), Err(MprError::UnknownModel(_))));
        assert!(matches!(Builtin::Poisson(rational(0)).model(4), Err(MprError::InvalidParameter(_))));
        assert!(matches!(Builtin::Wiener.model(1), Err(MprError::InvalidParameter(_))));
    }

    #[test]
    fn builtins_are_feasible() {
        for b in [Builtin::Wiener, Builtin::Poisson(rational(1)), Builtin::Gamma, Builtin::BernoulliJumps(ratio(1, 2))] {
            b.model(8).unwrap().check_feasibility(&default_grid()).unwrap();
        }
    }

    #[test]
    fn origin_and_normalization_enforced() {
        let t = RationalFunctionOfTime::var();
        let one = RationalFunctionOfTime::one();
        assert!(MomentModel::new("bad", vec![t.clone(), t.clone()]).is_err());
        assert!(MomentModel::new("bad", vec![one.clone(), &t + &one]).is_err());
        assert!(MomentModel::new("ok", vec![one, t]).is_ok());
    }
}
