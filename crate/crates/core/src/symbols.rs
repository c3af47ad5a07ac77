//! Embeddings between the coefficient fields used for one-, two- and
//! three-point identities.
//!
//! A [`TwoTimeFunction`] is a rational function of `t` whose coefficients are
//! rational functions of `s`. A [`ThreePointFunction`] nests once more, with the
//! outermost symbol last in time.

use num_traits::Zero;

use crate::field::Field;
use crate::ratfunc::RatFunc;
use crate::{Rational, RationalFunctionOfTime, ThreePointFunction, TwoTimeFunction};

/// Variable names for rendering two-time expressions.
pub const TWO_TIME_VARS: [&str; 2] = ["t", "s"];
/// Variable names for rendering the state polynomial of a two-time expression.
pub const STATE_TWO_TIME_VARS: [&str; 3] = ["x", "t", "s"];
/// Variable names for the three-point symbols.
pub const THREE_POINT_VARS: [&str; 3] = ["m_u", "m_t", "m_s"];

pub fn rational(n: i64) -> Rational {
    Rational::from_int(n)
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(p.into(), q.into())
}

/// Render a function of `t`.
pub fn show(f: &RationalFunctionOfTime) -> String {
    f.to_expr(&["t"])
}

/// `f(t)` as a function of the later time.
pub fn at_later(f: &RationalFunctionOfTime) -> TwoTimeFunction {
    f.map_coeffs(|c| RatFunc::constant(c.clone())).expect("embedding preserves nonzero denominators")
}

/// `f(s)` as a function of the earlier time.
pub fn at_earlier(f: &RationalFunctionOfTime) -> TwoTimeFunction {
    RatFunc::constant(f.clone())
}

pub fn sym_s() -> TwoTimeFunction {
    RatFunc::constant(RatFunc::var())
}

pub fn sym_t() -> TwoTimeFunction {
    RatFunc::var()
}

/// Evaluate at concrete `(s, t)`; `None` if a denominator vanishes.
pub fn eval_two_time(f: &TwoTimeFunction, s: &Rational, t: &Rational) -> Option<Rational> {
    let at_s = |p: &crate::Poly<RationalFunctionOfTime>| -> Option<crate::Poly<Rational>> {
        let coeffs = p.coeffs().iter().map(|c| c.eval(s)).collect::<Option<Vec<_>>>()?;
        Some(crate::Poly::from_coeffs(coeffs))
    };
    let num = at_s(f.numer())?;
    let den = at_s(f.denom())?;
    let d = den.eval(t);
    if d.is_zero() {
        return None;
    }
    Some(num.eval(t) / d)
}

/// Set `t = s`, leaving a function of `s`.
pub fn on_diagonal(f: &TwoTimeFunction) -> Option<RationalFunctionOfTime> {
    f.eval(&RatFunc::var())
}

pub fn sym_m_s() -> ThreePointFunction {
    RatFunc::constant(RatFunc::constant(RatFunc::var()))
}

pub fn sym_m_t() -> ThreePointFunction {
    RatFunc::constant(RatFunc::var())
}

pub fn sym_m_u() -> ThreePointFunction {
    RatFunc::var()
}

pub fn lift3(c: &Rational) -> ThreePointFunction {
    RatFunc::constant(RatFunc::constant(RatFunc::constant(c.clone())))
}

/// Apply `f` (a function of `t`) at the three-point symbol `m`.
pub fn lift3_fn(f: &RationalFunctionOfTime, m: &ThreePointFunction) -> Option<ThreePointFunction> {
    let num = f.numer().coeffs().iter().rev().fold(ThreePointFunction::zero(), |acc, c| acc * m + &lift3(c));
    let den = f.denom().coeffs().iter().rev().fold(ThreePointFunction::zero(), |acc, c| acc * m + &lift3(c));
    num.checked_div(&den).ok()
}

/// Evaluate a three-point function at concrete `(m_s, m_t, m_u)`.
pub fn eval_three_point(
    f: &ThreePointFunction,
    m_s: &Rational,
    m_t: &Rational,
    m_u: &Rational,
) -> Option<Rational> {
    let inner = |c: &TwoTimeFunction| eval_two_time(c, m_s, m_t);
    let mut num_c = Vec::new();
    for c in f.numer().coeffs() {
        num_c.push(inner(c)?);
    }
    let mut den_c = Vec::new();
    for c in f.denom().coeffs() {
        den_c.push(inner(c)?);
    }
    let num = crate::Poly::from_coeffs(num_c);
    let den = crate::Poly::from_coeffs(den_c);
    let d = den.eval(m_u);
    if d.is_zero() {
        return None;
    }
    Some(num.eval(m_u) / d)
}
