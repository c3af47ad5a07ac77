//! Exact polynomial martingales for Markov processes with polynomial regression.
//!
//! The algebra layer ([`poly`], [`ratfunc`], [`matrix`]) is generic over a
//! [`Field`]; the probabilistic layers are instantiated over exact rationals
//! through the aliases below.
//!
//! * [`model`]: processes given by their moment functions `g_n(t) = E X_t^n`,
//!   builtin Lévy models, the model-file parser, increment moments and the
//!   Lévy identity.
//! * [`family`]: the polynomial martingale family, basis changes,
//!   conditional expectations, product linearizations and moments.
//! * [`checks`]: executable structural characterizations (independent
//!   increments, reversed martingales, orthogonality, harness, quadratic harness).
//! * [`orthopoly`]: orthogonal polynomials of marginal and transitional laws.

pub mod checks;
pub mod error;
pub mod family;
pub mod field;
pub mod matrix;
pub mod model;
pub mod orthopoly;
pub mod poly;
pub mod ratfunc;
pub mod report;
pub mod symbols;

pub use error::{MprError, Result};
pub use family::MartingaleFamily;
pub use field::Field;
pub use matrix::Matrix;
pub use model::{Builtin, MomentModel};
pub use poly::Poly;
pub use ratfunc::RatFunc;
pub use report::{CheckReport, Verdict};

/// Arbitrary-precision rational, always in lowest terms.
pub type Rational = num_rational::BigRational;
/// Polynomial in the time variable `t`.
pub type TimePolynomial = Poly<Rational>;
/// Rational function of `t`; coefficient field of every family member.
pub type RationalFunctionOfTime = RatFunc<Rational>;
/// Rational function of two independent times, `s` (inner) and `t` (outer).
pub type TwoTimeFunction = RatFunc<RationalFunctionOfTime>;
/// Rational function of three independent symbols, inner to outer `m_s, m_t, m_u`.
pub type ThreePointFunction = RatFunc<TwoTimeFunction>;
/// Polynomial in the state `x` with time-dependent coefficients.
pub type SpaceTimePolynomial = Poly<RationalFunctionOfTime>;
/// Polynomial in the state `x` with coefficients depending on `s` and `t`.
pub type TwoTimePolynomial = Poly<TwoTimeFunction>;
/// Matrix of rational functions of time.
pub type RFMatrix = Matrix<RationalFunctionOfTime>;
/// Polynomial in `x` evaluated at a fixed time.
pub type StatePolynomial = Poly<Rational>;
/// Double-precision polynomial, for simulation.
pub type FloatPolynomial = Poly<f64>;
