//! Scalar fields the algebra layer is generic over.
//!
//! Everything in [`crate::poly`], [`crate::ratfunc`] and [`crate::matrix`] is
//! written against [`Field`]. The exact pipeline instantiates it with
//! [`BigRational`] and with towers of rational functions over it; the
//! simulation side uses `f64`.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Zero};

/// A commutative field with by-value and by-reference arithmetic.
pub trait Field:
    Clone
    + PartialEq
    + Debug
    + Zero
    + One
    + FromPrimitive
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
{
    /// Whether arithmetic in this field is exact (zero tests are decidable).
    const EXACT: bool;

    /// Number of nested indeterminates carried by this field (0 for plain scalars).
    const DEPTH: usize;

    fn from_int(n: i64) -> Self {
        Self::from_i64(n).expect("integer embeds into every field")
    }

    /// Render the value using `vars[0]` for the outermost indeterminate.
    fn to_expr(&self, vars: &[&str]) -> String;

    /// True when the expression needs parentheses as a factor in a product.
    fn is_compound(&self) -> bool;
}

impl Field for BigRational {
    const EXACT: bool = true;
    const DEPTH: usize = 0;

    fn from_int(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn to_expr(&self, _vars: &[&str]) -> String {
        self.to_string()
    }

    fn is_compound(&self) -> bool {
        false
    }
}

macro_rules! float_field {
    ($t:ty) => {
        impl Field for $t {
            const EXACT: bool = false;
            const DEPTH: usize = 0;

            fn to_expr(&self, _vars: &[&str]) -> String {
                format!("{:?}", self)
            }

            fn is_compound(&self) -> bool {
                *self < 0.0
            }
        }
    };
}

float_field!(f64);
float_field!(f32);

/// Binomial coefficient C(n, k) as an element of `F`.
pub fn binomial<F: Field>(n: usize, k: usize) -> F {
    if k > n {
        return F::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    let v: i64 = acc.try_into().expect("binomial coefficient fits in i64");
    F::from_int(v)
}

/// Parse `"p/q"` or `"p"` into a rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                return None;
            }
            Some(BigRational::new(p, q))
        }
        None => Some(BigRational::from_integer(s.parse().ok()?)),
    }
}

/// Convert an exact rational to the nearest double.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or_else(|| {
        // numerator or denominator overflowed f64 on its own
        let n = r.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = r.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}
