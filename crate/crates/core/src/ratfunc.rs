//! Rational functions in one indeterminate over a [`Field`].
//!
//! `RatFunc<F>` is itself a [`Field`], so nesting it gives exact arithmetic in
//! several independent symbols: `RatFunc<RatFunc<Rational>>` is Q(s)(t) with
//! `t` outermost.
//!
//! Canonical form: numerator and denominator coprime, denominator monic, and
//! the zero function stored as `0 / 1`. Structural equality is therefore
//! equality of functions.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{FromPrimitive, One, Zero};

use crate::error::{MprError, Result};
use crate::field::Field;
use crate::poly::Poly;

#[derive(Clone, Debug, PartialEq)]
pub struct RatFunc<F> {
    num: Poly<F>,
    den: Poly<F>,
}

impl<F: Field> RatFunc<F> {
    /// Build `num / den` in canonical form.
    pub fn new(num: Poly<F>, den: Poly<F>) -> Result<Self> {
        if den.is_zero() {
            return Err(MprError::DivisionByZeroFunction);
        }
        Ok(Self::canonical(num, den))
    }

    /// Canonical form of `num / den` when the two are already coprime.
    fn normalized(num: Poly<F>, den: Poly<F>) -> Self {
        if num.is_zero() {
            return Self::zero();
        }
        let lc = den.leading().expect("nonzero denominator").clone();
        if lc.is_one() {
            RatFunc { num, den }
        } else {
            let inv = F::one() / &lc;
            RatFunc { num: num.scale(&inv), den: den.scale(&inv) }
        }
    }

    fn canonical(num: Poly<F>, den: Poly<F>) -> Self {
        if num.is_zero() {
            return Self::zero();
        }
        if den.is_constant() {
            let inv = F::one() / den.leading().expect("nonzero denominator");
            return RatFunc { num: num.scale(&inv), den: Poly::one() };
        }
        let g = num.gcd(&den);
        let (num, den) = if g.is_constant() {
            (num, den)
        } else {
            (num.div_rem(&g).0, den.div_rem(&g).0)
        };
        let lc = den.leading().expect("nonzero denominator").clone();
        if lc.is_one() {
            RatFunc { num, den }
        } else {
            let inv = F::one() / &lc;
            RatFunc { num: num.scale(&inv), den: den.scale(&inv) }
        }
    }

    pub fn from_poly(p: Poly<F>) -> Self {
        RatFunc { num: p, den: Poly::one() }
    }

    pub fn constant(c: F) -> Self {
        Self::from_poly(Poly::constant(c))
    }

    /// The indeterminate.
    pub fn var() -> Self {
        Self::from_poly(Poly::var())
    }

    pub fn numer(&self) -> &Poly<F> {
        &self.num
    }

    pub fn denom(&self) -> &Poly<F> {
        &self.den
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one_poly()
    }

    pub fn as_poly(&self) -> Option<&Poly<F>> {
        self.is_polynomial().then_some(&self.num)
    }

    pub fn is_constant(&self) -> bool {
        self.is_polynomial() && self.num.is_constant()
    }

    pub fn as_constant(&self) -> Option<F> {
        self.is_constant().then(|| self.num.coeff(0))
    }

    /// Exact division, reporting a zero divisor instead of panicking.
    pub fn checked_div(&self, rhs: &Self) -> Result<Self> {
        if rhs.is_zero() {
            return Err(MprError::DivisionByZeroFunction);
        }
        let inv = RatFunc::normalized(rhs.den.clone(), rhs.num.clone());
        Ok(self * &inv)
    }

    pub fn recip(&self) -> Result<Self> {
        Self::one().checked_div(self)
    }

    /// Value at a point; `None` when the denominator vanishes there.
    pub fn eval(&self, at: &F) -> Option<F> {
        let d = self.den.eval(at);
        if d.is_zero() {
            return None;
        }
        Some(self.num.eval(at) / d)
    }

    /// Substitute a polynomial for the indeterminate.
    pub fn compose_poly(&self, inner: &Poly<F>) -> Result<Self> {
        Self::new(self.num.compose(inner), self.den.compose(inner))
    }

    /// Apply `f` to every coefficient of numerator and denominator.
    pub fn map_coeffs<G: Field>(&self, f: impl Fn(&F) -> G) -> Result<RatFunc<G>> {
        RatFunc::new(self.num.map(&f), self.den.map(&f))
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }
}

impl<F: Field> Poly<F> {
    fn is_one_poly(&self) -> bool {
        self.degree() == Some(0) && self.coeff(0).is_one()
    }
}

impl<F: Field> Zero for RatFunc<F> {
    fn zero() -> Self {
        RatFunc { num: Poly::zero(), den: Poly::one() }
    }

    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
}

impl<F: Field> One for RatFunc<F> {
    fn one() -> Self {
        RatFunc { num: Poly::one(), den: Poly::one() }
    }
}

impl<F: Field> FromPrimitive for RatFunc<F> {
    fn from_i64(n: i64) -> Option<Self> {
        Some(Self::constant(F::from_int(n)))
    }

    fn from_u64(n: u64) -> Option<Self> {
        F::from_u64(n).map(Self::constant)
    }
}

impl<F: Field> Add<&RatFunc<F>> for &RatFunc<F> {
    type Output = RatFunc<F>;
    fn add(self, rhs: &RatFunc<F>) -> RatFunc<F> {
        if self.is_polynomial() && rhs.is_polynomial() {
            return RatFunc::from_poly(&self.num + &rhs.num);
        }
        if self.den == rhs.den {
            return RatFunc::canonical(&self.num + &rhs.num, self.den.clone());
        }
        // Henrici: only the common part of the denominators can cancel.
        let g = self.den.gcd(&rhs.den);
        if g.is_constant() {
            let num = &(&self.num * &rhs.den) + &(&rhs.num * &self.den);
            return RatFunc::normalized(num, &self.den * &rhs.den);
        }
        let d1 = self.den.div_rem(&g).0;
        let d2 = rhs.den.div_rem(&g).0;
        let num = &(&self.num * &d2) + &(&rhs.num * &d1);
        if num.is_zero() {
            return RatFunc::zero();
        }
        let g2 = num.gcd(&g);
        if g2.is_constant() {
            return RatFunc::normalized(num, &(&d1 * &d2) * &g);
        }
        RatFunc::normalized(num.div_rem(&g2).0, &(&d1 * &d2) * &g.div_rem(&g2).0)
    }
}

impl<F: Field> Sub<&RatFunc<F>> for &RatFunc<F> {
    type Output = RatFunc<F>;
    fn sub(self, rhs: &RatFunc<F>) -> RatFunc<F> {
        self + &(-rhs)
    }
}

impl<F: Field> Mul<&RatFunc<F>> for &RatFunc<F> {
    type Output = RatFunc<F>;
    fn mul(self, rhs: &RatFunc<F>) -> RatFunc<F> {
        if self.is_polynomial() && rhs.is_polynomial() {
            return RatFunc::from_poly(&self.num * &rhs.num);
        }
        if self.is_zero() || rhs.is_zero() {
            return RatFunc::zero();
        }
        let (n1, d2) = cancel(&self.num, &rhs.den);
        let (n2, d1) = cancel(&rhs.num, &self.den);
        RatFunc::normalized(&n1 * &n2, &d1 * &d2)
    }
}

/// Divide out the common factor of `a` and `b`.
fn cancel<F: Field>(a: &Poly<F>, b: &Poly<F>) -> (Poly<F>, Poly<F>) {
    if a.is_constant() || b.is_constant() {
        return (a.clone(), b.clone());
    }
    let g = a.gcd(b);
    if g.is_constant() {
        (a.clone(), b.clone())
    } else {
        (a.div_rem(&g).0, b.div_rem(&g).0)
    }
}

impl<F: Field> Div<&RatFunc<F>> for &RatFunc<F> {
    type Output = RatFunc<F>;
    /// Panics on division by the zero function; see [`RatFunc::checked_div`].
    fn div(self, rhs: &RatFunc<F>) -> RatFunc<F> {
        self.checked_div(rhs).expect("division by the zero function")
    }
}

impl<F: Field> Neg for &RatFunc<F> {
    type Output = RatFunc<F>;
    fn neg(self) -> RatFunc<F> {
        RatFunc { num: -&self.num, den: self.den.clone() }
    }
}

impl<F: Field> Neg for RatFunc<F> {
    type Output = RatFunc<F>;
    fn neg(self) -> RatFunc<F> {
        -&self
    }
}

macro_rules! forward_by_value {
    ($tr:ident, $m:ident) => {
        impl<F: Field> $tr<RatFunc<F>> for RatFunc<F> {
            type Output = RatFunc<F>;
            fn $m(self, rhs: RatFunc<F>) -> RatFunc<F> {
                (&self).$m(&rhs)
            }
        }
        impl<F: Field> $tr<&RatFunc<F>> for RatFunc<F> {
            type Output = RatFunc<F>;
            fn $m(self, rhs: &RatFunc<F>) -> RatFunc<F> {
                (&self).$m(rhs)
            }
        }
    };
}

forward_by_value!(Add, add);
forward_by_value!(Sub, sub);
forward_by_value!(Mul, mul);
forward_by_value!(Div, div);

impl<F: Field> Field for RatFunc<F> {
    const EXACT: bool = F::EXACT;
    const DEPTH: usize = F::DEPTH + 1;

    fn to_expr(&self, vars: &[&str]) -> String {
        let n = self.num.to_expr(vars);
        if self.is_polynomial() {
            return n;
        }
        let d = self.den.to_expr(vars);
        let wrap = |s: String| {
            if s.contains([' ', '/']) {
                format!("({s})")
            } else {
                s
            }
        };
        format!("{}/{}", wrap(n), wrap(d))
    }

    fn is_compound(&self) -> bool {
        !self.is_polynomial()
            || self.num.term_count() > 1
            || self.num.coeffs().iter().any(|c| c.is_compound())
    }
}
