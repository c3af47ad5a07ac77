//! Monic orthogonal polynomials of marginal and transitional laws, computed
//! exactly from moments.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::checks::monic_gram_schmidt;
use crate::error::{MprError, Result};
use crate::family::{to_basis, MartingaleFamily};
use crate::matrix::{solve_linear, Matrix};
use crate::model::MomentModel;
use crate::poly::Poly;
use crate::{Rational, RationalFunctionOfTime, StatePolynomial};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Source {
    Marginal { t: String },
    Transitional { s: String, y: String, t: String },
}

impl Source {
    fn label(&self) -> String {
        match self {
            Source::Marginal { t } => t.clone(),
            Source::Transitional { s, y, t } => format!("(s, y, t) = ({s}, {y}, {t})"),
        }
    }
}

/// `p_0..p_K`, monic and pairwise orthogonal under the moment functional
/// `L(x^k) = moments[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthogonalSystem {
    pub source: Source,
    pub polys: Vec<StatePolynomial>,
    pub norms: Vec<Rational>,
    pub moments: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recurrence {
    /// `x p_k = p_{k+1} + b_k p_k + c_k p_{k-1}`
    pub b: Vec<String>,
    pub c: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalSystemJson {
    pub source: Source,
    pub polynomials: Vec<Vec<String>>,
    pub norms: Vec<String>,
    pub recurrence: Recurrence,
}

impl OrthogonalSystem {
    pub fn degree(&self) -> usize {
        self.polys.len() - 1
    }

    /// `L(p q)`; `None` if the product needs moments beyond those stored.
    pub fn functional(&self, p: &StatePolynomial) -> Option<Rational> {
        p.coeffs()
            .iter()
            .enumerate()
            .try_fold(Rational::zero(), |acc, (k, c)| Some(acc + c * self.moments.get(k)?))
    }

    pub fn inner(&self, i: usize, j: usize) -> Option<Rational> {
        self.functional(&(&self.polys[i] * &self.polys[j]))
    }

    /// Three-term recurrence coefficients `b_0..b_{K-1}` and `c_1..c_K`.
    pub fn recurrence(&self) -> (Vec<Rational>, Vec<Rational>) {
        let sub = |p: &StatePolynomial, k: usize| if k == 0 { Rational::zero() } else { p.coeff(k - 1) };
        let b = (0..self.degree())
            .map(|k| sub(&self.polys[k], k) - sub(&self.polys[k + 1], k + 1))
            .collect();
        let c = (1..=self.degree()).map(|k| &self.norms[k] / &self.norms[k - 1]).collect();
        (b, c)
    }

    pub fn to_json_value(&self) -> OrthogonalSystemJson {
        let strs = |v: &[Rational]| v.iter().map(ToString::to_string).collect::<Vec<_>>();
        let (b, c) = self.recurrence();
        OrthogonalSystemJson {
            source: self.source.clone(),
            polynomials: self.polys.iter().map(|p| strs(p.coeffs())).collect(),
            norms: strs(&self.norms),
            recurrence: Recurrence { b: strs(&b), c: strs(&c) },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("system serializes")
    }
}

fn hankel(moments: &[Rational], k: usize) -> Matrix<Rational> {
    let mut h = Matrix::zeros(k + 1, k + 1);
    for i in 0..=k {
        for j in 0..=k {
            h.set(i, j, moments[i + j].clone());
        }
    }
    h
}

/// Monic orthogonal polynomials from a moment sequence `ν_0..ν_{2K}`.
///
/// With Hankel determinants `D_k = det[ν_{i+j}]_{i,j≤k}`, `‖p_k‖² = D_k / D_{k-1}`;
/// the lower coefficients of `p_k` solve `Σ_j ν_{i+j} c_j = -ν_{i+k}`, `i < k`.
pub fn orthogonal_from_moments(moments: &[Rational], k_max: usize, source: Source) -> Result<OrthogonalSystem> {
    if moments.len() < 2 * k_max + 1 {
        return Err(MprError::InsufficientMoments { needed: 2 * k_max, available: moments.len().saturating_sub(1) });
    }
    let infeasible = |minor: usize| MprError::MomentInfeasible { t: source.label(), minor };
    let mut dets = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let d = hankel(moments, k).determinant()?;
        if d <= Rational::zero() {
            return Err(infeasible(k + 1));
        }
        dets.push(d);
    }
    let mut polys = vec![Poly::one()];
    for k in 1..=k_max {
        let rhs: Vec<Rational> = (0..k).map(|i| -moments[i + k].clone()).collect();
        let mut c = solve_linear(&hankel(moments, k - 1), &rhs)?;
        c.push(Rational::one());
        polys.push(Poly::from_coeffs(c));
    }
    let norms = (0..=k_max)
        .map(|k| if k == 0 { dets[0].clone() } else { &dets[k] / &dets[k - 1] })
        .collect();
    Ok(OrthogonalSystem { source, polys, norms, moments: moments[..=2 * k_max].to_vec() })
}

/// Orthogonal polynomials of the law of `X_t`.
pub fn marginal_orthogonal(model: &MomentModel, t: &Rational, k_max: usize) -> Result<OrthogonalSystem> {
    if 2 * k_max > model.max_order() {
        return Err(MprError::InsufficientMoments { needed: 2 * k_max, available: model.max_order() });
    }
    let moments = (0..=2 * k_max).map(|n| model.moment_at(n, t)).collect::<Result<Vec<_>>>()?;
    orthogonal_from_moments(&moments, k_max, Source::Marginal { t: t.to_string() })
}

/// `ν_k = E(X_t^k | X_s = y)`, `k = 0..K`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionalMomentSequence {
    pub s: Rational,
    pub y: Rational,
    pub t: Rational,
    pub nu: Vec<Rational>,
}

pub fn transitional_moments(
    fam: &MartingaleFamily,
    s: &Rational,
    y: &Rational,
    t: &Rational,
    k: usize,
) -> Result<TransitionalMomentSequence> {
    if s >= t {
        return Err(MprError::TimeOrderViolation(format!("need s < t, got s = {s}, t = {t}")));
    }
    if k > fam.order() {
        return Err(MprError::InsufficientMoments { needed: k, available: fam.order() });
    }
    let nu = (0..=k)
        .map(|n| {
            let xn = Poly::monomial(RationalFunctionOfTime::one(), n);
            Ok(fam.conditional_expectation_at(&xn, s, t)?.eval(y))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TransitionalMomentSequence { s: s.clone(), y: y.clone(), t: t.clone(), nu })
}

/// Gram–Schmidt of `{1} ∪ {p_n(x) = M_n(x, t) - M_n(y, s)}` under the
/// transitional law; every `p_n` must have transitional mean zero.
pub fn transitional_orthogonal(
    fam: &MartingaleFamily,
    s: &Rational,
    y: &Rational,
    t: &Rational,
    k_max: usize,
) -> Result<OrthogonalSystem> {
    if 2 * k_max > fam.order() {
        return Err(MprError::InsufficientMoments { needed: 2 * k_max, available: fam.order() });
    }
    let seq = transitional_moments(fam, s, y, t, 2 * k_max)?;
    let source = Source::Transitional { s: s.to_string(), y: y.to_string(), t: t.to_string() };
    for k in 0..=k_max {
        let d = hankel(&seq.nu, k).determinant()?;
        if d <= Rational::zero() {
            return Err(MprError::MomentInfeasible { t: source.label(), minor: k + 1 });
        }
    }
    let at_t = fam.members_at(t)?;
    let at_s = fam.members_at(s)?;
    let functional =
        |p: &StatePolynomial| p.coeffs().iter().zip(&seq.nu).fold(Rational::zero(), |acc, (c, v)| acc + c * v);
    let mut basis: Vec<StatePolynomial> = vec![Poly::one()];
    for n in 1..=k_max {
        let p = &at_t[n] - &Poly::constant(at_s[n].eval(y));
        let mean = functional(&p);
        if !mean.is_zero() {
            return Err(MprError::HypothesisViolated(format!("p_{n} has transitional mean {mean}, not 0")));
        }
        basis.push(p);
    }
    let mut gram = Matrix::zeros(k_max + 1, k_max + 1);
    for i in 0..=k_max {
        for j in 0..=k_max {
            gram.set(i, j, functional(&(&basis[i] * &basis[j])));
        }
    }
    let (l, norms) = monic_gram_schmidt(&gram)?;
    let polys = (0..=k_max)
        .map(|k| (0..=k).fold(Poly::zero(), |acc, j| acc + basis[j].scale(l.get(k, j))))
        .collect();
    Ok(OrthogonalSystem { source, polys, norms, moments: seq.nu })
}

/// Coefficients that can be tested for being constant in time.
pub trait ConstantCoefficient: crate::Field {
    fn as_rational(&self) -> Option<Rational>;
}

impl ConstantCoefficient for Rational {
    fn as_rational(&self) -> Option<Rational> {
        Some(self.clone())
    }
}

impl ConstantCoefficient for RationalFunctionOfTime {
    fn as_rational(&self) -> Option<Rational> {
        self.as_constant()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FamilyRelation {
    Equal,
    /// `A = L B` with a constant unit lower-triangular `L`.
    ConstantRecombination(Matrix<Rational>),
    Unrelated,
}

pub fn compare_families<F: ConstantCoefficient>(a: &[Poly<F>], b: &[Poly<F>]) -> FamilyRelation {
    if a == b {
        return FamilyRelation::Equal;
    }
    let shaped = |v: &[Poly<F>]| v.iter().enumerate().all(|(k, p)| p.degree() == Some(k) && p.is_monic());
    if a.len() != b.len() || !shaped(a) || !shaped(b) {
        return FamilyRelation::Unrelated;
    }
    let mut l = Matrix::zeros(a.len(), a.len());
    for (k, p) in a.iter().enumerate() {
        let Ok(coords) = to_basis(p, b) else {
            return FamilyRelation::Unrelated;
        };
        for (j, c) in coords.iter().enumerate() {
            match c.as_rational() {
                Some(r) => l.set(k, j, r),
                None => return FamilyRelation::Unrelated,
            }
        }
    }
    FamilyRelation::ConstantRecombination(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Builtin;
    use crate::symbols::{ratio, rational};

    fn sp(c: &[i64]) -> StatePolynomial {
        Poly::from_coeffs(c.iter().map(|&v| rational(v)).collect())
    }

    /// Monic Hermite for variance `v`, shifted to mean `m`:
    /// `h_{k+1} = (x - m) h_k - k v h_{k-1}`.
    fn hermite(k_max: usize, m: i64, v: i64) -> Vec<StatePolynomial> {
        let mut h = vec![sp(&[1]), sp(&[-m, 1])];
        for k in 1..k_max {
            let next = &(&sp(&[-m, 1]) * &h[k]) - &h[k - 1].scale(&rational(k as i64 * v));
            h.push(next);
        }
        h.truncate(k_max + 1);
        h
    }

    #[test]
    fn marginal_hermite() {
        let model = Builtin::Wiener.model(8).unwrap();
        let sys = marginal_orthogonal(&model, &rational(1), 4).unwrap();
        assert_eq!(sys.polys, hermite(4, 0, 1));
        assert_eq!(sys.polys[4], sp(&[3, 0, -6, 0, 1]));
        assert_eq!(sys.norms, [1, 1, 2, 6, 24].map(rational).to_vec());
        let (b, c) = sys.recurrence();
        assert!(b.iter().all(Zero::is_zero));
        assert_eq!(c, [1, 2, 3, 4].map(rational).to_vec());
        for i in 0..=4 {
            for j in 0..i {
                assert!(sys.inner(i, j).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn marginal_charlier() {
        let model = Builtin::Poisson(rational(1)).model(4).unwrap();
        let sys = marginal_orthogonal(&model, &rational(1), 2).unwrap();
        assert_eq!(sys.polys[2], sp(&[1, -3, 1]));
        let trivial = marginal_orthogonal(&model, &rational(1), 0).unwrap();
        assert_eq!((trivial.polys, trivial.norms), (vec![sp(&[1])], vec![rational(1)]));
        assert!(matches!(marginal_orthogonal(&model, &rational(1), 3), Err(MprError::InsufficientMoments { .. })));
    }

    #[test]
    fn degenerate_law_is_infeasible() {
        let model = Builtin::Wiener.model(4).unwrap();
        assert_eq!(
            marginal_orthogonal(&model, &rational(0), 1).unwrap_err(),
            MprError::MomentInfeasible { t: "0".into(), minor: 2 }
        );
    }

    #[test]
    fn transitional() {
        let w = MartingaleFamily::build(Builtin::Wiener.model(8).unwrap(), 6).unwrap();
        let nu = transitional_moments(&w, &rational(1), &rational(0), &rational(2), 2).unwrap().nu;
        assert_eq!(nu, [1, 0, 1].map(rational).to_vec());
        let nu = transitional_moments(&w, &rational(1), &rational(3), &rational(2), 1).unwrap().nu;
        assert_eq!(nu[1], rational(3));
        let sys = transitional_orthogonal(&w, &rational(1), &rational(0), &rational(2), 3).unwrap();
        assert_eq!(sys.polys, hermite(3, 0, 1));
        let sys = transitional_orthogonal(&w, &rational(1), &rational(2), &rational(3), 3).unwrap();
        assert_eq!(sys.polys, hermite(3, 2, 2));
        assert!(matches!(
            transitional_moments(&w, &rational(2), &rational(0), &rational(1), 2),
            Err(MprError::TimeOrderViolation(_))
        ));

        let p = MartingaleFamily::build(Builtin::Poisson(rational(1)).model(6).unwrap(), 4).unwrap();
        let nu = transitional_moments(&p, &rational(1), &rational(2), &rational(3), 1).unwrap().nu;
        assert_eq!(nu[1], rational(4));
        let sys = transitional_orthogonal(&p, &rational(1), &ratio(1, 2), &rational(3), 2).unwrap();
        for i in 0..=2 {
            for j in 0..i {
                assert!(sys.inner(i, j).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn family_comparison() {
        let w = MartingaleFamily::build(Builtin::Wiener.model(8).unwrap(), 4).unwrap();
        let sys = marginal_orthogonal(w.model(), &rational(1), 4).unwrap();
        assert_eq!(compare_families(&w.members_at(&rational(1)).unwrap(), &sys.polys), FamilyRelation::Equal);

        let p = MartingaleFamily::build(Builtin::Poisson(rational(1)).model(6).unwrap(), 2).unwrap();
        let charlier = crate::checks::constant_gram_schmidt(&p, 2).unwrap().family;
        match compare_families(charlier.members(), p.members()) {
            FamilyRelation::ConstantRecombination(l) => {
                assert_eq!(l.row(2), &[rational(0), rational(-1), rational(1)]);
            }
            other => panic!("{other:?}"),
        }

        let x = |c: &[RationalFunctionOfTime]| Poly::from_coeffs(c.to_vec());
        let one = RationalFunctionOfTime::one();
        let zero = RationalFunctionOfTime::zero();
        let t = RationalFunctionOfTime::var();
        let a = vec![x(&[one.clone()]), x(&[zero.clone(), one.clone()]), x(&[zero.clone(), zero.clone(), one.clone()])];
        let b = vec![x(&[one.clone()]), x(&[zero.clone(), one.clone()]), x(&[-t, zero, one])];
        assert_eq!(compare_families(&a, &b), FamilyRelation::Unrelated);
    }

    #[test]
    fn json_has_recurrence() {
        let model = Builtin::Wiener.model(4).unwrap();
        let j = marginal_orthogonal(&model, &rational(2), 2).unwrap().to_json_value();
        assert_eq!(j.recurrence.c, vec!["2", "4"]);
        assert_eq!(j.polynomials[2], vec!["-2", "0", "1"]);
        assert_eq!(j.source, Source::Marginal { t: "2".into() });
    }
}
