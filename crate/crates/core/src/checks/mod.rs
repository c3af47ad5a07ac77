//! Executable structural characterizations. Every check returns a
//! [`CheckReport`](crate::CheckReport) carrying the extracted constants and
//! exact residuals.

mod harness;
mod qh;
mod structure;

use crate::error::{MprError, Result};
use crate::field::Field;
use crate::matrix::Matrix;
use crate::model::default_grid;
use crate::{Rational, RationalFunctionOfTime};

pub use harness::{check_harness, harness_coefficients, harness_coefficients_at, HarnessLevel};
pub use qh::{
    check_m2_reversed, mm_determinant_printed, mm_system, qh_closed_form, qh_closed_form_eval, qh_solve,
    qh_solve_symbolic, qh_structure_constants, QHCoefficients, QHStructure,
};
pub use structure::{
    check_independent_increments, check_orthogonality, check_reversed_martingale, constant_gram_schmidt,
    GramSchmidtResult,
};

/// Render a function of `t`.
pub(crate) fn show(f: &RationalFunctionOfTime) -> String {
    f.to_expr(&["t"])
}

/// Evaluation times for fits, in order of preference.
pub(crate) fn fit_points() -> Vec<Rational> {
    let mut pts = default_grid();
    pts.rotate_left(1);
    pts
}

/// Value at the first fit time where `f` is defined.
pub(crate) fn sample_value(f: &RationalFunctionOfTime) -> Option<Rational> {
    fit_points().iter().find_map(|t| f.eval(t))
}

/// Monic Gram–Schmidt on a Gram matrix `G[i][j] = <B_i, B_j>`.
///
/// Returns the unit lower-triangular `L` with `P_k = Σ_j L[k][j] B_j`
/// pairwise orthogonal, and the squared norms `<P_k, P_k>`.
pub fn monic_gram_schmidt<F: Field>(gram: &Matrix<F>) -> Result<(Matrix<F>, Vec<F>)> {
    let n = gram.rows();
    let mut l = Matrix::<F>::identity(n);
    let mut norms: Vec<F> = Vec::with_capacity(n);
    let inner = |a: &[F], b: &[F]| -> F {
        let mut acc = F::zero();
        for (i, ai) in a.iter().enumerate() {
            if ai.is_zero() {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                if !bj.is_zero() {
                    acc = acc + &(ai.clone() * bj * gram.get(i, j));
                }
            }
        }
        acc
    };
    for k in 0..n {
        let mut row: Vec<F> = l.row(k).to_vec();
        let ek = row.clone();
        for j in 0..k {
            let c = inner(&ek, l.row(j)) / &norms[j];
            if c.is_zero() {
                continue;
            }
            for (r, p) in row.iter_mut().zip(l.row(j)) {
                *r = r.clone() - &(c.clone() * p);
            }
        }
        for (col, v) in row.iter().enumerate() {
            l.set(k, col, v.clone());
        }
        let nk = inner(&row, &row);
        if nk.is_zero() {
            return Err(MprError::DegenerateAtPoint(format!("zero norm at order {k}")));
        }
        norms.push(nk);
    }
    Ok((l, norms))
}

/// Fit `f = α m + β` from two grid times where `m` differs, and return the
/// symbolic residual `f - (α m + β)`.
pub(crate) fn affine_fit(
    f: &RationalFunctionOfTime,
    m: &RationalFunctionOfTime,
) -> Result<(Rational, Rational, RationalFunctionOfTime)> {
    let pts: Vec<(Rational, Rational)> = fit_points()
        .iter().filter_map(|t| Some((m.eval(t)?, f.eval(t)?))).collect();
    let (p, q) = pts
        .iter()
        .enumerate()
        .find_map(|(i, p)| pts[i + 1..].iter().find(|q| q.0 != p.0).map(|q| (p, q)))
        .ok_or_else(|| MprError::DegenerateTriple("m_1 takes a single value on the grid".into()))?;
    let alpha = (&q.1 - &p.1) / (&q.0 - &p.0);
    let beta = &p.1 - &alpha * &p.0;
    let fit = m.clone() * RationalFunctionOfTime::constant(alpha.clone()) + RationalFunctionOfTime::constant(beta.clone());
    Ok((alpha, beta, f.clone() - fit))
}
