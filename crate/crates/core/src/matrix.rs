//! Dense matrices over a [`Field`] with fraction-free (Bareiss) elimination.

use num_traits::Zero;

use crate::error::{MprError, Result};
use crate::field::Field;
use crate::ratfunc::RatFunc;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Field> Matrix<F> {
    pub fn new(rows: usize, cols: usize, data: Vec<F>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(MprError::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<F>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(MprError::ShapeMismatch("ragged rows".into()));
        }
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![F::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, F::one());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &F {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: F) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn map<G: Field>(&self, f: impl Fn(&F) -> G) -> Matrix<G> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn try_map<G: Field, E>(&self, f: impl Fn(&F) -> std::result::Result<G, E>) -> std::result::Result<Matrix<G>, E> {
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect::<std::result::Result<_, _>>()?,
        })
    }

    pub fn mul(&self, rhs: &Matrix<F>) -> Result<Matrix<F>> {
        if self.cols != rhs.rows {
            return Err(MprError::ShapeMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let mut acc = F::zero();
                for k in 0..self.cols {
                    let a = self.get(i, k);
                    if a.is_zero() {
                        continue;
                    }
                    acc = acc + &(a.clone() * rhs.get(k, j));
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[F]) -> Result<Vec<F>> {
        if v.len() != self.cols {
            return Err(MprError::ShapeMismatch(format!("vector of length {} for {} columns", v.len(), self.cols)));
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(F::zero(), |acc, (a, b)| acc + &(a.clone() * b))
            })
            .collect())
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_lower_triangular(&self) -> bool {
        (0..self.rows).all(|i| ((i + 1)..self.cols).all(|j| self.get(i, j).is_zero()))
    }

    /// Determinant by Bareiss elimination.
    pub fn determinant(&self) -> Result<F> {
        if !self.is_square() {
            return Err(MprError::ShapeMismatch("determinant of a non-square matrix".into()));
        }
        let mut work = self.clone();
        Ok(work.bareiss(self.rows).0)
    }

    /// Fraction-free forward elimination on the first `n` columns.
    ///
    /// Returns the determinant of the leading `n x n` block; the working matrix
    /// is left upper-triangular in those columns. Row swaps are tracked in the
    /// sign of the result.
    fn bareiss(&mut self, n: usize) -> (F, bool) {
        let mut prev = F::one();
        let mut negate = false;
        for k in 0..n {
            let Some(p) = (k..self.rows).find(|&i| !self.get(i, k).is_zero()) else {
                return (F::zero(), negate);
            };
            if p != k {
                for j in 0..self.cols {
                    self.data.swap(p * self.cols + j, k * self.cols + j);
                }
                negate = !negate;
            }
            let pivot = self.get(k, k).clone();
            for i in (k + 1)..self.rows {
                let lead = self.get(i, k).clone();
                for j in (k + 1)..self.cols {
                    let v = (self.get(i, j).clone() * &pivot - lead.clone() * self.get(k, j)) / &prev;
                    self.set(i, j, v);
                }
                self.set(i, k, F::zero());
            }
            prev = pivot;
        }
        let det = if negate { -prev } else { prev };
        (det, negate)
    }
}

/// Solve `a x = b` exactly.
pub fn solve_linear<F: Field>(a: &Matrix<F>, b: &[F]) -> Result<Vec<F>> {
    let n = a.rows();
    if !a.is_square() || b.len() != n {
        return Err(MprError::ShapeMismatch(format!(
            "{}x{} system with {} right-hand sides",
            a.rows(),
            a.cols(),
            b.len()
        )));
    }
    let mut aug = Matrix::zeros(n, n + 1);
    for i in 0..n {
        for j in 0..n {
            aug.set(i, j, a.get(i, j).clone());
        }
        aug.set(i, n, b[i].clone());
    }
    let (det, _) = aug.bareiss(n);
    if det.is_zero() {
        return Err(MprError::SingularSystem);
    }
    let mut x = vec![F::zero(); n];
    for i in (0..n).rev() {
        let mut acc = aug.get(i, n).clone();
        for j in (i + 1)..n {
            acc = acc - &(aug.get(i, j).clone() * &x[j]);
        }
        x[i] = acc / aug.get(i, i);
    }
    Ok(x)
}

/// Solve a rational-function system after evaluating it at a point.
///
/// `SingularSystem` when the determinant vanishes identically,
/// `DegenerateAtPoint` when it only vanishes (or an entry is undefined) at `at`.
pub fn solve_at_point<F: Field>(
    a: &Matrix<RatFunc<F>>,
    b: &[RatFunc<F>],
    at: &F,
) -> Result<Vec<F>> {
    if a.determinant()?.is_zero() {
        return Err(MprError::SingularSystem);
    }
    let undefined = || MprError::DegenerateAtPoint(format!("{at:?}"));
    let a0 = a.try_map(|e| e.eval(at).ok_or_else(undefined))?;
    let b0: Vec<F> = b.iter().map(|e| e.eval(at).ok_or_else(undefined)).collect::<Result<_>>()?;
    solve_linear(&a0, &b0).map_err(|e| match e {
        MprError::SingularSystem => undefined(),
        other => other,
    })
}
