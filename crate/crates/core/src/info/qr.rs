//! Pivot-free Householder triangularization.
//!
//! Used for the small registration sub-problem of the measurement update and
//! as the reference factorization in tests and in the dense baseline filter.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Column-major working copy, so each reflector streams over contiguous memory.
pub(crate) struct ColMajor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ColMajor {
    pub(crate) fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub(crate) fn from_matrix(m: &Matrix) -> Self {
        let mut c = Self::zeros(m.rows(), m.cols());
        for i in 0..m.rows() {
            for (j, v) in m.row(i).iter().enumerate() {
                c.data[j * c.rows + i] = *v;
            }
        }
        c
    }

    #[inline]
    pub(crate) fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.rows + i] = v;
    }

    fn col_mut(&mut self, j: usize) -> &mut [f64] {
        let r = self.rows;
        &mut self.data[j * r..(j + 1) * r]
    }

    /// Reduces the first `reduce` columns to upper-triangular form, applying
    /// every reflector to the remaining columns as well. Afterwards the
    /// diagonal of the reduced part is non-negative.
    pub(crate) fn householder(&mut self, reduce: usize) {
        let m = self.rows;
        let steps = reduce.min(m).min(self.cols);
        let mut v = vec![0.0; m];
        for j in 0..steps {
            let col = &self.data[j * m..(j + 1) * m];
            let tail_sq: f64 = col[j + 1..].iter().map(|x| x * x).sum();
            if tail_sq == 0.0 {
                continue;
            }
            let alpha = col[j];
            let norm = libm::hypot(alpha, libm::sqrt(tail_sq));
            let beta = if alpha >= 0.0 { -norm } else { norm };
            let v0 = alpha - beta;
            v[j] = 1.0;
            for i in j + 1..m {
                v[i] = col[i] / v0;
            }
            let tau = (beta - alpha) / beta;
            {
                let c = self.col_mut(j);
                c[j] = beta;
                c[j + 1..].iter_mut().for_each(|x| *x = 0.0);
            }
            for k in j + 1..self.cols {
                let c = self.col_mut(k);
                let mut w = c[j];
                for i in j + 1..m {
                    w += v[i] * c[i];
                }
                if w == 0.0 {
                    continue;
                }
                let tw = tau * w;
                c[j] -= tw;
                for i in j + 1..m {
                    c[i] -= tw * v[i];
                }
            }
        }
        for j in 0..steps {
            if self.get(j, j) < 0.0 {
                for k in 0..self.cols {
                    let v = self.get(j, k);
                    self.set(j, k, -v);
                }
            }
        }
    }

    /// Top `rows × cols` block as a row-major matrix.
    pub(crate) fn top(&self, rows: usize) -> Matrix {
        let mut out = Matrix::zeros(rows, self.cols);
        for i in 0..rows.min(self.rows) {
            for j in 0..self.cols {
                out[(i, j)] = self.get(i, j);
            }
        }
        out
    }
}

/// Returns an upper-triangular `U` (`cols × cols`) with `UᵀU = MᵀM`.
///
/// No pivoting. Columns whose sub-diagonal part is already zero are left
/// untouched, so an upper-triangular input with positive diagonal comes back
/// unchanged. Rank-deficient input is accepted (zero diagonal entries).
pub fn dense_qr(m: &Matrix) -> Result<Matrix> {
    if !m.is_finite() {
        return Err(Error::NonFinite { what: "dense_qr input" });
    }
    let mut work = ColMajor::from_matrix(m);
    work.householder(m.cols());
    Ok(work.top(m.cols()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangular_input_is_returned_verbatim() {
        let m = Matrix::from_rows(&[[2.0, 1.0, -3.0], [0.0, 1.5, 0.25], [0.0, 0.0, 4.0]]);
        assert_eq!(dense_qr(&m).unwrap(), m);
    }

    #[test]
    fn column_of_ones() {
        let u = dense_qr(&Matrix::from_rows(&[[1.0], [1.0]])).unwrap();
        assert_eq!(u.rows(), 1);
        assert!((u[(0, 0)] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn wide_input_is_padded() {
        let m = Matrix::from_rows(&[[1.0, 2.0, 3.0]]);
        let u = dense_qr(&m).unwrap();
        assert_eq!((u.rows(), u.cols()), (3, 3));
        assert!(u.gram().sub(&m.gram()).max_abs() < 1e-14);
    }

    #[test]
    fn non_finite_rejected() {
        let m = Matrix::from_rows(&[[f64::NAN], [1.0]]);
        assert!(matches!(dense_qr(&m), Err(Error::NonFinite { .. })));
    }
}
