//! Small row-major dense matrix used throughout the crate.
//!
//! Only the handful of operations the filters need are provided. Large
//! structured arrays are manipulated in place through [`Matrix::row_mut`] and
//! indexing rather than through whole-matrix arithmetic.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    /// Builds a matrix from row-major data. Panics if the length is wrong.
    pub fn from_row_slice(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data length mismatch");
        Self { rows, cols, data: data.to_vec() }
    }

    pub fn from_rows<const C: usize>(rows: &[[f64; C]]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * C);
        for r in rows {
            data.extend_from_slice(r);
        }
        Self { rows: rows.len(), cols: C, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|v| *v = value);
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Mutable access to two distinct rows at once.
    pub fn row_pair_mut(&mut self, a: usize, b: usize) -> (&mut [f64], &mut [f64]) {
        assert!(a != b, "row pair must be distinct");
        let c = self.cols;
        if a < b {
            let (lo, hi) = self.data.split_at_mut(b * c);
            (&mut lo[a * c..(a + 1) * c], &mut hi[..c])
        } else {
            let (lo, hi) = self.data.split_at_mut(a * c);
            (&mut hi[..c], &mut lo[b * c..(b + 1) * c])
        }
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = rhs.row(k);
                let dst = out.row_mut(i);
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "vector length differs from column count");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `selfᵀ · self`.
    pub fn gram(&self) -> Matrix {
        let mut g = Matrix::zeros(self.cols, self.cols);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..self.cols {
                let a = row[i];
                if a == 0.0 {
                    continue;
                }
                for j in i..self.cols {
                    g[(i, j)] += a * row[j];
                }
            }
        }
        for i in 0..self.cols {
            for j in 0..i {
                g[(i, j)] = g[(j, i)];
            }
        }
        g
    }

    pub fn add(&self, rhs: &Matrix) -> Matrix {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Matrix) -> Matrix {
        self.zip_with(rhs, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    fn zip_with(&self, rhs: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Copies the `rows × cols` sub-block starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Matrix {
        let mut b = Matrix::zeros(rows, cols);
        for i in 0..rows {
            b.row_mut(i).copy_from_slice(&self.row(r0 + i)[c0..c0 + cols]);
        }
        b
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, src: &Matrix) {
        for i in 0..src.rows {
            self.row_mut(r0 + i)[c0..c0 + src.cols].copy_from_slice(src.row(i));
        }
    }

    /// True when every entry strictly below the diagonal is exactly zero.
    pub fn is_upper_triangular(&self) -> bool {
        (0..self.rows).all(|i| self.row(i)[..i.min(self.cols)].iter().all(|v| *v == 0.0))
    }

    pub fn symmetrize(&mut self) {
        assert!(self.is_square());
        for i in 0..self.rows {
            for j in 0..i {
                let m = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = m;
                self[(j, i)] = m;
            }
        }
    }

    /// Solves `self · x = b` for upper-triangular `self` by back-substitution.
    pub fn solve_upper(&self, b: &[f64]) -> Result<Vec<f64>> {
        assert!(self.is_square() && b.len() == self.rows);
        let n = self.rows;
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            let d = self[(i, i)];
            if d == 0.0 || !d.is_finite() {
                return Err(Error::Singular { index: i });
            }
            let row = self.row(i);
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= row[j] * x[j];
            }
            x[i] = acc / d;
        }
        Ok(x)
    }

    /// Inverse of an upper-triangular matrix (result is upper triangular).
    pub fn inverse_upper(&self) -> Result<Matrix> {
        assert!(self.is_square());
        let n = self.rows;
        let mut inv = Matrix::zeros(n, n);
        for i in (0..n).rev() {
            let d = self[(i, i)];
            if d == 0.0 || !d.is_finite() {
                return Err(Error::Singular { index: i });
            }
            inv[(i, i)] = 1.0 / d;
            for j in i + 1..n {
                let mut acc = 0.0;
                for k in i + 1..=j {
                    acc += self[(i, k)] * inv[(k, j)];
                }
                inv[(i, j)] = -acc / d;
            }
        }
        Ok(inv)
    }

    /// LU factorization with partial pivoting.
    pub fn lu(&self) -> Result<Lu> {
        assert!(self.is_square(), "LU needs a square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = self.max_abs();
        for k in 0..n {
            let mut p = k;
            let mut best = a[(k, k)].abs();
            for i in k + 1..n {
                let v = a[(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || best <= scale * 1e-15 || !best.is_finite() {
                return Err(Error::Singular { index: k });
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let t = a[(k, j)];
                    a[(k, j)] = a[(p, j)];
                    a[(p, j)] = t;
                }
            }
            let pivot = a[(k, k)];
            for i in k + 1..n {
                let f = a[(i, k)] / pivot;
                a[(i, k)] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        a[(i, j)] -= f * a[(k, j)];
                    }
                }
            }
        }
        Ok(Lu { lu: a, perm })
    }

    pub fn inverse(&self) -> Result<Matrix> {
        let lu = self.lu()?;
        let n = self.rows;
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = lu.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }

    /// Cholesky factor `U` (upper triangular, positive diagonal) with `UᵀU = self`.
    pub fn cholesky_upper(&self) -> Result<Matrix> {
        assert!(self.is_square());
        let n = self.rows;
        let mut u = Matrix::zeros(n, n);
        for i in 0..n {
            let mut d = self[(i, i)];
            for k in 0..i {
                d -= u[(k, i)] * u[(k, i)];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { index: i });
            }
            let d = libm::sqrt(d);
            u[(i, i)] = d;
            for j in i + 1..n {
                let mut s = self[(i, j)];
                for k in 0..i {
                    s -= u[(k, i)] * u[(k, j)];
                }
                u[(i, j)] = s / d;
            }
        }
        Ok(u)
    }
}

pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let mut acc = x[i];
            for j in 0..i {
                acc -= row[j] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= row[j] * x[j];
            }
            x[i] = acc / row[i];
        }
        x
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}
