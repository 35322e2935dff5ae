//! Square-root information arrays and the kernels that manipulate them.
//!
//! A Gaussian `N(μ, Σ)` is carried as `[R, z]` with `R` upper triangular,
//! `μ = R⁻¹z` and `Σ = R⁻¹R⁻ᵀ`. The joint tracking state stacks `n` track
//! blocks followed by one trailing registration block; [`BlockLayout`]
//! records that partition. Measurement updates and time propagation are
//! orthogonal triangularizations ([`triangularize_x`], [`triangularize_y`])
//! that only touch the entries the block structure allows to be non-zero.

mod givens;
mod measurement;
mod propagation;
mod qr;
mod solve;

pub use givens::{make_givens, GivensRotation, RotationStats};
pub use measurement::{triangularize_x, update_in_place, MeasurementRows, MeasurementUpdate, XAssembly};
pub use propagation::{
    propagate_in_place, triangularize_y, triangularize_y_full, PropagationOutput, TrackTransition,
    YAssembly,
};
pub use qr::dense_qr;
pub use solve::{affine_push, back_substitute, marginalize_leading, solve_mean, BlockEstimate};

pub(crate) use qr::ColMajor;

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Column partition of a joint state: `tracks` blocks of `track_dim`
/// columns, then `reg_dim` registration columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockLayout {
    pub tracks: usize,
    pub track_dim: usize,
    pub reg_dim: usize,
}

impl BlockLayout {
    pub fn new(tracks: usize, track_dim: usize, reg_dim: usize) -> Self {
        Self { tracks, track_dim, reg_dim }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.tracks * self.track_dim + self.reg_dim
    }

    #[inline]
    pub fn track_cols(&self, slot: usize) -> Range<usize> {
        slot * self.track_dim..(slot + 1) * self.track_dim
    }

    #[inline]
    pub fn reg_offset(&self) -> usize {
        self.tracks * self.track_dim
    }

    #[inline]
    pub fn reg_cols(&self) -> Range<usize> {
        self.reg_offset()..self.dim()
    }

    /// Slot owning column `col`, or `None` for registration columns.
    pub fn slot_of(&self, col: usize) -> Option<usize> {
        (col < self.reg_offset()).then(|| col / self.track_dim)
    }
}

/// Information array `[R, z]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareRootInfo {
    pub r: Matrix,
    pub z: Vec<f64>,
}

impl SquareRootInfo {
    /// Validates shape and upper-triangularity (exact zeros below the diagonal).
    pub fn new(r: Matrix, z: Vec<f64>) -> Result<Self> {
        if !r.is_square() {
            return Err(Error::DimensionMismatch {
                expected: r.rows(),
                found: r.cols(),
                what: "information matrix columns",
            });
        }
        if z.len() != r.rows() {
            return Err(Error::DimensionMismatch {
                expected: r.rows(),
                found: z.len(),
                what: "information vector",
            });
        }
        if !r.is_upper_triangular() {
            return Err(Error::InvalidArgument("information matrix is not upper triangular"));
        }
        Ok(Self { r, z })
    }

    /// `[εI, ε·mean]`: negligible information centred on `mean`.
    pub fn noninformative(mean: &[f64], epsilon: f64) -> Self {
        let n = mean.len();
        Self {
            r: Matrix::from_diagonal(&vec![epsilon; n]),
            z: mean.iter().map(|m| epsilon * m).collect(),
        }
    }

    /// Empty (zero-dimensional) array.
    pub fn empty() -> Self {
        Self { r: Matrix::zeros(0, 0), z: Vec::new() }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.z.len()
    }

    pub fn is_finite(&self) -> bool {
        self.r.is_finite() && self.z.iter().all(|v| v.is_finite())
    }

    /// Dense mean `R⁻¹z`.
    pub fn mean(&self) -> Result<Vec<f64>> {
        self.r.solve_upper(&self.z)
    }

    /// Dense covariance `R⁻¹R⁻ᵀ`.
    pub fn covariance(&self) -> Result<Matrix> {
        let inv = self.r.inverse_upper()?;
        let mut p = inv.mul(&inv.transpose());
        p.symmetrize();
        Ok(p)
    }

    /// Information matrix `RᵀR`.
    pub fn information(&self) -> Matrix {
        self.r.gram()
    }

    /// Information vector `Rᵀz`.
    pub fn information_vector(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let zi = self.z[i];
            for (o, r) in out.iter_mut().zip(self.r.row(i)).skip(i) {
                *o += r * zi;
            }
        }
        out
    }

    /// Augmented `[R | z]`, the form the triangularizations operate on.
    pub fn augmented(&self) -> Matrix {
        let n = self.dim();
        let mut m = Matrix::zeros(n, n + 1);
        for i in 0..n {
            m.row_mut(i)[..n].copy_from_slice(self.r.row(i));
            m[(i, n)] = self.z[i];
        }
        m
    }

    /// Splits an augmented `[R | z]` back into an array.
    pub fn from_augmented(aug: &Matrix) -> Result<Self> {
        let n = aug.rows();
        if aug.cols() != n + 1 {
            return Err(Error::DimensionMismatch {
                expected: n + 1,
                found: aug.cols(),
                what: "augmented information array",
            });
        }
        let r = aug.block(0, 0, n, n);
        let z = aug.column(n);
        Self::new(r, z)
    }

    /// Largest magnitude found in the track-block positions that must be
    /// structurally zero (rows of one track, columns of another). Exactly
    /// `0.0` when the track block is block-diagonal.
    pub fn off_block_max(&self, layout: &BlockLayout) -> f64 {
        let mut worst: f64 = 0.0;
        for slot in 0..layout.tracks {
            for i in layout.track_cols(slot) {
                let row = self.r.row(i);
                for (j, v) in row[..layout.reg_offset()].iter().enumerate() {
                    if layout.slot_of(j) != Some(slot) {
                        worst = worst.max(v.abs());
                    }
                }
            }
        }
        worst
    }

    /// Bitwise check that every off-block track entry is `+0.0` or `-0.0`.
    pub fn is_block_diagonal(&self, layout: &BlockLayout) -> bool {
        self.off_block_max(layout) == 0.0
    }

    /// Finiteness of every entry the block structure allows to be non-zero.
    /// Linear in the number of tracks.
    pub fn is_finite_in(&self, layout: &BlockLayout) -> bool {
        let reg = layout.reg_cols();
        let rows_ok = (0..layout.tracks).all(|slot| {
            let cols = layout.track_cols(slot);
            cols.clone().all(|i| {
                let row = self.r.row(i);
                row[cols.clone()].iter().chain(&row[reg.clone()]).all(|v| v.is_finite())
            })
        });
        rows_ok
            && reg.clone().all(|i| self.r.row(i)[reg.clone()].iter().all(|v| v.is_finite()))
            && self.z.iter().all(|v| v.is_finite())
    }

    pub fn check_layout(&self, layout: &BlockLayout) -> Result<()> {
        if self.dim() != layout.dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.dim(),
                found: self.dim(),
                what: "information array vs layout",
            });
        }
        Ok(())
    }
}
