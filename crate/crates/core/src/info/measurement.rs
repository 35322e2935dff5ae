use alloc::vec;
use alloc::vec::Vec;

use super::givens::{make_givens, RotationStats};
use super::{BlockLayout, ColMajor, SquareRootInfo};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Whitened, linearized measurement rows `C_x x + C_a a = rhs` in sparse form.
///
/// Every row couples to at most one track block (stored as its slot and
/// `track_dim` coefficients) plus the full registration block.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRows {
    track_dim: usize,
    reg_dim: usize,
    slots: Vec<Option<usize>>,
    cx: Vec<f64>,
    ca: Vec<f64>,
    rhs: Vec<f64>,
}

impl MeasurementRows {
    pub fn new(track_dim: usize, reg_dim: usize) -> Self {
        Self { track_dim, reg_dim, slots: Vec::new(), cx: Vec::new(), ca: Vec::new(), rhs: Vec::new() }
    }

    pub fn with_capacity(track_dim: usize, reg_dim: usize, rows: usize) -> Self {
        Self {
            track_dim,
            reg_dim,
            slots: Vec::with_capacity(rows),
            cx: Vec::with_capacity(rows * track_dim),
            ca: Vec::with_capacity(rows * reg_dim),
            rhs: Vec::with_capacity(rows),
        }
    }

    pub fn len(&self) -> usize {
        self.rhs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rhs.is_empty()
    }

    pub fn track_dim(&self) -> usize {
        self.track_dim
    }

    pub fn reg_dim(&self) -> usize {
        self.reg_dim
    }

    pub fn push(&mut self, slot: Option<usize>, cx: &[f64], ca: &[f64], rhs: f64) -> Result<()> {
        if cx.len() != self.track_dim {
            return Err(Error::DimensionMismatch {
                expected: self.track_dim,
                found: cx.len(),
                what: "track jacobian row",
            });
        }
        if ca.len() != self.reg_dim {
            return Err(Error::DimensionMismatch {
                expected: self.reg_dim,
                found: ca.len(),
                what: "registration jacobian row",
            });
        }
        if !rhs.is_finite() || cx.iter().chain(ca).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "measurement row" });
        }
        if slot.is_none() && cx.iter().any(|v| *v != 0.0) {
            return Err(Error::InvalidArgument("track coefficients given without a track slot"));
        }
        self.slots.push(slot);
        self.cx.extend_from_slice(cx);
        self.ca.extend_from_slice(ca);
        self.rhs.push(rhs);
        Ok(())
    }

    /// Builds rows from dense Jacobians, enforcing that each row of `cx`
    /// touches the columns of at most one track block.
    pub fn from_dense(cx: &Matrix, ca: &Matrix, rhs: &[f64], layout: &BlockLayout) -> Result<Self> {
        let m = rhs.len();
        if cx.rows() != m || ca.rows() != m {
            return Err(Error::DimensionMismatch { expected: m, found: cx.rows(), what: "jacobian rows" });
        }
        if cx.cols() != layout.reg_offset() {
            return Err(Error::DimensionMismatch {
                expected: layout.reg_offset(),
                found: cx.cols(),
                what: "track jacobian columns",
            });
        }
        if ca.cols() != layout.reg_dim {
            return Err(Error::DimensionMismatch {
                expected: layout.reg_dim,
                found: ca.cols(),
                what: "registration jacobian columns",
            });
        }
        let mut out = Self::with_capacity(layout.track_dim, layout.reg_dim, m);
        let zeros = vec![0.0; layout.track_dim];
        for i in 0..m {
            let row = cx.row(i);
            let mut slot = None;
            for (j, v) in row.iter().enumerate() {
                if *v != 0.0 {
                    let s = j / layout.track_dim;
                    match slot {
                        None => slot = Some(s),
                        Some(prev) if prev != s => return Err(Error::CrossTrackRow { row: i }),
                        _ => {}
                    }
                }
            }
            let local: &[f64] = match slot {
                Some(s) => &row[layout.track_cols(s)],
                None => &zeros,
            };
            out.push(slot, local, ca.row(i), rhs[i])?;
        }
        Ok(out)
    }

    pub fn slot(&self, i: usize) -> Option<usize> {
        self.slots[i]
    }

    pub fn cx_row(&self, i: usize) -> &[f64] {
        &self.cx[i * self.track_dim..(i + 1) * self.track_dim]
    }

    pub fn ca_row(&self, i: usize) -> &[f64] {
        &self.ca[i * self.reg_dim..(i + 1) * self.reg_dim]
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Dense `[C_x C_a | rhs]` in the column order of `layout`.
    pub fn to_dense(&self, layout: &BlockLayout) -> Matrix {
        let d = layout.dim();
        let mut out = Matrix::zeros(self.len(), d + 1);
        for i in 0..self.len() {
            if let Some(s) = self.slots[i] {
                out.row_mut(i)[layout.track_cols(s)].copy_from_slice(self.cx_row(i));
            }
            out.row_mut(i)[layout.reg_cols()].copy_from_slice(self.ca_row(i));
            out[(i, d)] = self.rhs[i];
        }
        out
    }
}

/// The stacked measurement-update system `[[R̃, z̃], [C_x C_a, o − u₁]]`.
#[derive(Debug, Clone)]
pub struct XAssembly {
    pub prior: SquareRootInfo,
    pub layout: BlockLayout,
    pub rows: MeasurementRows,
}

impl XAssembly {
    pub fn new(prior: SquareRootInfo, layout: BlockLayout, rows: MeasurementRows) -> Result<Self> {
        validate(&prior, &layout, &rows)?;
        Ok(Self { prior, layout, rows })
    }

    /// Dense `(d + m) × (d + 1)` matrix of the assembled system.
    pub fn to_dense(&self) -> Matrix {
        let d = self.layout.dim();
        let m = self.rows.len();
        let mut x = Matrix::zeros(d + m, d + 1);
        x.set_block(0, 0, &self.prior.augmented());
        x.set_block(d, 0, &self.rows.to_dense(&self.layout));
        x
    }
}

fn validate(prior: &SquareRootInfo, layout: &BlockLayout, rows: &MeasurementRows) -> Result<()> {
    prior.check_layout(layout)?;
    if rows.track_dim != layout.track_dim || rows.reg_dim != layout.reg_dim {
        return Err(Error::DimensionMismatch {
            expected: layout.track_dim,
            found: rows.track_dim,
            what: "measurement rows vs layout",
        });
    }
    if let Some(bad) = rows.slots.iter().flatten().find(|s| **s >= layout.tracks) {
        return Err(Error::DimensionMismatch { expected: layout.tracks, found: *bad, what: "track slot" });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct MeasurementUpdate {
    pub posterior: SquareRootInfo,
    /// Post-rotation residual `e`; `‖e‖²` is the least-squares misfit.
    pub residual: Vec<f64>,
    pub stats: RotationStats,
}

impl MeasurementUpdate {
    pub fn residual_norm_sq(&self) -> f64 {
        self.residual.iter().map(|e| e * e).sum()
    }
}

/// Orthogonally reduces the stacked system to upper-triangular form.
///
/// Track-coefficient entries are eliminated column by column (left to right,
/// rows top to bottom) with Givens rotations against the matching diagonal
/// of the prior; a rotation only visits the pivot row's own track block, the
/// registration columns and the right-hand side, and skips pairs that are
/// both exactly zero, so off-block zeros of a block-diagonal prior are never
/// written. The leftover registration sub-problem is reduced with a dense
/// Householder factorization. The prior storage is reused for the posterior.
pub fn triangularize_x(x: XAssembly) -> Result<MeasurementUpdate> {
    let XAssembly { prior: mut info, layout, rows } = x;
    let (residual, stats) = update_in_place(&mut info, &layout, rows)?;
    Ok(MeasurementUpdate { posterior: info, residual, stats })
}

/// In-place form of [`triangularize_x`]: `info` is overwritten with the
/// posterior and the residual is returned. `info` is left untouched when
/// validation fails.
pub fn update_in_place(
    info: &mut SquareRootInfo,
    layout: &BlockLayout,
    mut rows: MeasurementRows,
) -> Result<(Vec<f64>, RotationStats)> {
    validate(info, layout, &rows)?;
    let layout = *layout;
    let mut stats = RotationStats::default();
    let m = rows.len();
    if m == 0 {
        return Ok((Vec::new(), stats));
    }
    if !info.is_finite_in(&layout) {
        return Err(Error::NonFinite { what: "prior information array" });
    }
    let d = layout.dim();
    let td = layout.track_dim;
    let rd = layout.reg_dim;
    let reg0 = layout.reg_offset();

    // Counting sort of row indices by slot keeps the top-to-bottom order.
    let mut start = vec![0usize; layout.tracks + 1];
    for s in rows.slots.iter().flatten() {
        start[s + 1] += 1;
    }
    for s in 0..layout.tracks {
        start[s + 1] += start[s];
    }
    let mut fill = start.clone();
    let mut order = vec![0usize; start[layout.tracks]];
    for (i, s) in rows.slots.iter().enumerate() {
        if let Some(s) = s {
            order[fill[*s]] = i;
            fill[*s] += 1;
        }
    }

    for slot in 0..layout.tracks {
        let cols = layout.track_cols(slot);
        let bucket = &order[start[slot]..start[slot + 1]];
        if bucket.is_empty() {
            continue;
        }
        for (jl, j) in cols.clone().enumerate() {
            for &i in bucket {
                let beta = rows.cx[i * td + jl];
                if beta == 0.0 {
                    continue;
                }
                let alpha = info.r[(j, j)];
                let g = make_givens(alpha, beta)?;
                stats.rotations += 1;
                let rrow = info.r.row_mut(j);
                let cx = &mut rows.cx[i * td..(i + 1) * td];
                rrow[j] = g.r;
                cx[jl] = 0.0;
                stats.pair_updates += 1;
                stats.pair_updates += g.rotate_slices(&mut rrow[j + 1..cols.end], &mut cx[jl + 1..]);
                stats.pair_updates +=
                    g.rotate_slices(&mut rrow[reg0..d], &mut rows.ca[i * rd..(i + 1) * rd]);
                stats.pair_updates += g.rotate_scalars(&mut info.z[j], &mut rows.rhs[i]);
            }
        }
    }

    let residual = if rd == 0 {
        rows.rhs
    } else {
        let mut lambda = ColMajor::zeros(rd + m, rd + 1);
        for i in 0..rd {
            let row = info.r.row(reg0 + i);
            for j in i..rd {
                lambda.set(i, j, row[reg0 + j]);
            }
            lambda.set(i, rd, info.z[reg0 + i]);
        }
        for i in 0..m {
            for (j, v) in rows.ca[i * rd..(i + 1) * rd].iter().enumerate() {
                lambda.set(rd + i, j, *v);
            }
            lambda.set(rd + i, rd, rows.rhs[i]);
        }
        lambda.householder(rd);
        for i in 0..rd {
            let row = info.r.row_mut(reg0 + i);
            for j in i..rd {
                row[reg0 + j] = lambda.get(i, j);
            }
            info.z[reg0 + i] = lambda.get(i, rd);
        }
        (0..m).map(|i| lambda.get(rd + i, rd)).collect()
    };

    Ok((residual, stats))
}
