use alloc::vec::Vec;

use super::givens::{make_givens, RotationStats};
use super::{BlockLayout, SquareRootInfo};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Per-track linearized dynamics `x⁺ = Φx + Gw + u₂` with `w ~ [R_w, z_w]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackTransition {
    pub phi: Matrix,
    pub phi_inv: Matrix,
    pub g: Matrix,
    pub u2: Vec<f64>,
    pub noise: SquareRootInfo,
}

impl TrackTransition {
    /// Inverts `phi` numerically; fails when it is singular.
    pub fn new(phi: Matrix, g: Matrix, u2: Vec<f64>, noise: SquareRootInfo) -> Result<Self> {
        let phi_inv = phi.inverse()?;
        Self::with_inverse(phi, phi_inv, g, u2, noise)
    }

    /// Uses a caller-supplied (closed-form) inverse of `phi`.
    pub fn with_inverse(
        phi: Matrix,
        phi_inv: Matrix,
        g: Matrix,
        u2: Vec<f64>,
        noise: SquareRootInfo,
    ) -> Result<Self> {
        let n = phi.rows();
        if !phi.is_square() || phi_inv.rows() != n || phi_inv.cols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: phi.cols(), what: "transition matrix" });
        }
        if g.rows() != n || g.cols() != noise.dim() {
            return Err(Error::DimensionMismatch {
                expected: noise.dim(),
                found: g.cols(),
                what: "noise gain columns",
            });
        }
        if u2.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: u2.len(), what: "dynamics offset" });
        }
        if let Some(i) = (0..noise.dim()).find(|&i| noise.r[(i, i)] == 0.0) {
            return Err(Error::Singular { index: i });
        }
        Ok(Self { phi, phi_inv, g, u2, noise })
    }

    pub fn state_dim(&self) -> usize {
        self.phi.rows()
    }

    pub fn noise_dim(&self) -> usize {
        self.noise.dim()
    }
}

/// Time-propagation system: posterior over `(x, a)`, one transition per
/// track, registration held static.
#[derive(Debug, Clone)]
pub struct YAssembly {
    pub posterior: SquareRootInfo,
    pub layout: BlockLayout,
    pub transitions: Vec<TrackTransition>,
}

impl YAssembly {
    pub fn new(posterior: SquareRootInfo, layout: BlockLayout, transitions: Vec<TrackTransition>) -> Result<Self> {
        posterior.check_layout(&layout)?;
        if transitions.len() != layout.tracks {
            return Err(Error::DimensionMismatch {
                expected: layout.tracks,
                found: transitions.len(),
                what: "track transitions",
            });
        }
        if let Some(t) = transitions.iter().find(|t| t.state_dim() != layout.track_dim) {
            return Err(Error::DimensionMismatch {
                expected: layout.track_dim,
                found: t.state_dim(),
                what: "transition state dimension",
            });
        }
        Ok(Self { posterior, layout, transitions })
    }

    fn noise_offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.transitions.len() + 1);
        off.push(0);
        for t in &self.transitions {
            off.push(off.last().unwrap() + t.noise_dim());
        }
        off
    }

    /// Dense `Y = [A | b]` with columns `[w, x(t+1), a(t+1), rhs]` and rows
    /// `[noise rows; track rows; registration rows]`.
    pub fn to_dense(&self) -> Matrix {
        let layout = &self.layout;
        let off = self.noise_offsets();
        let nw = *off.last().unwrap();
        let d = layout.dim();
        let cols = nw + d + 1;
        let mut y = Matrix::zeros(nw + d, cols);
        for (t, tr) in self.transitions.iter().enumerate() {
            for i in 0..tr.noise_dim() {
                for j in 0..tr.noise_dim() {
                    y[(off[t] + i, off[t] + j)] = tr.noise.r[(i, j)];
                }
                y[(off[t] + i, cols - 1)] = tr.noise.z[i];
            }
        }
        let r = &self.posterior.r;
        for i in 0..d {
            let yrow = nw + i;
            let mut rhs = self.posterior.z[i];
            for (s, tr) in self.transitions.iter().enumerate() {
                let c0 = layout.track_cols(s).start;
                let seg = &r.row(i)[layout.track_cols(s)];
                if seg.iter().all(|v| *v == 0.0) {
                    continue;
                }
                let rd: Vec<f64> = (0..layout.track_dim)
                    .map(|j| seg.iter().enumerate().map(|(k, v)| v * tr.phi_inv[(k, j)]).sum())
                    .collect();
                for (j, v) in rd.iter().enumerate() {
                    y[(yrow, nw + c0 + j)] = *v;
                }
                for q in 0..tr.noise_dim() {
                    let v: f64 = rd.iter().enumerate().map(|(k, r)| r * tr.g[(k, q)]).sum();
                    y[(yrow, off[s] + q)] = -v;
                }
                rhs += rd.iter().zip(&tr.u2).map(|(a, b)| a * b).sum::<f64>();
            }
            for j in layout.reg_cols() {
                y[(yrow, nw + j)] = r[(i, j)];
            }
            y[(yrow, cols - 1)] = rhs;
        }
        y
    }
}

#[derive(Debug, Clone)]
pub struct PropagationOutput {
    /// Prior for the next epoch, `[R̃(t+1), z̃(t+1)]`.
    pub prior: SquareRootInfo,
    /// Per-track noise rows produced by the reduction and then dropped
    /// (marginalization over `w`). Each is `noise_dim × (noise_dim +
    /// track_dim + reg_dim + 1)` in local column order `[w_i, x_i, a, rhs]`.
    pub discarded: Vec<Matrix>,
    pub stats: RotationStats,
}

/// Triangularizes `Y` and returns the `(x(t+1), a(t+1))` block.
pub fn triangularize_y(y: YAssembly) -> Result<SquareRootInfo> {
    triangularize_y_full(y).map(|o| o.prior)
}

/// Same as [`triangularize_y`] but also returns the discarded noise rows.
pub fn triangularize_y_full(y: YAssembly) -> Result<PropagationOutput> {
    let YAssembly { posterior: mut info, layout, transitions } = y;
    let (discarded, stats) = propagate(&mut info, &layout, |slot| &transitions[slot], true)?;
    Ok(PropagationOutput { prior: info, discarded, stats })
}

/// In-place propagation with one transition shared by every track.
pub fn propagate_in_place(
    info: &mut SquareRootInfo,
    layout: &BlockLayout,
    transition: &TrackTransition,
) -> Result<RotationStats> {
    info.check_layout(layout)?;
    if transition.state_dim() != layout.track_dim {
        return Err(Error::DimensionMismatch {
            expected: layout.track_dim,
            found: transition.state_dim(),
            what: "transition state dimension",
        });
    }
    propagate(info, layout, |_| transition, false).map(|(_, stats)| stats)
}

/// Requires the track block of the posterior to be block-diagonal: only the
/// entries of each track's own block, the registration columns and the
/// right-hand side are read or written.
///
/// For each track the rows of `−R̂ᵢΦᵢ⁻¹Gᵢ` are cleared column by column
/// against the noise rows, then the fill-in below the diagonal of the
/// track's own block is removed with rotations between its rows. Rotations
/// skip pairs that are both exactly zero.
fn propagate<'a>(
    info: &mut SquareRootInfo,
    layout: &BlockLayout,
    transition: impl Fn(usize) -> &'a TrackTransition,
    keep: bool,
) -> Result<(Vec<Matrix>, RotationStats)> {
    if !info.is_finite_in(layout) {
        return Err(Error::NonFinite { what: "posterior information array" });
    }
    let td = layout.track_dim;
    let rd = layout.reg_dim;
    let reg0 = layout.reg_offset();
    let d = layout.dim();
    let mut stats = RotationStats::default();
    let mut discarded = Vec::new();
    let mut scratch = Matrix::zeros(0, 0);
    let mut rxgd = Matrix::zeros(0, 0);
    let mut block = Matrix::zeros(td, td);

    for slot in 0..layout.tracks {
        let tr = transition(slot);
        let cols = layout.track_cols(slot);
        let c0 = cols.start;
        let nw = tr.noise_dim();
        let width = nw + td + rd + 1;

        // R̂ᵢ ← R̂ᵢΦᵢ⁻¹, ẑᵢ ← ẑᵢ + R̂ᵢΦᵢ⁻¹u₂ᵢ
        for i in 0..td {
            let row = &info.r.row(c0 + i)[cols.clone()];
            for j in 0..td {
                block[(i, j)] = row.iter().enumerate().map(|(k, v)| v * tr.phi_inv[(k, j)]).sum();
            }
        }
        for i in 0..td {
            info.r.row_mut(c0 + i)[cols.clone()].copy_from_slice(block.row(i));
            let shift: f64 = block.row(i).iter().zip(&tr.u2).map(|(a, b)| a * b).sum();
            info.z[c0 + i] += shift;
        }

        if rxgd.rows() != td || rxgd.cols() != nw {
            rxgd = Matrix::zeros(td, nw);
        }
        for i in 0..td {
            for q in 0..nw {
                let v: f64 = block.row(i).iter().enumerate().map(|(k, r)| r * tr.g[(k, q)]).sum();
                rxgd[(i, q)] = -v;
            }
        }

        if scratch.rows() != nw || scratch.cols() != width {
            scratch = Matrix::zeros(nw, width);
        } else {
            scratch.fill(0.0);
        }
        for i in 0..nw {
            for j in i..nw {
                scratch[(i, j)] = tr.noise.r[(i, j)];
            }
            scratch[(i, width - 1)] = tr.noise.z[i];
        }

        for j in 0..nw {
            for i in 0..td {
                let beta = rxgd[(i, j)];
                if beta == 0.0 {
                    continue;
                }
                let g = make_givens(scratch[(j, j)], beta)?;
                stats.rotations += 1;
                let wrow = scratch.row_mut(j);
                let xrow = info.r.row_mut(c0 + i);
                let grow = rxgd.row_mut(i);
                wrow[j] = g.r;
                grow[j] = 0.0;
                stats.pair_updates += 1;
                stats.pair_updates += g.rotate_slices(&mut wrow[j + 1..nw], &mut grow[j + 1..]);
                stats.pair_updates += g.rotate_slices(&mut wrow[nw..nw + td], &mut xrow[cols.clone()]);
                stats.pair_updates += g.rotate_slices(&mut wrow[nw + td..nw + td + rd], &mut xrow[reg0..d]);
                stats.pair_updates += g.rotate_scalars(&mut wrow[width - 1], &mut info.z[c0 + i]);
            }
        }

        for j in 0..td {
            for i in j + 1..td {
                let beta = info.r[(c0 + i, c0 + j)];
                if beta == 0.0 {
                    continue;
                }
                let g = make_givens(info.r[(c0 + j, c0 + j)], beta)?;
                stats.rotations += 1;
                let (top, bot) = info.r.row_pair_mut(c0 + j, c0 + i);
                top[c0 + j] = g.r;
                bot[c0 + j] = 0.0;
                stats.pair_updates += 1;
                stats.pair_updates += g.rotate_slices(&mut top[c0 + j + 1..cols.end], &mut bot[c0 + j + 1..cols.end]);
                stats.pair_updates += g.rotate_slices(&mut top[reg0..d], &mut bot[reg0..d]);
                let (zt, zb) = pair_mut(&mut info.z, c0 + j, c0 + i);
                stats.pair_updates += g.rotate_scalars(zt, zb);
            }
        }

        if keep {
            discarded.push(scratch.clone());
        }
    }

    Ok((discarded, stats))
}

fn pair_mut(v: &mut [f64], a: usize, b: usize) -> (&mut f64, &mut f64) {
    debug_assert!(a < b);
    let (lo, hi) = v.split_at_mut(b);
    (&mut lo[a], &mut hi[0])
}
