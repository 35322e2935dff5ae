#![allow(dead_code)]

use jtr_core::info::{triangularize_y_full, BlockLayout, MeasurementRows, TrackTransition, YAssembly};
use jtr_core::{Matrix, SquareRootInfo};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const TD: usize = 4;
pub const RD: usize = 3;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut impl Rng) -> f64 {
    // Box-Muller; good enough for test inputs.
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn diag_entry(rng: &mut impl Rng) -> f64 {
    let v = rng.gen_range(0.5..3.0);
    if rng.gen_bool(0.5) {
        v
    } else {
        -v
    }
}

/// Upper-triangular `[R, z]` whose track block is block-diagonal, with
/// random coupling into the registration columns.
pub fn random_prior(rng: &mut impl Rng, tracks: usize, sensors: usize) -> (SquareRootInfo, BlockLayout) {
    let layout = BlockLayout::new(tracks, TD, RD * sensors);
    let d = layout.dim();
    let reg0 = layout.reg_offset();
    let mut r = Matrix::zeros(d, d);
    for slot in 0..tracks {
        let cols = layout.track_cols(slot);
        for i in cols.clone() {
            r[(i, i)] = diag_entry(rng);
            for j in i + 1..cols.end {
                r[(i, j)] = normal(rng);
            }
            for j in reg0..d {
                r[(i, j)] = normal(rng);
            }
        }
    }
    for i in reg0..d {
        r[(i, i)] = diag_entry(rng);
        for j in i + 1..d {
            r[(i, j)] = normal(rng);
        }
    }
    let z = (0..d).map(|_| normal(rng)).collect();
    (SquareRootInfo::new(r, z).unwrap(), layout)
}

/// `m` rows; most touch one random track slot, some only the registration.
pub fn random_rows(rng: &mut impl Rng, layout: &BlockLayout, m: usize) -> MeasurementRows {
    let mut rows = MeasurementRows::new(TD, layout.reg_dim);
    for _ in 0..m {
        let slot = if layout.tracks > 0 && rng.gen_bool(0.85) { Some(rng.gen_range(0..layout.tracks)) } else { None };
        let cx: Vec<f64> = (0..TD).map(|_| if slot.is_some() { normal(rng) } else { 0.0 }).collect();
        let ca: Vec<f64> = (0..layout.reg_dim).map(|_| if rng.gen_bool(0.7) { normal(rng) } else { 0.0 }).collect();
        rows.push(slot, &cx, &ca, normal(rng)).unwrap();
    }
    rows
}

/// Random invertible dynamics with `nw` noise inputs.
pub fn random_transition(rng: &mut impl Rng, nw: usize) -> TrackTransition {
    let mut phi = Matrix::identity(TD);
    for i in 0..TD {
        for j in 0..TD {
            phi[(i, j)] += 0.3 * normal(rng);
        }
    }
    let mut g = Matrix::zeros(TD, nw);
    for i in 0..TD {
        for j in 0..nw {
            g[(i, j)] = normal(rng);
        }
    }
    let mut rw = Matrix::zeros(nw, nw);
    for i in 0..nw {
        rw[(i, i)] = diag_entry(rng);
        for j in i + 1..nw {
            rw[(i, j)] = 0.5 * normal(rng);
        }
    }
    let zw = (0..nw).map(|_| 0.3 * normal(rng)).collect();
    let u2 = (0..TD).map(|_| normal(rng)).collect();
    TrackTransition::new(phi, g, u2, SquareRootInfo::new(rw, zw).unwrap()).unwrap()
}

pub fn random_y(rng: &mut impl Rng, tracks: usize, sensors: usize) -> YAssembly {
    let (prior, layout) = random_prior(rng, tracks, sensors);
    let transitions = (0..tracks)
        .map(|_| {
            let nw = rng.gen_range(1..=TD);
            random_transition(rng, nw)
        }).collect();
    YAssembly::new(prior, layout, transitions).unwrap()
}

pub fn na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

pub fn na_vec(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

pub fn rel_fro(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

pub fn rel_vec(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

/// Largest magnitude among track-block entries outside each track's own
/// columns (registration columns excluded).
pub fn off_block(info: &SquareRootInfo, layout: &BlockLayout) -> f64 {
    let mut worst: f64 = 0.0;
    for slot in 0..layout.tracks {
        let own = layout.track_cols(slot);
        for i in own.clone() {
            for j in 0..layout.reg_offset() {
                if !own.contains(&j) {
                    worst = worst.max(info.r[(i, j)].abs());
                }
            }
        }
    }
    worst
}

/// Full triangular factor of a propagation: dropped noise rows on top of
/// the new prior, in the column order of `Y::to_dense`.
pub fn y_factor(y: &YAssembly) -> Matrix {
    let layout = y.layout;
    let nws: Vec<usize> = y.transitions.iter().map(|t| t.noise_dim()).collect();
    let nw: usize = nws.iter().sum();
    let d = layout.dim();
    let out = triangularize_y_full(y.clone()).unwrap();
    let mut u = Matrix::zeros(nw + d, nw + d + 1);
    let mut row = 0;
    let mut w0 = 0;
    for (slot, rows) in out.discarded.iter().enumerate() {
        let k = nws[slot];
        let c0 = layout.track_cols(slot).start;
        for i in 0..k {
            let src = rows.row(i);
            let dst = u.row_mut(row);
            dst[w0..w0 + k].copy_from_slice(&src[..k]);
            dst[nw + c0..nw + c0 + TD].copy_from_slice(&src[k..k + TD]);
            dst[nw + layout.reg_offset()..nw + d].copy_from_slice(&src[k + TD..k + TD + layout.reg_dim]);
            dst[nw + d] = src[k + TD + layout.reg_dim];
            row += 1;
        }
        w0 += k;
    }
    u.set_block(nw, nw, &out.prior.augmented());
    u
}
