use alloc::vec::Vec;

use super::{dense_qr, BlockLayout, SquareRootInfo};
use crate::error::{Block, Error, Result};
use crate::matrix::Matrix;

/// Solved moments of a block-structured information array.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockEstimate {
    /// Full mean, in layout column order.
    pub mean: Vec<f64>,
    pub track_covariances: Vec<Matrix>,
    /// Cross covariance between each track and the registration block.
    pub track_registration_cross: Vec<Matrix>,
    pub registration_covariance: Matrix,
}

impl BlockEstimate {
    pub fn track_mean<'a>(&'a self, layout: &BlockLayout, slot: usize) -> &'a [f64] {
        &self.mean[layout.track_cols(slot)]
    }

    pub fn registration_mean<'a>(&'a self, layout: &BlockLayout) -> &'a [f64] {
        &self.mean[layout.reg_cols()]
    }
}

/// Block back-substitution for `[[R_x, R_xa], [0, R_a]] s = z` with
/// block-diagonal `R_x`.
///
/// ```text
/// a   = R_a⁻¹ z_a
/// xᵢ  = R_xᵢ⁻¹ (z_xᵢ − R_xᵢa a)
/// P_a = R_a⁻¹ R_a⁻ᵀ
/// P_xᵢ = R_xᵢ⁻¹ R_xᵢ⁻ᵀ + R_xᵢ⁻¹ R_xᵢa P_a R_xᵢaᵀ R_xᵢ⁻ᵀ
/// P_xᵢa = −R_xᵢ⁻¹ R_xᵢa P_a
/// ```
///
/// The registration solve carries `z_a` and the track covariance cross term
/// is sandwiched by `R_xᵢ⁻¹` (not `R_a⁻¹`); both forms are what a dense
/// inverse of the full factor reproduces. Cost is linear in the number of
/// tracks. Entries outside each track's own block are not read.
pub fn back_substitute(info: &SquareRootInfo, layout: &BlockLayout) -> Result<BlockEstimate> {
    info.check_layout(layout)?;
    let td = layout.track_dim;
    let rd = layout.reg_dim;
    let reg0 = layout.reg_offset();

    let r_a = info.r.block(reg0, reg0, rd, rd);
    let to_reg = |e: Error| match e {
        Error::Singular { index } => Error::SingularBlock { block: Block::Registration, index: reg0 + index },
        other => other,
    };
    let a = r_a.solve_upper(&info.z[reg0..]).map_err(to_reg)?;
    let ra_inv = r_a.inverse_upper().map_err(to_reg)?;
    let mut p_a = ra_inv.mul(&ra_inv.transpose());
    p_a.symmetrize();

    let mut mean = Vec::with_capacity(layout.dim());
    let mut covs = Vec::with_capacity(layout.tracks);
    let mut cross = Vec::with_capacity(layout.tracks);
    for slot in 0..layout.tracks {
        let c0 = layout.track_cols(slot).start;
        let to_track = |e: Error| match e {
            Error::Singular { index } => Error::SingularBlock { block: Block::Track(slot), index: c0 + index },
            other => other,
        };
        let r_i = info.r.block(c0, c0, td, td);
        let r_ia = info.r.block(c0, reg0, td, rd);
        let rhs: Vec<f64> = (0..td)
            .map(|i| info.z[c0 + i] - r_ia.row(i).iter().zip(&a).map(|(r, v)| r * v).sum::<f64>())
            .collect();
        mean.extend(r_i.solve_upper(&rhs).map_err(to_track)?);

        let ri_inv = r_i.inverse_upper().map_err(to_track)?;
        let gain = ri_inv.mul(&r_ia);
        let gain_pa = gain.mul(&p_a);
        let mut p_i = ri_inv.mul(&ri_inv.transpose()).add(&gain_pa.mul(&gain.transpose()));
        p_i.symmetrize();
        covs.push(p_i);
        cross.push(gain_pa.scale(-1.0));
    }
    mean.extend(a);

    Ok(BlockEstimate {
        mean,
        track_covariances: covs,
        track_registration_cross: cross,
        registration_covariance: p_a,
    })
}

/// Mean only, by the same block back-substitution. Linear in the number of
/// tracks.
pub fn solve_mean(info: &SquareRootInfo, layout: &BlockLayout) -> Result<Vec<f64>> {
    info.check_layout(layout)?;
    let td = layout.track_dim;
    let rd = layout.reg_dim;
    let reg0 = layout.reg_offset();
    let mut mean = alloc::vec![0.0; layout.dim()];
    for i in (reg0..reg0 + rd).rev() {
        let row = info.r.row(i);
        let acc = info.z[i] - (i + 1..reg0 + rd).map(|j| row[j] * mean[j]).sum::<f64>();
        let d = row[i];
        if d == 0.0 || !d.is_finite() {
            return Err(Error::SingularBlock { block: Block::Registration, index: i });
        }
        mean[i] = acc / d;
    }
    for slot in 0..layout.tracks {
        let c0 = layout.track_cols(slot).start;
        for i in (c0..c0 + td).rev() {
            let row = info.r.row(i);
            let mut acc = info.z[i];
            acc -= (i + 1..c0 + td).map(|j| row[j] * mean[j]).sum::<f64>();
            acc -= (reg0..reg0 + rd).map(|j| row[j] * mean[j]).sum::<f64>();
            let d = row[i];
            if d == 0.0 || !d.is_finite() {
                return Err(Error::SingularBlock { block: Block::Track(slot), index: i });
            }
            mean[i] = acc / d;
        }
    }
    Ok(mean)
}

/// Marginal of the trailing variables: drops the leading `lead_dims` rows
/// and columns of an upper-triangular array.
pub fn marginalize_leading(info: &SquareRootInfo, lead_dims: usize) -> Result<SquareRootInfo> {
    let d = info.dim();
    if lead_dims >= d {
        return Err(Error::InvalidArgument("cannot marginalize every variable"));
    }
    let keep = d - lead_dims;
    Ok(SquareRootInfo {
        r: info.r.block(lead_dims, lead_dims, keep, keep),
        z: info.z[lead_dims..].to_vec(),
    })
}

/// Information array of `ω = αρ + β` for `ρ ~ [R, z]`.
///
/// Forms `[Rα⁻¹, z + Rα⁻¹β]` and re-triangularizes it orthogonally, so the
/// result is again upper triangular and describes the same Gaussian.
pub fn affine_push(info: &SquareRootInfo, alpha: &Matrix, beta: &[f64]) -> Result<SquareRootInfo> {
    let d = info.dim();
    if alpha.rows() != d || alpha.cols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: alpha.rows(), what: "affine map" });
    }
    if beta.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: beta.len(), what: "affine offset" });
    }
    // Rα⁻¹ = (α⁻ᵀ Rᵀ)ᵀ, solved column by column against αᵀ.
    let lu = alpha.transpose().lu()?;
    let mut r_new = Matrix::zeros(d, d);
    for i in 0..d {
        let row = lu.solve(info.r.row(i));
        r_new.row_mut(i).copy_from_slice(&row);
    }
    let shift = r_new.mul_vec(beta);
    let mut aug = Matrix::zeros(d, d + 1);
    for i in 0..d {
        aug.row_mut(i)[..d].copy_from_slice(r_new.row(i));
        aug[(i, d)] = info.z[i] + shift[i];
    }
    let u = dense_qr(&aug)?;
    // u is (d+1)×(d+1); the last row only carries the (zero) residual.
    SquareRootInfo::from_augmented(&u.block(0, 0, d, d + 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn identity_info_solves_to_z() {
        let layout = BlockLayout::new(2, 2, 1);
        let info = SquareRootInfo::new(Matrix::identity(5), vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let est = back_substitute(&info, &layout).unwrap();
        assert_eq!(est.mean, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        for p in &est.track_covariances {
            assert_eq!(*p, Matrix::identity(2));
        }
        assert_eq!(est.registration_covariance, Matrix::identity(1));
    }

    #[test]
    fn two_by_two_hand_solution() {
        let info = SquareRootInfo::new(Matrix::from_rows(&[[2.0, 1.0], [0.0, 1.0]]), vec![3.0, 1.0]).unwrap();
        let est = back_substitute(&info, &BlockLayout::new(0, 4, 2)).unwrap();
        assert_eq!(est.mean, vec![1.0, 1.0]);
        let est = back_substitute(&info, &BlockLayout::new(1, 1, 1)).unwrap();
        assert_eq!(est.mean, vec![1.0, 1.0]);
    }

    #[test]
    fn zero_diagonal_names_the_block() {
        let mut r = Matrix::identity(5);
        r[(3, 3)] = 0.0;
        let info = SquareRootInfo::new(r, vec![0.0; 5]).unwrap();
        let err = back_substitute(&info, &BlockLayout::new(2, 2, 1)).unwrap_err();
        assert_eq!(err, Error::SingularBlock { block: Block::Track(1), index: 3 });

        let mut r = Matrix::identity(5);
        r[(4, 4)] = 0.0;
        let info = SquareRootInfo::new(r, vec![0.0; 5]).unwrap();
        let err = back_substitute(&info, &BlockLayout::new(2, 2, 1)).unwrap_err();
        assert_eq!(err, Error::SingularBlock { block: Block::Registration, index: 4 });
    }

    #[test]
    fn marginal_of_block_diagonal_is_trailing_block() {
        let r = Matrix::from_rows(&[[2.0, 0.0, 0.0], [0.0, 3.0, 1.0], [0.0, 0.0, 4.0]]);
        let info = SquareRootInfo::new(r, vec![1.0, 2.0, 3.0]).unwrap();
        let m = marginalize_leading(&info, 1).unwrap();
        assert_eq!(m.r, Matrix::from_rows(&[[3.0, 1.0], [0.0, 4.0]]));
        assert_eq!(m.z, vec![2.0, 3.0]);
    }

    #[test]
    fn marginal_read_off_directly() {
        let info = SquareRootInfo::new(Matrix::from_rows(&[[1.0, 0.5], [0.0, 1.0]]), vec![1.0, 2.0]).unwrap();
        let m = marginalize_leading(&info, 1).unwrap();
        assert_eq!(m.r, Matrix::from_rows(&[[1.0]]));
        assert_eq!(m.z, vec![2.0]);
        assert_eq!(m.mean().unwrap(), vec![2.0]);
        assert_eq!(m.covariance().unwrap()[(0, 0)], 1.0);
    }

    #[test]
    fn marginalizing_everything_is_an_error() {
        let info = SquareRootInfo::noninformative(&[0.0, 0.0], 1.0);
        assert!(marginalize_leading(&info, 2).is_err());
    }

    #[test]
    fn affine_identity_and_scaling() {
        let r = Matrix::from_rows(&[[2.0, 1.0], [0.0, 3.0]]);
        let info = SquareRootInfo::new(r.clone(), vec![1.0, -1.0]).unwrap();
        let same = affine_push(&info, &Matrix::identity(2), &[0.0, 0.0]).unwrap();
        assert_eq!(same, info);

        let halved = affine_push(&info, &Matrix::identity(2).scale(2.0), &[0.0, 0.0]).unwrap();
        assert_eq!(halved.r, r.scale(0.5));
        assert_eq!(halved.z, info.z);
    }

    #[test]
    fn affine_singular_alpha() {
        let info = SquareRootInfo::noninformative(&[0.0, 0.0], 1.0);
        let alpha = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]);
        assert!(matches!(affine_push(&info, &alpha, &[0.0, 0.0]), Err(Error::Singular { .. })));
    }
}
