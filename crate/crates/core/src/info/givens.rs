use crate::error::{Error, Result};

/// Plane rotation `[[c, s], [-s, c]]` that maps `(alpha, beta)` to `(r, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GivensRotation {
    pub c: f64,
    pub s: f64,
    pub r: f64,
}

/// Builds the rotation zeroing `beta` against the pivot `alpha`.
///
/// `r` is evaluated with `hypot`, so the construction neither overflows nor
/// underflows for operands that differ by hundreds of orders of magnitude.
pub fn make_givens(alpha: f64, beta: f64) -> Result<GivensRotation> {
    if alpha == 0.0 && beta == 0.0 {
        return Err(Error::DegenerateRotation);
    }
    if !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::NonFinite { what: "givens operands" });
    }
    let r = libm::hypot(alpha, beta);
    Ok(GivensRotation { c: alpha / r, s: beta / r, r })
}

impl GivensRotation {
    #[inline]
    pub fn apply(&self, top: f64, bottom: f64) -> (f64, f64) {
        (self.c * top + self.s * bottom, self.c * bottom - self.s * top)
    }

    /// Rotates `(top[k], bottom[k])` for every `k`, leaving pairs that are
    /// both exactly zero untouched. Returns the number of pairs rotated.
    #[inline]
    pub fn rotate_slices(&self, top: &mut [f64], bottom: &mut [f64]) -> usize {
        debug_assert_eq!(top.len(), bottom.len());
        let mut touched = 0;
        for (t, b) in top.iter_mut().zip(bottom.iter_mut()) {
            if *t == 0.0 && *b == 0.0 {
                continue;
            }
            let (nt, nb) = self.apply(*t, *b);
            *t = nt;
            *b = nb;
            touched += 1;
        }
        touched
    }

    #[inline]
    pub fn rotate_scalars(&self, top: &mut f64, bottom: &mut f64) -> usize {
        if *top == 0.0 && *bottom == 0.0 {
            return 0;
        }
        let (nt, nb) = self.apply(*top, *bottom);
        *top = nt;
        *bottom = nb;
        1
    }
}

/// Counters collected by the structured triangularizations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RotationStats {
    /// Number of Givens rotations constructed.
    pub rotations: usize,
    /// Number of non-zero entry pairs the rotations were applied to.
    pub pair_updates: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_swap_and_pythagorean() {
        let g = make_givens(1.0, 0.0).unwrap();
        assert_eq!((g.c, g.s), (1.0, 0.0));

        let g = make_givens(0.0, 1.0).unwrap();
        assert_eq!((g.c, g.s), (0.0, 1.0));
        assert_eq!(g.apply(0.0, 1.0), (1.0, 0.0));

        let g = make_givens(3.0, 4.0).unwrap();
        assert!((g.c - 0.6).abs() < 1e-15);
        assert!((g.s - 0.8).abs() < 1e-15);
        assert_eq!(g.r, 5.0);
        let (r, z) = g.apply(3.0, 4.0);
        assert!((r - 5.0).abs() < 1e-15 && z.abs() < 1e-15);
    }

    #[test]
    fn zero_pair_is_an_error() {
        assert_eq!(make_givens(0.0, 0.0), Err(Error::DegenerateRotation));
    }

    #[test]
    fn extreme_ratios_stay_normalized() {
        for &(a, b) in &[(1e-150, 1e150), (1e150, 1e-150), (1e300, 1e300), (-1e-300, 3e-300)] {
            let g = make_givens(a, b).unwrap();
            assert!((g.c * g.c + g.s * g.s - 1.0).abs() < 1e-14, "{a} {b}");
        }
    }

    #[test]
    fn zero_pairs_are_skipped() {
        let g = make_givens(1.0, 1.0).unwrap();
        let mut top = [0.0, 1.0];
        let mut bot = [0.0, 2.0];
        assert_eq!(g.rotate_slices(&mut top, &mut bot), 1);
        assert_eq!(top[0].to_bits(), 0.0f64.to_bits());
        assert_eq!(bot[0].to_bits(), 0.0f64.to_bits());
    }
}
