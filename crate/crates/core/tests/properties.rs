mod common;

use common::*;
use jtr_core::info::{make_givens, triangularize_x, triangularize_y_full, XAssembly};
use jtr_core::models::{jacobians, predict_measurement, wrap_angle, Registration, TrackState};
use jtr_core::{FilterState, FmapConfig, Matrix, RegistrationPrior};
use proptest::prelude::*;

fn gram_error(a: &Matrix, b: &Matrix) -> f64 {
    let ga = na(&a.gram());
    let gb = na(&b.gram());
    rel_fro(&ga, &gb)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn givens_is_a_rotation(a in -1e6f64..1e6, b in -1e6f64..1e6) {
        prop_assume!(a != 0.0 || b != 0.0);
        let g = make_givens(a, b).unwrap();
        prop_assert!((g.c * g.c + g.s * g.s - 1.0).abs() < 1e-15);
        let (top, bottom) = g.apply(a, b);
        prop_assert!((top - g.r).abs() <= 1e-12 * g.r);
        prop_assert!(bottom.abs() <= 1e-12 * g.r);
    }

    #[test]
    fn givens_survives_extreme_scales(e1 in -300i32..300, e2 in -300i32..300) {
        let (a, b) = (10f64.powi(e1), -(10f64.powi(e2)));
        let g = make_givens(a, b).unwrap();
        prop_assert!(g.r.is_finite() && g.r > 0.0);
        prop_assert!((g.c * g.c + g.s * g.s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn wrapped_angles_stay_in_range(a in -1e4f64..1e4) {
        let w = wrap_angle(a);
        prop_assert!(w > -std::f64::consts::PI && w <= std::f64::consts::PI);
        let turns = (a - w) / (2.0 * std::f64::consts::PI);
        prop_assert!((turns - turns.round()).abs() < 1e-9);
    }

    #[test]
    fn measurement_update_preserves_gram_and_structure(
        seed in any::<u64>(), tracks in 0usize..7, sensors in 1usize..4, m in 0usize..20,
    ) {
        let mut rng = rng(seed);
        let (prior, layout) = random_prior(&mut rng, tracks, sensors);
        let rows = random_rows(&mut rng, &layout, m);
        let x = XAssembly::new(prior, layout, rows).unwrap();
        let dense = x.to_dense();
        let out = triangularize_x(x).unwrap();
        let d = layout.dim();
        let mut u = Matrix::zeros(d + 1, d + 1);
        u.set_block(0, 0, &out.posterior.augmented());
        u[(d, d)] = out.residual_norm_sq().sqrt();
        prop_assert!(gram_error(&u, &dense) < 1e-10);
        prop_assert!(out.posterior.r.is_upper_triangular());
        prop_assert_eq!(off_block(&out.posterior, &layout), 0.0);
    }

    #[test]
    fn propagation_preserves_gram_and_structure(
        seed in any::<u64>(), tracks in 0usize..7, sensors in 1usize..4,
    ) {
        let mut rng = rng(seed);
        let y = random_y(&mut rng, tracks, sensors);
        let u = y_factor(&y);
        prop_assert!(u.is_upper_triangular());
        prop_assert!(gram_error(&u, &y.to_dense()) < 1e-10);
        let prior = triangularize_y_full(y.clone()).unwrap().prior;
        prop_assert_eq!(off_block(&prior, &y.layout), 0.0);
    }

    #[test]
    fn jacobians_match_central_differences(
        xi in -80f64..80.0, eta in -80f64..80.0, v_xi in -20f64..20.0, v_eta in -20f64..20.0,
        xi0 in -5f64..5.0, eta0 in -5f64..5.0, psi0 in -3.1f64..3.1,
    ) {
        let x = TrackState::new(xi, v_xi, eta, v_eta);
        let a = Registration::new(xi0, eta0, psi0);
        prop_assume!((xi - xi0).hypot(eta - eta0) > 1.0);
        let lin = jacobians(&x, &a).unwrap();
        let h = |x: &TrackState, a: &Registration| predict_measurement(x, a).unwrap().to_array();
        let diff = |p: [f64; 3], m: [f64; 3], step: f64| {
            [(p[0] - m[0]) / (2.0 * step), (p[1] - m[1]) / (2.0 * step), wrap_angle(p[2] - m[2]) / (2.0 * step)]
        };
        let xs = x.to_array();
        for j in 0..4 {
            let step = 1e-6 * xs[j].abs().max(1.0);
            let (mut xp, mut xm) = (xs, xs);
            xp[j] += step;
            xm[j] -= step;
            let fd = diff(h(&TrackState::from_slice(&xp), &a), h(&TrackState::from_slice(&xm), &a), step);
            for i in 0..3 {
                prop_assert!((fd[i] - lin.cx[i][j]).abs() <= 1e-6 * lin.cx[i][j].abs().max(1.0), "cx[{}][{}]", i, j);
            }
        }
        let as_ = a.to_array();
        for j in 0..3 {
            let step = 1e-6 * as_[j].abs().max(1.0);
            let (mut ap, mut am) = (as_, as_);
            ap[j] += step;
            am[j] -= step;
            let fd = diff(h(&x, &Registration::from_slice(&ap)), h(&x, &Registration::from_slice(&am)), step);
            for i in 0..3 {
                prop_assert!((fd[i] - lin.ca[i][j]).abs() <= 1e-6 * lin.ca[i][j].abs().max(1.0), "ca[{}][{}]", i, j);
            }
        }
    }

    #[test]
    fn adding_tracks_keeps_existing_marginals(seed in any::<u64>(), tracks in 1usize..5, extra in 1usize..4) {
        let mut rng = rng(seed);
        let (info, layout) = random_prior(&mut rng, tracks, 2);
        let ids: Vec<u64> = (0..tracks as u64).collect();
        let priors = [RegistrationPrior::Unknown(Registration::default()); 2];
        let mut s = FilterState::from_parts(
            info,
            jtr_core::JointLayout::with_tracks(ids.clone(), 2).unwrap(),
            0,
            FmapConfig::default(),
            priors.to_vec(),
        )
        .unwrap();
        prop_assert_eq!(s.layout().block(), layout);
        let before = s.solve_estimates().unwrap();
        let new: Vec<(u64, TrackState)> =
            (0..extra).map(|k| (100 + k as u64, TrackState::new(k as f64, 0.0, 1.0, 0.0))).collect();
        s.reshape_state(&new, &[]).unwrap();
        let after = s.solve_estimates().unwrap();
        for t in &before.tracks {
            let a = after.tracks.iter().find(|e| e.id == t.id).unwrap();
            prop_assert!(rel_fro(&na(&a.covariance), &na(&t.covariance)) < 1e-12);
            for (p, q) in a.state.to_array().iter().zip(t.state.to_array()) {
                prop_assert!((p - q).abs() <= 1e-12 * q.abs().max(1.0));
            }
        }
        prop_assert!(
            rel_fro(&na(&after.registration_covariance), &na(&before.registration_covariance)) < 1e-12
        );
    }
}
