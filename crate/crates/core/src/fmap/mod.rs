//! The joint tracking and registration filter.
//!
//! Each epoch runs: linearize at the prior mean, triangularize the stacked
//! measurement system, test the innovation and possibly reset the
//! registration, then propagate every track through its own dynamics. The
//! track block of `R` stays block-diagonal throughout, so an epoch costs time
//! linear in the number of tracks and measurements.

mod innovation;
mod layout;

pub use innovation::InnovationMonitor;
pub use layout::JointLayout;

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::estimator::{Estimates, Estimator, Innovation, Means, TrackEstimate};
use crate::info::{
    back_substitute, dense_qr, marginalize_leading, propagate_in_place, solve_mean, update_in_place,
    MeasurementRows, RotationStats, SquareRootInfo, TrackTransition,
};
use crate::matrix::Matrix;
use crate::models::{
    cv_transition, jacobians, process_noise_info, CvModel, Measurement, MeasurementBlock, Registration,
    TrackState, MEAS_DIM, REG_DIM, TRACK_DIM,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FmapConfig {
    /// Scale of the noninformative prior `εI`.
    pub epsilon: f64,
    /// Chi-square level of the innovation test.
    pub innovation_quantile: f64,
    /// Number of updates pooled by the innovation test.
    pub innovation_window: usize,
    /// Association gate in metres.
    pub gate_distance: f64,
    /// Consecutive missed epochs before a track is dropped.
    pub miss_limit: usize,
}

impl Default for FmapConfig {
    fn default() -> Self {
        Self { epsilon: 1e-4, innovation_quantile: 0.99, innovation_window: 5, gate_distance: 2.0, miss_limit: 3 }
    }
}

impl FmapConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidArgument("epsilon must be positive"));
        }
        if !(self.innovation_quantile > 0.0 && self.innovation_quantile < 1.0) {
            return Err(Error::InvalidArgument("innovation quantile must lie in (0, 1)"));
        }
        if self.innovation_window == 0 {
            return Err(Error::InvalidArgument("innovation window must be at least one update"));
        }
        if !(self.gate_distance > 0.0) {
            return Err(Error::InvalidArgument("gate distance must be positive"));
        }
        Ok(())
    }
}

/// Prior belief about one sensor's registration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegistrationPrior {
    /// `εI` information centred on a guess.
    Unknown(Registration),
    /// Independent Gaussian with the given standard deviations
    /// `(ξ₀ m, η₀ m, ψ₀ rad)`.
    Surveyed { mean: Registration, sigma: [f64; REG_DIM] },
}

/// Block-diagonal registration prior over all sensors.
pub fn registration_prior_info(epsilon: f64, priors: &[RegistrationPrior]) -> Result<SquareRootInfo> {
    let mut diag = Vec::with_capacity(REG_DIM * priors.len());
    let mut z = Vec::with_capacity(REG_DIM * priors.len());
    for p in priors {
        let (mean, scale) = match p {
            RegistrationPrior::Unknown(mean) => (mean, [epsilon; REG_DIM]),
            RegistrationPrior::Surveyed { mean, sigma } => {
                if sigma.iter().any(|s| !(*s > 0.0)) {
                    return Err(Error::NonPositiveSigma);
                }
                (mean, sigma.map(|s| 1.0 / s))
            }
        };
        for (m, s) in mean.to_array().iter().zip(scale) {
            diag.push(s);
            z.push(s * m);
        }
    }
    Ok(SquareRootInfo { r: Matrix::from_diagonal(&diag), z })
}

/// Prior restored by a registration reset: surveyed sensors return to their
/// survey, unknown sensors get `εI` information centred on `current` (the
/// registration estimate at the time of the reset).
pub fn reset_prior_info(epsilon: f64, priors: &[RegistrationPrior], current: &[f64]) -> Result<SquareRootInfo> {
    let recentred: Vec<RegistrationPrior> = priors
        .iter()
        .zip(current.chunks(REG_DIM))
        .map(|(p, a)| match p {
            RegistrationPrior::Unknown(_) => RegistrationPrior::Unknown(Registration::from_slice(a)),
            surveyed => *surveyed,
        })
        .collect();
    registration_prior_info(epsilon, &recentred)
}

/// Builds whitened rows for `assoc`, linearized at `mean` (laid out by
/// `layout`). Each measurement contributes three rows on its track's slot.
pub fn linearize(layout: &JointLayout, mean: &[f64], assoc: &[(u64, Measurement)]) -> Result<MeasurementRows> {
    let block = layout.block();
    let mut rows = MeasurementRows::with_capacity(TRACK_DIM, block.reg_dim, MEAS_DIM * assoc.len());
    let mut ca = vec![0.0; block.reg_dim];
    for (id, m) in assoc {
        let slot = layout.slot(*id)?;
        let reg = layout.sensor_cols(m.sensor_id)?;
        let off = layout.sensor_offset(m.sensor_id)?;
        let x = TrackState::from_slice(&mean[block.track_cols(slot)]);
        let a = Registration::from_slice(&mean[reg]);
        let lin = jacobians(&x, &a)?;
        let w = MeasurementBlock::from_observation(&lin, &m.observation()).whiten(&m.sigmas)?;
        for i in 0..MEAS_DIM {
            ca.iter_mut().for_each(|v| *v = 0.0);
            ca[off..off + REG_DIM].copy_from_slice(&w.ca[i]);
            rows.push(Some(slot), &w.cx[i], &ca, w.rhs[i])?;
        }
    }
    Ok(rows)
}

/// Filter state between epochs. `info` holds the prior before an update and
/// the posterior after it.
#[derive(Debug, Clone)]
pub struct FilterState {
    info: SquareRootInfo,
    layout: JointLayout,
    epoch: u64,
    monitor: InnovationMonitor,
    config: FmapConfig,
    registration_priors: Vec<RegistrationPrior>,
    transition: Option<(CvModel, TrackTransition)>,
    last_stats: RotationStats,
}

impl FilterState {
    /// No tracks and a noninformative registration `εI`, `z = 0`.
    pub fn initialize(sensors: usize, config: FmapConfig) -> Result<Self> {
        if sensors == 0 {
            return Err(Error::InvalidArgument("at least one sensor is required"));
        }
        let priors = vec![RegistrationPrior::Unknown(Registration::default()); sensors];
        Self::with_registration_prior(config, &priors)
    }

    pub fn with_registration_prior(config: FmapConfig, priors: &[RegistrationPrior]) -> Result<Self> {
        config.validate()?;
        if priors.is_empty() {
            return Err(Error::InvalidArgument("at least one sensor is required"));
        }
        let prior = registration_prior_info(config.epsilon, priors)?;
        Self::from_parts(prior, JointLayout::new(priors.len()), 0, config, priors.to_vec())
    }

    /// Reassembles a state, e.g. from a snapshot.
    pub fn from_parts(
        info: SquareRootInfo,
        layout: JointLayout,
        epoch: u64,
        config: FmapConfig,
        registration_priors: Vec<RegistrationPrior>,
    ) -> Result<Self> {
        config.validate()?;
        info.check_layout(&layout.block())?;
        if registration_priors.len() != layout.sensors() {
            return Err(Error::DimensionMismatch {
                expected: layout.sensors(),
                found: registration_priors.len(),
                what: "registration priors",
            });
        }
        if !info.r.is_upper_triangular() {
            return Err(Error::InvalidArgument("information matrix is not upper triangular"));
        }
        Ok(Self {
            info,
            layout,
            epoch,
            monitor: InnovationMonitor::new(config.innovation_window, config.innovation_quantile),
            config,
            registration_priors,
            transition: None,
            last_stats: RotationStats::default(),
        })
    }

    pub fn info(&self) -> &SquareRootInfo {
        &self.info
    }

    pub fn layout(&self) -> &JointLayout {
        &self.layout
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn config(&self) -> &FmapConfig {
        &self.config
    }

    pub fn monitor(&self) -> &InnovationMonitor {
        &self.monitor
    }

    /// Replaces the innovation window, e.g. when restoring a snapshot.
    pub fn restore_innovation_history(&mut self, history: &[Innovation]) {
        self.monitor.clear();
        for i in history {
            self.monitor.push(*i);
        }
    }

    pub fn registration_priors(&self) -> &[RegistrationPrior] {
        &self.registration_priors
    }

    /// Rotation counters of the last update or propagation.
    pub fn last_stats(&self) -> RotationStats {
        self.last_stats
    }

    pub fn solve_mean(&self) -> Result<Vec<f64>> {
        solve_mean(&self.info, &self.layout.block())
    }

    /// Rows for `assoc` linearized at the current mean.
    pub fn linearize(&self, assoc: &[(u64, Measurement)]) -> Result<MeasurementRows> {
        if assoc.is_empty() {
            return Ok(MeasurementRows::new(TRACK_DIM, self.layout.block().reg_dim));
        }
        linearize(&self.layout, &self.solve_mean()?, assoc)
    }

    pub fn measurement_update(&mut self, assoc: &[(u64, Measurement)]) -> Result<Innovation> {
        let rows = self.linearize(assoc)?;
        self.update_rows(rows)
    }

    /// Update with externally linearized, whitened rows.
    pub fn update_rows(&mut self, rows: MeasurementRows) -> Result<Innovation> {
        let dims = rows.len();
        let (residual, stats) = update_in_place(&mut self.info, &self.layout.block(), rows)?;
        self.last_stats = stats;
        Ok(Innovation { norm_sq: residual.iter().map(|e| e * e).sum(), dims })
    }

    /// Records `innovation` and resets the registration when the windowed
    /// test fires. The window is cleared after a reset.
    pub fn check_and_reset_registration(&mut self, innovation: Innovation) -> Result<bool> {
        self.monitor.push(innovation);
        if !self.monitor.exceeded()? {
            return Ok(false);
        }
        self.reset_registration()?;
        self.monitor.clear();
        Ok(true)
    }

    /// Replaces the registration block by the reset prior (see
    /// [`reset_prior_info`]) and cuts the track/registration coupling. Every
    /// track block is first rewritten as its own marginal, so track marginals
    /// are unchanged.
    pub fn reset_registration(&mut self) -> Result<()> {
        let block = self.layout.block();
        let td = block.track_dim;
        let rd = block.reg_dim;
        let reg0 = block.reg_offset();
        let r_a = self.info.r.block(reg0, reg0, rd, rd);
        let z_a = self.info.z[reg0..].to_vec();
        let current = r_a.solve_upper(&z_a).map_err(|_| Error::SingularBlock {
            block: crate::error::Block::Registration,
            index: reg0,
        })?;
        let prior = reset_prior_info(self.config.epsilon, &self.registration_priors, &current)?;
        let mut stack = Matrix::zeros(td + rd, rd + td + 1);
        for slot in 0..block.tracks {
            let c0 = block.track_cols(slot).start;
            stack.fill(0.0);
            for i in 0..td {
                let row = self.info.r.row(c0 + i);
                let out = stack.row_mut(i);
                out[..rd].copy_from_slice(&row[reg0..]);
                out[rd..rd + td].copy_from_slice(&row[c0..c0 + td]);
                out[rd + td] = self.info.z[c0 + i];
            }
            for i in 0..rd {
                let out = stack.row_mut(td + i);
                out[..rd].copy_from_slice(r_a.row(i));
                out[rd + td] = z_a[i];
            }
            let u = dense_qr(&stack)?;
            for i in 0..td {
                let row = self.info.r.row_mut(c0 + i);
                row[c0..c0 + td].copy_from_slice(&u.row(rd + i)[rd..rd + td]);
                row[reg0..].iter_mut().for_each(|v| *v = 0.0);
                self.info.z[c0 + i] = u[(rd + i, rd + td)];
            }
        }
        for i in 0..rd {
            self.info.r.row_mut(reg0 + i)[reg0..].copy_from_slice(prior.r.row(i));
            self.info.z[reg0 + i] = prior.z[i];
        }
        Ok(())
    }

    /// Propagates every track through the constant-velocity model; the
    /// registration is static.
    pub fn time_propagate(&mut self, model: &CvModel) -> Result<()> {
        model.validate()?;
        let stale = !matches!(&self.transition, Some((m, _)) if m == model);
        if stale {
            let t = cv_transition(model);
            let tr = TrackTransition::with_inverse(t.phi, t.phi_inv, t.g, t.u2.to_vec(), process_noise_info(model))?;
            self.transition = Some((*model, tr));
        }
        let (_, tr) = self.transition.as_ref().expect("transition cached above");
        self.last_stats = propagate_in_place(&mut self.info, &self.layout.block(), tr)?;
        self.epoch += 1;
        Ok(())
    }

    /// Marginalizes out `deleted` tracks and prepends `new` ones with a
    /// noninformative prior centred on the given guess.
    pub fn reshape_state(&mut self, new: &[(u64, TrackState)], deleted: &[u64]) -> Result<()> {
        if new.is_empty() && deleted.is_empty() {
            return Ok(());
        }
        let new_ids: Vec<u64> = new.iter().map(|(id, _)| *id).collect();
        for (i, id) in new_ids.iter().enumerate() {
            if new_ids[..i].contains(id) {
                return Err(Error::DuplicateTrack { id: *id });
            }
        }
        let layout = self.layout.reshaped(&new_ids, deleted)?;
        let kept = if deleted.is_empty() {
            self.info.clone()
        } else {
            remove_tracks(&self.info, &self.layout, deleted)?
        };
        self.info = prepend_tracks(&kept, new, self.config.epsilon);
        self.layout = layout;
        Ok(())
    }

    pub fn solve_estimates(&self) -> Result<Estimates> {
        let block = self.layout.block();
        let est = back_substitute(&self.info, &block)?;
        let tracks = self
            .layout
            .track_ids()
            .iter()
            .enumerate()
            .map(|(slot, id)| TrackEstimate {
                id: *id,
                state: TrackState::from_slice(est.track_mean(&block, slot)),
                covariance: est.track_covariances[slot].clone(),
            })
            .collect();
        let reg = est.registration_mean(&block);
        Ok(Estimates {
            tracks,
            registration: reg.chunks(REG_DIM).map(Registration::from_slice).collect(),
            registration_covariance: est.registration_covariance,
        })
    }

    /// `J = RᵀR`.
    pub fn fisher_information(&self) -> Matrix {
        self.info.information()
    }
}

/// Symmetric permutation moving `deleted` tracks to the front, a
/// re-triangularization if that broke the triangular form, then the marginal
/// of the trailing block.
pub(crate) fn remove_tracks(info: &SquareRootInfo, layout: &JointLayout, deleted: &[u64]) -> Result<SquareRootInfo> {
    let block = layout.block();
    let mut order: Vec<usize> = Vec::with_capacity(block.dim());
    for id in deleted {
        order.extend(layout.track_cols(*id)?);
    }
    for id in layout.track_ids().iter().filter(|id| !deleted.contains(id)) {
        order.extend(layout.track_cols(*id)?);
    }
    order.extend(block.reg_cols());
    let d = block.dim();
    let mut aug = Matrix::zeros(d, d + 1);
    for (i, &oi) in order.iter().enumerate() {
        let src = info.r.row(oi);
        let dst = aug.row_mut(i);
        for (j, &oj) in order.iter().enumerate() {
            dst[j] = src[oj];
        }
        dst[d] = info.z[oi];
    }
    let permuted = if (0..d).all(|i| aug.row(i)[..i].iter().all(|v| *v == 0.0)) {
        aug.block(0, 0, d, d + 1)
    } else {
        dense_qr(&aug)?.block(0, 0, d, d + 1)
    };
    let full = SquareRootInfo::from_augmented(&permuted)?;
    marginalize_leading(&full, TRACK_DIM * deleted.len())
}

/// `[[εI, 0], [0, R]]`, `[ε·guess, z]`.
pub(crate) fn prepend_tracks(info: &SquareRootInfo, new: &[(u64, TrackState)], epsilon: f64) -> SquareRootInfo {
    let lead = TRACK_DIM * new.len();
    let d = lead + info.dim();
    let mut r = Matrix::zeros(d, d);
    let mut z = Vec::with_capacity(d);
    for (k, (_, guess)) in new.iter().enumerate() {
        for (i, g) in guess.to_array().iter().enumerate() {
            r[(TRACK_DIM * k + i, TRACK_DIM * k + i)] = epsilon;
            z.push(epsilon * g);
        }
    }
    r.set_block(lead, lead, &info.r);
    z.extend_from_slice(&info.z);
    SquareRootInfo { r, z }
}

impl Estimator for FilterState {
    fn name(&self) -> &'static str {
        "fmap"
    }

    fn sensors(&self) -> usize {
        self.layout.sensors()
    }

    fn track_ids(&self) -> Vec<u64> {
        self.layout.track_ids().to_vec()
    }

    fn reshape(&mut self, new: &[(u64, TrackState)], deleted: &[u64]) -> Result<()> {
        self.reshape_state(new, deleted)
    }

    fn update(&mut self, assoc: &[(u64, Measurement)]) -> Result<Innovation> {
        self.measurement_update(assoc)
    }

    fn check_reset(&mut self, innovation: Innovation) -> Result<bool> {
        self.check_and_reset_registration(innovation)
    }

    fn propagate(&mut self, model: &CvModel) -> Result<()> {
        self.time_propagate(model)
    }

    fn means(&self) -> Result<Means> {
        means_from(&self.layout, &self.solve_mean()?)
    }

    fn estimates(&self) -> Result<Estimates> {
        self.solve_estimates()
    }
}

pub(crate) fn means_from(layout: &JointLayout, mean: &[f64]) -> Result<Means> {
    let block = layout.block();
    let tracks = layout
        .track_ids()
        .iter()
        .enumerate()
        .map(|(slot, id)| (*id, TrackState::from_slice(&mean[block.track_cols(slot)])))
        .collect();
    let registration = mean[block.reg_cols()].chunks(REG_DIM).map(Registration::from_slice).collect();
    Ok(Means { tracks, registration })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::NoiseSigmas;

    fn sigmas() -> NoiseSigmas {
        NoiseSigmas::new(0.1, 0.2, 1f64.to_radians()).unwrap()
    }

    #[test]
    fn fresh_state() {
        let s = FilterState::initialize(2, FmapConfig::default()).unwrap();
        assert_eq!(s.info().r, Matrix::identity(6).scale(1e-4));
        assert_eq!(s.info().z, vec![0.0; 6]);
        let est = s.solve_estimates().unwrap();
        assert!(est.registration.iter().all(|r| *r == Registration::default()));
        assert!((est.registration_covariance[(0, 0)] - 1e8).abs() < 1e-4);
        assert_eq!(s.fisher_information(), Matrix::identity(6).scale(1e-8));
    }

    #[test]
    fn empty_update_is_a_no_op() {
        let mut s = FilterState::initialize(1, FmapConfig::default()).unwrap();
        s.reshape_state(&[(1, TrackState::new(10.0, 0.0, 1.0, 0.0))], &[]).unwrap();
        let before = s.solve_mean().unwrap();
        let innov = s.measurement_update(&[]).unwrap();
        assert_eq!(innov, Innovation::default());
        assert_eq!(s.solve_mean().unwrap(), before);
    }

    #[test]
    fn self_consistent_measurement_has_no_residual() {
        let mut s = FilterState::initialize(2, FmapConfig::default()).unwrap();
        let x = TrackState::new(12.0, 0.5, -3.0, 0.2);
        s.reshape_state(&[(4, x)], &[]).unwrap();
        let mut assoc = Vec::new();
        for sensor in 0..2 {
            let o = crate::models::predict_measurement(&x, &Registration::default()).unwrap();
            assoc.push((4, Measurement { r: o.r, rdot: o.rdot, theta: o.theta, sensor_id: sensor, t: 0.0, sigmas: sigmas() }));
        }
        let innov = s.measurement_update(&assoc).unwrap();
        assert_eq!(innov.dims, 6);
        assert!(innov.norm_sq < 1e-16);
    }

    #[test]
    fn unknown_track_is_rejected() {
        let mut s = FilterState::initialize(1, FmapConfig::default()).unwrap();
        let m = Measurement { r: 5.0, rdot: 0.0, theta: 0.0, sensor_id: 0, t: 0.0, sigmas: sigmas() };
        assert_eq!(s.measurement_update(&[(3, m)]).unwrap_err(), Error::UnknownTrack { id: 3 });
    }

    #[test]
    fn delete_from_block_diagonal_keeps_entries() {
        let mut s = FilterState::initialize(1, FmapConfig::default()).unwrap();
        s.reshape_state(&[(1, TrackState::new(5.0, 0.0, 0.0, 0.0)), (2, TrackState::new(9.0, 1.0, 2.0, 0.0))], &[])
            .unwrap();
        let before = s.info().clone();
        s.reshape_state(&[], &[1]).unwrap();
        assert_eq!(s.layout().track_ids(), &[2]);
        assert_eq!(s.info().r, before.r.block(4, 4, 7, 7));
        assert_eq!(s.info().z, before.z[4..].to_vec());
    }

    #[test]
    fn no_reshape_is_identity() {
        let mut s = FilterState::initialize(2, FmapConfig::default()).unwrap();
        let before = s.info().clone();
        s.reshape_state(&[], &[]).unwrap();
        assert_eq!(*s.info(), before);
    }
}
