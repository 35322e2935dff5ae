use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::estimator::{Estimates, Estimator, Innovation, Means, TrackEstimate};
use crate::fmap::{registration_prior_info, FmapConfig, RegistrationPrior};
use crate::info::{dense_qr, propagate_in_place, update_in_place, BlockLayout, MeasurementRows, SquareRootInfo, TrackTransition};
use crate::matrix::Matrix;
use crate::models::{
    cv_transition, jacobians, process_noise_info, CvModel, Measurement, MeasurementBlock, Registration, TrackState,
    MEAS_DIM, REG_DIM, TRACK_DIM,
};

/// Forgetting factor of the registration least-squares fit.
pub const SEP_FORGETTING: f64 = 0.99;

const TRACK_ONLY: BlockLayout = BlockLayout { tracks: 1, track_dim: TRACK_DIM, reg_dim: 0 };

/// Decoupled tracking and registration.
///
/// Each track is a 4-state square-root information filter that treats the
/// current registration estimate as exact. The registration is then fitted
/// by exponentially weighted least squares to the measurement residuals with
/// the updated tracks held fixed. No track/registration cross terms exist.
#[derive(Debug, Clone)]
pub struct SepFilter {
    ids: Vec<u64>,
    slots: BTreeMap<u64, usize>,
    tracks: Vec<SquareRootInfo>,
    sensors: usize,
    epsilon: f64,
    forgetting: f64,
    registration_prior: SquareRootInfo,
    /// Forgotten data information `[R_d, z_d]`, kept apart from the prior.
    data: SquareRootInfo,
    registration: Vec<Registration>,
    registration_covariance: Matrix,
    fixed: bool,
}

impl SepFilter {
    pub fn with_registration_prior(config: FmapConfig, priors: &[RegistrationPrior]) -> Result<Self> {
        config.validate()?;
        if priors.is_empty() {
            return Err(Error::InvalidArgument("at least one sensor is required"));
        }
        let prior = registration_prior_info(config.epsilon, priors)?;
        let rd = prior.dim();
        let mut s = Self {
            ids: Vec::new(),
            slots: BTreeMap::new(),
            tracks: Vec::new(),
            sensors: priors.len(),
            epsilon: config.epsilon,
            forgetting: SEP_FORGETTING,
            registration_prior: prior,
            data: SquareRootInfo { r: Matrix::zeros(rd, rd), z: vec![0.0; rd] },
            registration: Vec::new(),
            registration_covariance: Matrix::zeros(rd, rd),
            fixed: false,
        };
        s.solve_registration()?;
        Ok(s)
    }

    /// Track-only filter at a known registration that is never re-estimated.
    pub fn with_fixed_registration(config: FmapConfig, registration: &[Registration]) -> Result<Self> {
        let priors: Vec<_> = registration.iter().map(|r| RegistrationPrior::Unknown(*r)).collect();
        let mut s = Self::with_registration_prior(config, &priors)?;
        s.registration = registration.to_vec();
        s.registration_covariance = Matrix::zeros(s.registration_prior.dim(), s.registration_prior.dim());
        s.fixed = true;
        Ok(s)
    }

    pub fn with_forgetting(mut self, forgetting: f64) -> Self {
        self.forgetting = forgetting;
        self
    }

    pub fn registration(&self) -> &[Registration] {
        &self.registration
    }

    /// Per-track information arrays; each covers only its own four states.
    pub fn track_infos(&self) -> impl Iterator<Item = (u64, &SquareRootInfo)> {
        self.ids.iter().copied().zip(&self.tracks)
    }

    fn slot(&self, id: u64) -> Result<usize> {
        self.slots.get(&id).copied().ok_or(Error::UnknownTrack { id })
    }

    fn reindex(&mut self) {
        self.slots = self.ids.iter().enumerate().map(|(s, id)| (*id, s)).collect();
    }

    fn sensor_registration(&self, sensor: usize) -> Result<Registration> {
        self.registration.get(sensor).copied().ok_or(Error::UnknownSensor { sensor })
    }

    fn solve_registration(&mut self) -> Result<()> {
        let rd = self.registration_prior.dim();
        let mut stacked = Matrix::zeros(2 * rd, rd + 1);
        stacked.set_block(0, 0, &self.registration_prior.augmented());
        stacked.set_block(rd, 0, &self.data.augmented());
        let u = dense_qr(&stacked)?;
        let combined = SquareRootInfo::from_augmented(&u.block(0, 0, rd, rd + 1))?;
        let mean = combined.mean()?;
        self.registration = mean.chunks(REG_DIM).map(Registration::from_slice).collect();
        self.registration_covariance = combined.covariance()?;
        Ok(())
    }

    pub fn measurement_update(&mut self, assoc: &[(u64, Measurement)]) -> Result<Innovation> {
        if assoc.is_empty() {
            return Ok(Innovation::default());
        }
        let mut by_track: BTreeMap<usize, Vec<&Measurement>> = BTreeMap::new();
        for (id, m) in assoc {
            by_track.entry(self.slot(*id)?).or_default().push(m);
        }

        let mut innovation = Innovation::default();
        for (&slot, ms) in &by_track {
            let x = TrackState::from_slice(&self.tracks[slot].mean()?);
            let mut rows = MeasurementRows::with_capacity(TRACK_DIM, 0, MEAS_DIM * ms.len());
            for m in ms {
                let a = self.sensor_registration(m.sensor_id)?;
                let w = whitened(&x, &a, m)?;
                let a_vec = a.to_array();
                for i in 0..MEAS_DIM {
                    let known: f64 = w.ca[i].iter().zip(&a_vec).map(|(c, v)| c * v).sum();
                    rows.push(Some(0), &w.cx[i], &[], w.rhs[i] - known)?;
                }
            }
            let (e, _) = update_in_place(&mut self.tracks[slot], &TRACK_ONLY, rows)?;
            innovation.norm_sq += e.iter().map(|v| v * v).sum::<f64>();
            innovation.dims += e.len();
        }

        if self.fixed {
            return Ok(innovation);
        }

        let rd = self.registration_prior.dim();
        let mut stacked = Matrix::zeros(rd + MEAS_DIM * assoc.len(), rd + 1);
        let gain = libm::sqrt(self.forgetting);
        stacked.set_block(0, 0, &self.data.augmented().scale(gain));
        let mut row = rd;
        for (&slot, ms) in &by_track {
            let x = TrackState::from_slice(&self.tracks[slot].mean()?);
            let xv = x.to_array();
            for m in ms {
                let a = self.sensor_registration(m.sensor_id)?;
                let w = whitened(&x, &a, m)?;
                let off = REG_DIM * m.sensor_id;
                for i in 0..MEAS_DIM {
                    let fixed: f64 = w.cx[i].iter().zip(&xv).map(|(c, v)| c * v).sum();
                    let out = stacked.row_mut(row);
                    out[off..off + REG_DIM].copy_from_slice(&w.ca[i]);
                    out[rd] = w.rhs[i] - fixed;
                    row += 1;
                }
            }
        }
        let u = dense_qr(&stacked)?;
        self.data = SquareRootInfo::from_augmented(&u.block(0, 0, rd, rd + 1))?;
        self.solve_registration()?;
        Ok(innovation)
    }

    pub fn time_propagate(&mut self, model: &CvModel) -> Result<()> {
        model.validate()?;
        let t = cv_transition(model);
        let tr = TrackTransition::with_inverse(t.phi, t.phi_inv, t.g, t.u2.to_vec(), process_noise_info(model))?;
        for info in &mut self.tracks {
            propagate_in_place(info, &TRACK_ONLY, &tr)?;
        }
        Ok(())
    }

    pub fn reshape_state(&mut self, new: &[(u64, TrackState)], deleted: &[u64]) -> Result<()> {
        for id in deleted {
            self.slot(*id)?;
        }
        let mut ids = Vec::with_capacity(self.ids.len() + new.len());
        let mut tracks = Vec::with_capacity(ids.capacity());
        for (id, guess) in new {
            if ids.contains(id) || (self.slots.contains_key(id) && !deleted.contains(id)) {
                return Err(Error::DuplicateTrack { id: *id });
            }
            ids.push(*id);
            tracks.push(SquareRootInfo::noninformative(&guess.to_array(), self.epsilon));
        }
        for (id, info) in self.ids.iter().zip(self.tracks.drain(..)) {
            if !deleted.contains(id) {
                ids.push(*id);
                tracks.push(info);
            }
        }
        self.ids = ids;
        self.tracks = tracks;
        self.reindex();
        Ok(())
    }
}

fn whitened(x: &TrackState, a: &Registration, m: &Measurement) -> Result<MeasurementBlock> {
    let lin = jacobians(x, a)?;
    MeasurementBlock::from_observation(&lin, &m.observation()).whiten(&m.sigmas)
}

impl Estimator for SepFilter {
    fn name(&self) -> &'static str {
        "sep"
    }

    fn sensors(&self) -> usize {
        self.sensors
    }

    fn track_ids(&self) -> Vec<u64> {
        self.ids.clone()
    }

    fn reshape(&mut self, new: &[(u64, TrackState)], deleted: &[u64]) -> Result<()> {
        self.reshape_state(new, deleted)
    }

    fn update(&mut self, assoc: &[(u64, Measurement)]) -> Result<Innovation> {
        self.measurement_update(assoc)
    }

    fn propagate(&mut self, model: &CvModel) -> Result<()> {
        self.time_propagate(model)
    }

    fn means(&self) -> Result<Means> {
        let tracks = self
            .ids
            .iter()
            .zip(&self.tracks)
            .map(|(id, info)| Ok((*id, TrackState::from_slice(&info.mean()?))))
            .collect::<Result<_>>()?;
        Ok(Means { tracks, registration: self.registration.clone() })
    }

    fn estimates(&self) -> Result<Estimates> {
        let tracks = self
            .ids
            .iter()
            .zip(&self.tracks)
            .map(|(id, info)| {
                Ok(TrackEstimate {
                    id: *id,
                    state: TrackState::from_slice(&info.mean()?),
                    covariance: info.covariance()?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Estimates {
            tracks,
            registration: self.registration.clone(),
            registration_covariance: self.registration_covariance.clone(),
        })
    }
}
