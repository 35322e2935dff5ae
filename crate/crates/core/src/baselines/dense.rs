use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::estimator::{Estimates, Estimator, Innovation, Means, TrackEstimate};
use crate::fmap::{
    linearize, means_from, prepend_tracks, registration_prior_info, remove_tracks, reset_prior_info, FmapConfig,
    InnovationMonitor, JointLayout, RegistrationPrior,
};
use crate::info::{dense_qr, MeasurementRows, SquareRootInfo, TrackTransition, YAssembly};
use crate::matrix::Matrix;
use crate::models::{cv_transition, process_noise_info, CvModel, Measurement, Registration, TrackState, REG_DIM, TRACK_DIM};

/// Joint square-root information filter without structural shortcuts.
#[derive(Debug, Clone)]
pub struct DenseJointFilter {
    info: SquareRootInfo,
    layout: JointLayout,
    config: FmapConfig,
    registration_priors: Vec<RegistrationPrior>,
    monitor: InnovationMonitor,
}

impl DenseJointFilter {
    pub fn initialize(sensors: usize, config: FmapConfig) -> Result<Self> {
        let priors = vec![RegistrationPrior::Unknown(Registration::default()); sensors];
        Self::with_registration_prior(config, &priors)
    }

    pub fn with_registration_prior(config: FmapConfig, priors: &[RegistrationPrior]) -> Result<Self> {
        config.validate()?;
        if priors.is_empty() {
            return Err(Error::InvalidArgument("at least one sensor is required"));
        }
        let prior = registration_prior_info(config.epsilon, priors)?;
        Ok(Self {
            info: prior,
            layout: JointLayout::new(priors.len()),
            config,
            registration_priors: priors.to_vec(),
            monitor: InnovationMonitor::new(config.innovation_window, config.innovation_quantile),
        })
    }

    pub fn info(&self) -> &SquareRootInfo {
        &self.info
    }

    pub fn layout(&self) -> &JointLayout {
        &self.layout
    }

    pub fn mean(&self) -> Result<Vec<f64>> {
        self.info.mean()
    }

    pub fn covariance(&self) -> Result<Matrix> {
        self.info.covariance()
    }

    pub fn linearize(&self, assoc: &[(u64, Measurement)]) -> Result<MeasurementRows> {
        linearize(&self.layout, &self.mean()?, assoc)
    }

    /// Dense QR of `[[R, z], [C, rhs]]`.
    pub fn update_rows(&mut self, rows: &MeasurementRows) -> Result<Innovation> {
        let block = self.layout.block();
        if rows.is_empty() {
            return Ok(Innovation::default());
        }
        if rows.track_dim() != block.track_dim || rows.reg_dim() != block.reg_dim {
            return Err(Error::DimensionMismatch {
                expected: block.reg_dim,
                found: rows.reg_dim(),
                what: "measurement rows vs layout",
            });
        }
        let d = block.dim();
        let mut stacked = Matrix::zeros(d + rows.len(), d + 1);
        stacked.set_block(0, 0, &self.info.augmented());
        stacked.set_block(d, 0, &rows.to_dense(&block));
        let u = dense_qr(&stacked)?;
        let e = u[(d, d)];
        self.info = SquareRootInfo::from_augmented(&u.block(0, 0, d, d + 1))?;
        Ok(Innovation { norm_sq: e * e, dims: rows.len() })
    }

    pub fn measurement_update(&mut self, assoc: &[(u64, Measurement)]) -> Result<Innovation> {
        if assoc.is_empty() {
            return Ok(Innovation::default());
        }
        let rows = self.linearize(assoc)?;
        self.update_rows(&rows)
    }

    /// Dense triangularization of the full propagation system, keeping the
    /// trailing `(x(t+1), a(t+1))` block.
    pub fn time_propagate(&mut self, model: &CvModel) -> Result<()> {
        model.validate()?;
        let t = cv_transition(model);
        let tr = TrackTransition::with_inverse(t.phi, t.phi_inv, t.g, t.u2.to_vec(), process_noise_info(model))?;
        let block = self.layout.block();
        let y = YAssembly::new(self.info.clone(), block, vec![tr; block.tracks])?;
        let dense = y.to_dense();
        let nw = dense.rows() - block.dim();
        let u = dense_qr(&dense)?;
        let d = block.dim();
        self.info = SquareRootInfo::from_augmented(&u.block(nw, nw, d, d + 1))?;
        Ok(())
    }

    pub fn reshape_state(&mut self, new: &[(u64, TrackState)], deleted: &[u64]) -> Result<()> {
        if new.is_empty() && deleted.is_empty() {
            return Ok(());
        }
        let new_ids: Vec<u64> = new.iter().map(|(id, _)| *id).collect();
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

    /// Same semantics as the FMAP reset: each track keeps its marginal, the
    /// registration returns to its prior and all coupling is dropped.
    pub fn reset_registration(&mut self) -> Result<()> {
        let block = self.layout.block();
        let d = block.dim();
        let mut r = Matrix::zeros(d, d);
        let mut z = vec![0.0; d];
        for slot in 0..block.tracks {
            let cols = block.track_cols(slot);
            let order: Vec<usize> = (0..d).filter(|j| !cols.contains(j)).chain(cols.clone()).collect();
            let mut aug = Matrix::zeros(d, d + 1);
            for i in 0..d {
                let src = self.info.r.row(i);
                let dst = aug.row_mut(i);
                for (j, &oj) in order.iter().enumerate() {
                    dst[j] = src[oj];
                }
                dst[d] = self.info.z[i];
            }
            let u = dense_qr(&aug)?;
            let lead = d - TRACK_DIM;
            r.set_block(cols.start, cols.start, &u.block(lead, lead, TRACK_DIM, TRACK_DIM));
            for i in 0..TRACK_DIM {
                z[cols.start + i] = u[(lead + i, d)];
            }
        }
        let reg0 = block.reg_offset();
        let current = self.mean()?;
        let prior = reset_prior_info(self.config.epsilon, &self.registration_priors, &current[reg0..])?;
        r.set_block(reg0, reg0, &prior.r);
        z[reg0..].copy_from_slice(&prior.z);
        self.info = SquareRootInfo::new(r, z)?;
        Ok(())
    }

    pub fn solve_estimates(&self) -> Result<Estimates> {
        let block = self.layout.block();
        let mean = self.mean()?;
        let cov = self.covariance()?;
        let tracks = self
            .layout
            .track_ids()
            .iter()
            .enumerate()
            .map(|(slot, id)| {
                let c = block.track_cols(slot);
                TrackEstimate {
                    id: *id,
                    state: TrackState::from_slice(&mean[c.clone()]),
                    covariance: cov.block(c.start, c.start, TRACK_DIM, TRACK_DIM),
                }
            })
            .collect();
        let reg0 = block.reg_offset();
        Ok(Estimates {
            tracks,
            registration: mean[reg0..].chunks(REG_DIM).map(Registration::from_slice).collect(),
            registration_covariance: cov.block(reg0, reg0, block.reg_dim, block.reg_dim),
        })
    }

    /// `Σ⁻¹ = RᵀR`.
    pub fn fisher_information(&self) -> Matrix {
        self.info.information()
    }
}

impl Estimator for DenseJointFilter {
    fn name(&self) -> &'static str {
        "dense"
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
        self.monitor.push(innovation);
        if !self.monitor.exceeded()? {
            return Ok(false);
        }
        self.reset_registration()?;
        self.monitor.clear();
        Ok(true)
    }

    fn propagate(&mut self, model: &CvModel) -> Result<()> {
        self.time_propagate(model)
    }

    fn means(&self) -> Result<Means> {
        means_from(&self.layout, &self.mean()?)
    }

    fn estimates(&self) -> Result<Estimates> {
        self.solve_estimates()
    }
}
