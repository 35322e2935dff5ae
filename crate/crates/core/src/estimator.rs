//! Interface shared by the FMAP filter and the baselines so a single driver
//! loop can run any of them.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::error::Result;
use crate::matrix::Matrix;
use crate::models::{CvModel, Measurement, Registration, TrackState};

/// Least-squares misfit of one update and the number of scalar rows it used.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Innovation {
    pub norm_sq: f64,
    pub dims: usize,
}

impl Innovation {
    /// `‖e‖² / m`, or 0 without measurements.
    pub fn per_dof(&self) -> f64 {
        if self.dims == 0 {
            0.0
        } else {
            self.norm_sq / self.dims as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackEstimate {
    pub id: u64,
    pub state: TrackState,
    pub covariance: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimates {
    pub tracks: Vec<TrackEstimate>,
    pub registration: Vec<Registration>,
    pub registration_covariance: Matrix,
}

/// Point estimates only, for association and track initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct Means {
    pub tracks: Vec<(u64, TrackState)>,
    pub registration: Vec<Registration>,
}

pub trait Estimator {
    fn name(&self) -> &'static str;

    fn sensors(&self) -> usize;

    fn track_ids(&self) -> Vec<u64>;

    /// Removes `deleted` and adds `new` tracks with a noninformative prior
    /// centred on the given state.
    fn reshape(&mut self, new: &[(u64, TrackState)], deleted: &[u64]) -> Result<()>;

    /// Processes the measurements associated to tracks at this epoch.
    fn update(&mut self, assoc: &[(u64, Measurement)]) -> Result<Innovation>;

    /// Change detection after an update; returns whether the registration
    /// was reset.
    fn check_reset(&mut self, _innovation: Innovation) -> Result<bool> {
        Ok(false)
    }

    fn propagate(&mut self, model: &CvModel) -> Result<()>;

    fn means(&self) -> Result<Means>;

    fn estimates(&self) -> Result<Estimates>;
}

impl<E: Estimator + ?Sized> Estimator for Box<E> {
    fn name(&self) -> &'static str {
        (**self).name()
    }

    fn sensors(&self) -> usize {
        (**self).sensors()
    }

    fn track_ids(&self) -> Vec<u64> {
        (**self).track_ids()
    }

    fn reshape(&mut self, new: &[(u64, TrackState)], deleted: &[u64]) -> Result<()> {
        (**self).reshape(new, deleted)
    }

    fn update(&mut self, assoc: &[(u64, Measurement)]) -> Result<Innovation> {
        (**self).update(assoc)
    }

    fn check_reset(&mut self, innovation: Innovation) -> Result<bool> {
        (**self).check_reset(innovation)
    }

    fn propagate(&mut self, model: &CvModel) -> Result<()> {
        (**self).propagate(model)
    }

    fn means(&self) -> Result<Means> {
        (**self).means()
    }

    fn estimates(&self) -> Result<Estimates> {
        (**self).estimates()
    }
}
