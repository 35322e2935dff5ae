//! Square-root information kernels and a linear-time filter for joint
//! multi-target tracking and sensor registration.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod error;
pub mod estimator;
pub mod fmap;
pub mod info;
pub mod matrix;
pub mod models;
pub mod stats;

pub use error::{Block, Error, Result};
pub use estimator::{Estimates, Estimator, Innovation, Means, TrackEstimate};
pub use fmap::{FilterState, FmapConfig, JointLayout, RegistrationPrior};
pub use info::SquareRootInfo;
pub use matrix::Matrix;
