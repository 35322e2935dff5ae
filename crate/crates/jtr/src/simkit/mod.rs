//! Scenarios, synthetic detections, association, the epoch driver, error
//! metrics and timing.

pub mod assoc;
pub mod bench;
pub mod config;
pub mod driver;
pub mod metrics;
pub mod scenario;
pub mod synth;
