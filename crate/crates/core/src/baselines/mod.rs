//! Comparison estimators.
//!
//! [`DenseJointFilter`] carries the same joint information array as the FMAP
//! filter but triangularizes it with dense Householder QR and no structure,
//! which makes it the reference for equivalence tests and the cubic-cost
//! comparison in benchmarks. [`SepFilter`] runs independent per-track
//! filters at a fixed registration estimate and fits the registration
//! separately.

mod dense;
mod sep;

pub use dense::DenseJointFilter;
pub use sep::{SepFilter, SEP_FORGETTING};
