//! Simulation kit, file formats and the `jtr` command line around
//! [`jtr_core`].

pub mod cli;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod simkit;

pub use error::CliError;
