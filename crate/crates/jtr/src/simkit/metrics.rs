//! Mean absolute errors against ground truth.

use jtr_core::models::{wrap_angle, Registration};

use super::driver::EpochRecord;
use super::scenario::{Scenario, Truth};
use crate::error::CliError;

pub const TRACK_CHANNELS: [&str; 4] = ["xi", "v_xi", "eta", "v_eta"];
pub const REGISTRATION_CHANNELS: [&str; 3] = ["xi0", "eta0", "psi0"];

/// `(1/N) Σ |est_i − truth_i|`.
pub fn mean_abs_error(est: &[f64], truth: &[f64]) -> Result<f64, CliError> {
    mean_abs_by(est, truth, |d| d)
}

/// As [`mean_abs_error`] with differences wrapped to `(−π, π]`.
pub fn mean_abs_angle_error(est: &[f64], truth: &[f64]) -> Result<f64, CliError> {
    mean_abs_by(est, truth, wrap_angle)
}

fn mean_abs_by(est: &[f64], truth: &[f64], f: impl Fn(f64) -> f64) -> Result<f64, CliError> {
    if est.len() != truth.len() {
        return Err(CliError::Input(format!("misaligned series: {} estimates, {} truths", est.len(), truth.len())));
    }
    if est.is_empty() {
        return Ok(0.0);
    }
    Ok(est.iter().zip(truth).map(|(e, t)| f(e - t).abs()).sum::<f64>() / est.len() as f64)
}

/// Signed `est − truth`, angle wrapped.
pub fn registration_error(est: &Registration, truth: &Registration) -> [f64; 3] {
    [est.xi0 - truth.xi0, est.eta0 - truth.eta0, wrap_angle(est.psi0 - truth.psi0)]
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTable {
    /// Over every (epoch, track) pair whose track follows a live target.
    pub track: [f64; 4],
    /// Per sensor, over every epoch; angle in radians.
    pub registration: Vec<[f64; 3]>,
    pub track_samples: usize,
}

pub fn error_table(records: &[EpochRecord], scenario: &Scenario, truth: &Truth) -> Result<ErrorTable, CliError> {
    if records.len() != truth.times.len() {
        return Err(CliError::Input(format!(
            "misaligned run: {} records for {} truth epochs",
            records.len(),
            truth.times.len()
        )));
    }
    let mut est: [Vec<f64>; 4] = Default::default();
    let mut tru: [Vec<f64>; 4] = Default::default();
    let k = scenario.sensors.len();
    let mut reg_est = vec![[Vec::new(), Vec::new(), Vec::new()]; k];
    let mut reg_tru = vec![[Vec::new(), Vec::new(), Vec::new()]; k];
    for (rec, states) in records.iter().zip(&truth.states) {
        for tr in &rec.tracks {
            let Some(x) = tr.truth_id.and_then(|i| states.get(i).copied().flatten()) else { continue };
            for (c, (e, t)) in tr.state.to_array().into_iter().zip(x.to_array()).enumerate() {
                est[c].push(e);
                tru[c].push(t);
            }
        }
        for (s, (e, t)) in rec.registration.iter().zip(scenario.registration_at(rec.t)).enumerate() {
            for (c, (ev, tv)) in e.to_array().into_iter().zip(t.to_array()).enumerate() {
                reg_est[s][c].push(ev);
                reg_tru[s][c].push(tv);
            }
        }
    }
    let mut track = [0.0; 4];
    for c in 0..4 {
        track[c] = mean_abs_error(&est[c], &tru[c])?;
    }
    let registration = reg_est
        .iter()
        .zip(&reg_tru)
        .map(|(e, t)| {
            Ok([mean_abs_error(&e[0], &t[0])?, mean_abs_error(&e[1], &t[1])?, mean_abs_angle_error(&e[2], &t[2])?])
        })
        .collect::<Result<_, CliError>>()?;
    Ok(ErrorTable { track, registration, track_samples: est[0].len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_series_have_zero_error() {
        let x = [1.0, -2.0, 3.5];
        assert_eq!(mean_abs_error(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn constant_offset_is_recovered() {
        let t = [1.0, 2.0, 3.0, 4.0];
        let e: Vec<f64> = t.iter().map(|v| v + 1.0).collect();
        assert_eq!(mean_abs_error(&e, &t).unwrap(), 1.0);
    }

    #[test]
    fn angles_wrap_across_pi() {
        let e = [3.1];
        let t = [-3.1];
        let err = mean_abs_angle_error(&e, &t).unwrap();
        assert!((err - (2.0 * std::f64::consts::PI - 6.2)).abs() < 1e-12);
    }

    #[test]
    fn misaligned_lengths_are_rejected() {
        assert!(mean_abs_error(&[1.0], &[1.0, 2.0]).is_err());
    }
}
