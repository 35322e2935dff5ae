//! Noisy sensor detections from ground truth.

use jtr_core::models::{predict_measurement, wrap_angle, Measurement, NoiseSigmas};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::config::FovConfig;
use super::scenario::{rng, Scenario, Truth, STREAM_MEASUREMENTS};

/// One detection and, for simulated data, the index of the target that
/// produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub measurement: Measurement,
    pub origin: Option<usize>,
}

impl Detection {
    pub fn sensor(&self) -> usize {
        self.measurement.sensor_id
    }
}

pub fn in_fov(fov: &FovConfig, r: f64, theta: f64) -> bool {
    r >= fov.r_min && r <= fov.r_max && theta.abs() <= fov.half_angle_deg.to_radians()
}

/// Per-epoch detections through the true registration in force at each
/// epoch, with Gaussian noise of `sigmas`. Ordered by sensor, then target.
pub fn synthesize_measurements(
    scenario: &Scenario,
    truth: &Truth,
    sigmas: &NoiseSigmas,
    fov: &FovConfig,
    seed: u64,
) -> Vec<Vec<Detection>> {
    let mut rng = rng(seed, STREAM_MEASUREMENTS);
    synthesize(scenario, truth, sigmas, fov, Some(&mut rng))
}

/// As [`synthesize_measurements`] with the noise draws left out; the
/// attached `sigmas` still weight the measurements in a filter.
pub fn noiseless_measurements(
    scenario: &Scenario,
    truth: &Truth,
    sigmas: &NoiseSigmas,
    fov: &FovConfig,
) -> Vec<Vec<Detection>> {
    synthesize(scenario, truth, sigmas, fov, None)
}

fn synthesize(
    scenario: &Scenario,
    truth: &Truth,
    sigmas: &NoiseSigmas,
    fov: &FovConfig,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Vec<Vec<Detection>> {
    let mut out = Vec::with_capacity(truth.times.len());
    for (t, states) in truth.times.iter().zip(&truth.states) {
        let regs = scenario.registration_at(*t);
        let mut epoch = Vec::new();
        for (sensor, reg) in regs.iter().enumerate() {
            for (target, x) in states.iter().enumerate() {
                let Some(x) = x else { continue };
                let Ok(o) = predict_measurement(x, reg) else { continue };
                if !in_fov(fov, o.r, o.theta) {
                    continue;
                }
                let mut n = [0.0; 3];
                if let Some(rng) = rng.as_deref_mut() {
                    for v in &mut n {
                        *v = rng.sample(StandardNormal);
                    }
                }
                epoch.push(Detection {
                    measurement: Measurement {
                        r: o.r + sigmas.r * n[0],
                        rdot: o.rdot + sigmas.rdot * n[1],
                        theta: wrap_angle(o.theta + sigmas.theta * n[2]),
                        sensor_id: sensor,
                        t: *t,
                        sigmas: *sigmas,
                    },
                    origin: Some(target),
                });
            }
        }
        out.push(epoch);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simkit::config::{ScenarioConfig, StepChangeConfig};
    use crate::simkit::scenario::generate_scenario;

    fn setup(cfg: &ScenarioConfig) -> (Scenario, Truth, NoiseSigmas) {
        let (s, t) = generate_scenario(cfg).unwrap();
        (s, t, cfg.noise.sigmas().unwrap())
    }

    #[test]
    fn noiseless_detections_back_project_to_truth() {
        let cfg = ScenarioConfig { duration: 2.0, ..Default::default() };
        let (s, truth, sig) = setup(&cfg);
        let epochs = noiseless_measurements(&s, &truth, &sig, &cfg.fov);
        for (k, dets) in epochs.iter().enumerate() {
            assert!(!dets.is_empty());
            for d in dets {
                let x = truth.states[k][d.origin.unwrap()].unwrap();
                let (px, py) = d.measurement.back_project(&s.sensors[d.sensor()]);
                assert!((px - x.xi).abs() < 1e-9 && (py - x.eta).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn noise_has_the_configured_spread() {
        let mut cfg = ScenarioConfig { duration: 49.9, ..Default::default() };
        cfg.targets.count = 20;
        cfg.targets.min_separation = 1.0;
        let (s, truth, sig) = setup(&cfg);
        let noisy = synthesize_measurements(&s, &truth, &sig, &cfg.fov, 7);
        let clean = noiseless_measurements(&s, &truth, &sig, &cfg.fov);
        let mut sums = [0.0; 3];
        let mut count = 0.0;
        for (a, b) in noisy.iter().flatten().zip(clean.iter().flatten()) {
            let d = [
                a.measurement.r - b.measurement.r,
                a.measurement.rdot - b.measurement.rdot,
                wrap_angle(a.measurement.theta - b.measurement.theta),
            ];
            for i in 0..3 {
                sums[i] += d[i] * d[i];
            }
            count += 1.0;
        }
        assert!(count >= 1e4);
        for (s2, sigma) in sums.iter().zip(sig.to_array()) {
            let std = (s2 / count).sqrt();
            assert!((std / sigma - 1.0).abs() < 0.05, "{std} vs {sigma}");
        }
    }

    #[test]
    fn detections_after_a_step_use_the_new_registration() {
        let mut cfg = ScenarioConfig { duration: 30.0, ..Default::default() };
        cfg.step_changes.push(StepChangeConfig { t: 25.0, sensor: 1, xi0: 2.0, eta0: -0.6, psi0_deg: -5.0 });
        let (s, truth, sig) = setup(&cfg);
        let epochs = noiseless_measurements(&s, &truth, &sig, &cfg.fov);
        let new = s.step_changes[0].registration;
        for (k, dets) in epochs.iter().enumerate() {
            for d in dets.iter().filter(|d| d.sensor() == 1) {
                let x = truth.states[k][d.origin.unwrap()].unwrap();
                let expected = predict_measurement(&x, if s.time(k) >= 25.0 - 1e-9 { &new } else { &s.sensors[1] });
                assert!((expected.unwrap().theta - d.measurement.theta).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn targets_outside_the_fov_are_silent() {
        let mut cfg = ScenarioConfig { duration: 0.0, ..Default::default() };
        cfg.fov.r_max = 20.0;
        let (s, truth, sig) = setup(&cfg);
        let dets = &noiseless_measurements(&s, &truth, &sig, &cfg.fov)[0];
        assert!(dets.iter().all(|d| d.measurement.r <= 20.0));
        assert!(dets.len() < 2 * s.targets.len());
    }
}
