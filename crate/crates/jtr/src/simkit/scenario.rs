//! Ground truth: target trajectories and time-varying sensor registrations.

use jtr_core::models::{cv_transition, CvModel, Registration, TrackState, R_MIN};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::config::ScenarioConfig;
use crate::error::CliError;

/// RNG stream ids derived from one seed.
pub(crate) const STREAM_TRUTH: u64 = 0;
pub(crate) const STREAM_MEASUREMENTS: u64 = 1;
pub(crate) const STREAM_GUESS: u64 = 2;

pub(crate) fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetSpawn {
    pub t_birth: f64,
    pub t_death: f64,
    pub initial: TrackState,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepChange {
    pub t: f64,
    pub sensor: usize,
    pub registration: Registration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub seed: u64,
    pub dt: f64,
    pub epochs: usize,
    pub sensors: Vec<Registration>,
    pub step_changes: Vec<StepChange>,
    pub targets: Vec<TargetSpawn>,
    /// Truth-side noise intensities `(q_ξ, q_η)`.
    pub q: (f64, f64),
}

impl Scenario {
    pub fn time(&self, epoch: usize) -> f64 {
        epoch as f64 * self.dt
    }

    /// True registrations in force at time `t`; a change at `t_s` applies
    /// from `t_s` on.
    pub fn registration_at(&self, t: f64) -> Vec<Registration> {
        let mut regs = self.sensors.clone();
        let eps = 1e-9 * self.dt;
        for s in &self.step_changes {
            if t + eps >= s.t {
                regs[s.sensor] = s.registration;
            }
        }
        regs
    }
}

/// `states[epoch][target]`, `None` outside the target's lifetime.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub times: Vec<f64>,
    pub states: Vec<Vec<Option<TrackState>>>,
}

/// Builds the scenario and propagates its truth with seeded white-acceleration
/// noise of intensity `(q_ξ, q_η)`.
pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<(Scenario, Truth), CliError> {
    cfg.validate()?;
    let sensors: Vec<Registration> = cfg.sensors.iter().map(|s| s.registration()).collect();
    let mut rng = rng(cfg.seed, STREAM_TRUTH);
    let mut targets = Vec::new();
    let t_end = cfg.duration + cfg.dt;
    let tc = &cfg.targets;
    let mut attempts = 0usize;
    while targets.len() < tc.count {
        attempts += 1;
        if attempts > 100_000 {
            return Err(CliError::Config("cannot place targets with the requested separation".into()));
        }
        let xi = uniform(&mut rng, tc.xi_range);
        let eta = uniform(&mut rng, tc.eta_range);
        let v_xi = uniform(&mut rng, tc.v_xi_range);
        let v_eta = uniform(&mut rng, tc.v_eta_range);
        let clear = targets.iter().all(|t: &TargetSpawn| {
            (t.initial.xi - xi).hypot(t.initial.eta - eta) >= tc.min_separation
        });
        if clear {
            targets.push(TargetSpawn { t_birth: 0.0, t_death: t_end, initial: TrackState::new(xi, v_xi, eta, v_eta) });
        }
    }
    targets.extend(cfg.spawns.iter().map(|s| TargetSpawn { t_birth: s.t_birth, t_death: s.t_death, initial: s.state() }));

    for t in &targets {
        for s in &sensors {
            if (t.initial.xi - s.xi0).hypot(t.initial.eta - s.eta0) <= R_MIN {
                return Err(CliError::Config("target spawned inside the minimum sensor range".into()));
            }
        }
    }

    let scenario = Scenario {
        seed: cfg.seed,
        dt: cfg.dt,
        epochs: cfg.epochs(),
        sensors,
        step_changes: cfg
            .step_changes
            .iter()
            .map(|s| StepChange {
                t: s.t,
                sensor: s.sensor,
                registration: Registration::from_degrees(s.xi0, s.eta0, s.psi0_deg),
            })
            .collect(),
        targets,
        q: (cfg.process.q_xi, cfg.process.q_eta),
    };
    let truth = propagate_truth(&scenario, &mut rng);
    Ok((scenario, truth))
}

fn uniform(rng: &mut ChaCha8Rng, range: [f64; 2]) -> f64 {
    if range[0] == range[1] {
        range[0]
    } else {
        rng.gen_range(range[0]..range[1])
    }
}

fn propagate_truth(s: &Scenario, rng: &mut ChaCha8Rng) -> Truth {
    let model = CvModel { dt: s.dt, q_xi: s.q.0, q_eta: s.q.1, noise: Default::default() };
    let phi = cv_transition(&model).phi;
    let w = model.w_block();
    let mut current: Vec<Option<TrackState>> = vec![None; s.targets.len()];
    let mut times = Vec::with_capacity(s.epochs);
    let mut states = Vec::with_capacity(s.epochs);
    let half = 0.5 * s.dt;
    for k in 0..s.epochs {
        let t = s.time(k);
        for (i, spawn) in s.targets.iter().enumerate() {
            let alive = t + half > spawn.t_birth && t + half <= spawn.t_death;
            current[i] = match (alive, current[i]) {
                (false, _) => None,
                (true, None) => Some(spawn.initial),
                (true, Some(x)) => {
                    let next = phi.mul_vec(&x.to_array());
                    let mut out = [0.0; 4];
                    for (axis, q) in [s.q.0, s.q.1].into_iter().enumerate() {
                        // w = q·Wᵀn has covariance q²WᵀW.
                        let n0: f64 = rng.sample(StandardNormal);
                        let n1: f64 = rng.sample(StandardNormal);
                        let o = 2 * axis;
                        out[o] = next[o] + q * w[0][0] * n0;
                        out[o + 1] = next[o + 1] + q * (w[0][1] * n0 + w[1][1] * n1);
                    }
                    Some(TrackState::from_slice(&out))
                }
            };
        }
        times.push(t);
        states.push(current.clone());
    }
    Truth { times, states }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_truth() {
        let cfg = ScenarioConfig::default();
        let (_, a) = generate_scenario(&cfg).unwrap();
        let (_, b) = generate_scenario(&cfg).unwrap();
        assert_eq!(a, b);
        let other = ScenarioConfig { seed: 2, ..cfg };
        assert_ne!(generate_scenario(&other).unwrap().1, a);
    }

    #[test]
    fn noiseless_truth_is_a_straight_line() {
        let mut cfg = ScenarioConfig::default();
        cfg.process.q_xi = 0.0;
        cfg.process.q_eta = 0.0;
        cfg.duration = 5.0;
        let (s, truth) = generate_scenario(&cfg).unwrap();
        for (i, spawn) in s.targets.iter().enumerate() {
            let last = truth.states[s.epochs - 1][i].unwrap();
            let t = truth.times[s.epochs - 1];
            assert!((last.xi - (spawn.initial.xi + spawn.initial.v_xi * t)).abs() < 1e-12);
            assert!((last.eta - (spawn.initial.eta + spawn.initial.v_eta * t)).abs() < 1e-12);
            assert_eq!(last.v_xi, spawn.initial.v_xi);
        }
    }

    #[test]
    fn default_has_ten_targets_for_fifty_seconds() {
        let (s, truth) = generate_scenario(&ScenarioConfig::default()).unwrap();
        assert_eq!(s.targets.len(), 10);
        assert!((truth.times.last().unwrap() - 50.0).abs() < 1e-9);
        assert!(truth.states.iter().all(|row| row.iter().all(|x| x.is_some())));
    }

    #[test]
    fn step_change_applies_from_its_time() {
        let mut cfg = ScenarioConfig::default();
        cfg.step_changes.push(super::super::config::StepChangeConfig {
            t: 25.0,
            sensor: 1,
            xi0: 2.0,
            eta0: -0.6,
            psi0_deg: -5.0,
        });
        let (s, _) = generate_scenario(&cfg).unwrap();
        assert!((s.registration_at(24.9)[1].psi0.to_degrees() + 10.0).abs() < 1e-12);
        assert!((s.registration_at(s.time(250))[1].psi0.to_degrees() + 5.0).abs() < 1e-12);
    }
}
