//! Epoch loop shared by every estimator: associate, spawn, update, record,
//! retire, propagate.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use jtr_core::baselines::{DenseJointFilter, SepFilter};
use jtr_core::models::{CvModel, Measurement, ProcessNoise, Registration, TrackState};
use jtr_core::{Estimator, FilterState, Innovation, RegistrationPrior};
use rand::Rng;

use super::assoc::associate;
use super::config::ScenarioConfig;
use super::scenario::{generate_scenario, rng, Scenario, Truth, STREAM_GUESS};
use super::synth::{synthesize_measurements, Detection};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algo {
    Fmap,
    Sep,
    Dense,
}

impl Algo {
    pub const ALL: [Algo; 3] = [Algo::Fmap, Algo::Sep, Algo::Dense];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Fmap => "fmap",
            Algo::Sep => "sep",
            Algo::Dense => "dense",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Algo::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown algorithm {s:?}")))
    }
}

pub type BoxedEstimator = Box<dyn Estimator + Send>;

/// Initial registration guess: the configured one, or the truth offset by a
/// seeded uniform perturbation.
pub fn initial_guess(cfg: &ScenarioConfig) -> Vec<Registration> {
    if let Some(g) = &cfg.initial_guess {
        return g.iter().map(|s| s.registration()).collect();
    }
    let mut rng = rng(cfg.seed, STREAM_GUESS);
    let p = cfg.guess_perturbation;
    cfg.sensors
        .iter()
        .map(|s| {
            let mut draw = |half: f64| if half > 0.0 { rng.gen_range(-half..half) } else { 0.0 };
            let dx = draw(p.position);
            let dy = draw(p.position);
            let dpsi = draw(p.angle_deg);
            Registration::from_degrees(s.xi0 + dx, s.eta0 + dy, s.psi0_deg + dpsi)
        })
        .collect()
}

/// The reference sensor is surveyed around its configured registration;
/// every other sensor starts noninformative around its guess.
pub fn registration_priors(cfg: &ScenarioConfig) -> Vec<RegistrationPrior> {
    let guess = initial_guess(cfg);
    let s = cfg.reference_sigma;
    guess
        .into_iter()
        .enumerate()
        .map(|(i, g)| {
            if cfg.reference_sensor == Some(i) {
                RegistrationPrior::Surveyed {
                    mean: cfg.sensors[i].registration(),
                    sigma: [s.position, s.position, s.angle_deg.to_radians()],
                }
            } else {
                RegistrationPrior::Unknown(g)
            }
        })
        .collect()
}

pub fn build_estimator(algo: Algo, cfg: &ScenarioConfig) -> Result<BoxedEstimator, CliError> {
    let priors = registration_priors(cfg);
    let fc = cfg.filter.fmap();
    Ok(match algo {
        Algo::Fmap => Box::new(FilterState::with_registration_prior(fc, &priors)?),
        Algo::Sep => Box::new(SepFilter::with_registration_prior(fc, &priors)?),
        Algo::Dense => Box::new(DenseJointFilter::with_registration_prior(fc, &priors)?),
    })
}

/// Filter-side process model for arbitrary step lengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessModel {
    pub q_xi: f64,
    pub q_eta: f64,
    pub noise: ProcessNoise,
}

impl ProcessModel {
    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self, CliError> {
        let m = cfg.process.model(cfg.dt)?;
        Ok(Self { q_xi: m.q_xi, q_eta: m.q_eta, noise: m.noise })
    }

    pub fn model(&self, dt: f64) -> Result<CvModel, CliError> {
        CvModel::new(dt, self.q_xi, self.q_eta)
            .map(|m| m.with_noise(self.noise))
            .map_err(|e| CliError::Input(format!("process model for dt = {dt}: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerConfig {
    pub gate: f64,
    pub miss_limit: usize,
    /// Unassociated detections this close to an existing track never seed a
    /// new one.
    pub birth_exclusion: f64,
}

impl TrackerConfig {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        let gate = cfg.filter.gate_distance;
        Self { gate, miss_limit: cfg.filter.miss_limit, birth_exclusion: 2.0 * gate }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackRecord {
    pub id: u64,
    pub state: TrackState,
    /// Origin of the last detection the track took, when known.
    pub truth_id: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub t: f64,
    pub tracks: Vec<TrackRecord>,
    pub registration: Vec<Registration>,
    pub innovation: Innovation,
    pub reset: bool,
}

/// Track management around an [`Estimator`].
pub struct Tracker<E> {
    pub estimator: E,
    cfg: TrackerConfig,
    next_id: u64,
    /// Positions of last epoch's leftover detections.
    pending: Vec<(f64, f64)>,
    misses: BTreeMap<u64, usize>,
    truth_ids: BTreeMap<u64, Option<usize>>,
}

impl<E: Estimator> Tracker<E> {
    pub fn new(estimator: E, cfg: TrackerConfig) -> Self {
        Self { estimator, cfg, next_id: 0, pending: Vec::new(), misses: BTreeMap::new(), truth_ids: BTreeMap::new() }
    }

    /// Processes the detections of one epoch at time `t`, then propagates
    /// with `next` when given.
    pub fn step(
        &mut self,
        t: f64,
        detections: &[Detection],
        next: Option<&CvModel>,
    ) -> Result<EpochRecord, jtr_core::Error> {
        let means = self.estimator.means()?;
        let map = associate(&means.tracks, &means.registration, detections, self.cfg.gate);

        let mut assoc: Vec<(u64, usize)> = map.pairs.clone();
        let births = self.births(&means.tracks, &means.registration, detections, &map.unassociated);
        let mut new_tracks = Vec::with_capacity(births.len());
        for (pos, members) in births {
            let id = self.next_id;
            self.next_id += 1;
            new_tracks.push((id, TrackState::new(pos.0, 0.0, pos.1, 0.0)));
            assoc.extend(members.into_iter().map(|j| (id, j)));
            self.misses.insert(id, 0);
            self.truth_ids.insert(id, None);
        }
        if !new_tracks.is_empty() {
            self.estimator.reshape(&new_tracks, &[])?;
        }

        assoc.sort_by_key(|&(id, j)| (id, j));
        let batch: Vec<(u64, Measurement)> = assoc.iter().map(|&(id, j)| (id, detections[j].measurement)).collect();
        let innovation = self.estimator.update(&batch)?;
        let reset = self.estimator.check_reset(innovation)?;

        for m in self.misses.values_mut() {
            *m += 1;
        }
        for &(id, j) in &assoc {
            self.misses.insert(id, 0);
            if let Some(origin) = detections[j].origin {
                self.truth_ids.insert(id, Some(origin));
            }
        }

        let after = self.estimator.means()?;
        let record = EpochRecord {
            t,
            tracks: after
                .tracks
                .iter()
                .map(|(id, state)| TrackRecord { id: *id, state: *state, truth_id: self.truth_ids[id] })
                .collect(),
            registration: after.registration,
            innovation,
            reset,
        };

        let dead: Vec<u64> =
            self.misses.iter().filter(|(_, m)| **m >= self.cfg.miss_limit).map(|(id, _)| *id).collect();
        if !dead.is_empty() {
            self.estimator.reshape(&[], &dead)?;
            for id in &dead {
                self.misses.remove(id);
                self.truth_ids.remove(id);
            }
        }

        if let Some(model) = next {
            self.estimator.propagate(model)?;
        }
        Ok(record)
    }

    /// Detections left unassociated twice in a row, at nearby positions,
    /// seed a track. Other-sensor leftovers near a newborn track join it.
    fn births(
        &mut self,
        tracks: &[(u64, TrackState)],
        registration: &[Registration],
        detections: &[Detection],
        unassociated: &[usize],
    ) -> Vec<((f64, f64), Vec<usize>)> {
        let gate = self.cfg.gate;
        let free: Vec<(usize, usize, (f64, f64))> = unassociated
            .iter()
            .filter_map(|&j| {
                let d = &detections[j];
                let reg = registration.get(d.sensor())?;
                let pos = d.measurement.back_project(reg);
                let crowded = tracks
                    .iter()
                    .any(|(_, x)| (x.xi - pos.0).hypot(x.eta - pos.1) < self.cfg.birth_exclusion);
                (!crowded).then_some((j, d.sensor(), pos))
            })
            .collect();

        let mut used = vec![false; free.len()];
        let mut pending_used = vec![false; self.pending.len()];
        let mut births = Vec::new();
        for a in 0..free.len() {
            if used[a] {
                continue;
            }
            let (j, sensor, pos) = free[a];
            let hit = self
                .pending
                .iter()
                .enumerate()
                .filter(|(p, _)| !pending_used[*p])
                .map(|(p, c)| (p, (c.0 - pos.0).hypot(c.1 - pos.1)))
                .filter(|(_, d)| *d <= gate)
                .min_by(|x, y| x.1.total_cmp(&y.1));
            let Some((p, _)) = hit else { continue };
            pending_used[p] = true;
            used[a] = true;
            let mut members = vec![j];
            let mut sensors = vec![sensor];
            for b in a + 1..free.len() {
                let (jb, sb, pb) = free[b];
                if !used[b] && !sensors.contains(&sb) && (pb.0 - pos.0).hypot(pb.1 - pos.1) <= gate {
                    used[b] = true;
                    members.push(jb);
                    sensors.push(sb);
                }
            }
            births.push((pos, members));
        }
        self.pending = free
            .iter()
            .zip(&used)
            .filter(|(_, u)| !**u)
            .map(|(&(_, _, pos), _)| pos)
            .collect();
        births
    }
}

/// Runs `estimator` over a detection stream; `epochs[k]` holds the time and
/// detections of epoch `k`.
pub fn run_tracker<E: Estimator>(
    estimator: E,
    epochs: &[(f64, Vec<Detection>)],
    process: &ProcessModel,
    cfg: TrackerConfig,
) -> Result<(Vec<EpochRecord>, E), CliError> {
    let mut tracker = Tracker::new(estimator, cfg);
    let mut records = Vec::with_capacity(epochs.len());
    let mut model_cache: Option<(f64, CvModel)> = None;
    for (k, (t, dets)) in epochs.iter().enumerate() {
        let model = match epochs.get(k + 1) {
            Some((t_next, _)) => {
                let dt = t_next - t;
                match model_cache {
                    Some((cached_dt, m)) if cached_dt == dt => Some(m),
                    _ => {
                        let m = process.model(dt)?;
                        model_cache = Some((dt, m));
                        Some(m)
                    }
                }
            }
            None => None,
        };
        records.push(tracker.step(*t, dets, model.as_ref())?);
    }
    Ok((records, tracker.estimator))
}

/// Everything one simulated run produces.
pub struct Simulation {
    pub scenario: Scenario,
    pub truth: Truth,
    pub detections: Vec<Vec<Detection>>,
}

impl Simulation {
    pub fn generate(cfg: &ScenarioConfig) -> Result<Self, CliError> {
        let (scenario, truth) = generate_scenario(cfg)?;
        let detections = synthesize_measurements(&scenario, &truth, &cfg.noise.sigmas()?, &cfg.fov, cfg.seed);
        Ok(Self { scenario, truth, detections })
    }

    pub fn epochs(&self) -> Vec<(f64, Vec<Detection>)> {
        self.truth.times.iter().copied().zip(self.detections.iter().cloned()).collect()
    }

    pub fn run(&self, algo: Algo, cfg: &ScenarioConfig) -> Result<Vec<EpochRecord>, CliError> {
        let est = build_estimator(algo, cfg)?;
        let (records, _) =
            run_tracker(est, &self.epochs(), &ProcessModel::from_config(cfg)?, TrackerConfig::from_config(cfg))?;
        Ok(records)
    }
}
