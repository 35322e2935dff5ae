//! Wall-clock cost of one filter step versus the number of tracks.

use std::time::Instant;

use jtr_core::models::Measurement;

use super::config::ScenarioConfig;
use super::driver::{build_estimator, Algo, ProcessModel, Simulation};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub n_list: Vec<usize>,
    pub trials: usize,
    /// Untimed steps run before the first timed one.
    pub warmup: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { n_list: vec![10, 50, 100, 300], trials: 5, warmup: 2, seed: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingSample {
    pub algo: Algo,
    pub n: usize,
    pub trial: usize,
    pub seconds: f64,
}

/// Scenario with `n` targets, all visible to both sensors.
pub fn bench_scenario(n: usize, epochs: usize, seed: u64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig { seed, duration: (epochs.max(1) - 1) as f64 * 0.1, dt: 0.1, ..Default::default() };
    cfg.targets.count = n;
    cfg.targets.xi_range = [10.0, 60.0];
    cfg.targets.eta_range = [-30.0, 30.0];
    cfg.targets.min_separation = 0.0;
    cfg
}

/// Times update, change test and propagation per step. Tracks are created
/// at the true initial states and detections are paired by origin, so the
/// timing excludes association, I/O and scenario generation.
pub fn run_benchmark(cfg: &BenchConfig, algos: &[Algo]) -> Result<Vec<TimingSample>, CliError> {
    if cfg.n_list.windows(2).any(|w| w[0] >= w[1]) || cfg.n_list.first() == Some(&0) {
        return Err(CliError::Config("benchmark sizes must be positive and strictly ascending".into()));
    }
    if cfg.trials == 0 {
        return Err(CliError::Config("at least one trial is required".into()));
    }
    let steps = cfg.warmup + cfg.trials;
    let mut out = Vec::with_capacity(algos.len() * cfg.n_list.len() * cfg.trials);
    for &n in &cfg.n_list {
        let scenario = bench_scenario(n, steps, cfg.seed);
        let sim = Simulation::generate(&scenario)?;
        let model = ProcessModel::from_config(&scenario)?.model(scenario.dt)?;
        let batches: Vec<Vec<(u64, Measurement)>> = sim
            .detections
            .iter()
            .map(|dets| dets.iter().filter_map(|d| Some((d.origin? as u64, d.measurement))).collect())
            .collect();
        let initial: Vec<_> = sim.truth.states[0]
            .iter()
            .enumerate()
            .filter_map(|(i, x)| Some((i as u64, (*x)?)))
            .collect();
        for &algo in algos {
            let mut est = build_estimator(algo, &scenario)?;
            est.reshape(&initial, &[])?;
            for (k, batch) in batches.iter().enumerate().take(steps) {
                let start = Instant::now();
                let innovation = est.update(batch)?;
                est.check_reset(innovation)?;
                est.propagate(&model)?;
                let seconds = start.elapsed().as_secs_f64();
                if k >= cfg.warmup {
                    out.push(TimingSample { algo, n, trial: k - cfg.warmup, seconds });
                }
            }
        }
    }
    Ok(out)
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Median seconds per `n` for one algorithm, ascending in `n`.
pub fn medians(samples: &[TimingSample], algo: Algo) -> Vec<(usize, f64)> {
    let mut ns: Vec<usize> = samples.iter().filter(|s| s.algo == algo).map(|s| s.n).collect();
    ns.sort_unstable();
    ns.dedup();
    ns.into_iter()
        .map(|n| {
            let v: Vec<f64> = samples.iter().filter(|s| s.algo == algo && s.n == n).map(|s| s.seconds).collect();
            (n, median(&v))
        })
        .collect()
}

/// Log-log slope of the median step time against `n`.
pub fn slope(samples: &[TimingSample], algo: Algo) -> f64 {
    let pts: Vec<(f64, f64)> = medians(samples, algo).into_iter().map(|(n, t)| (n as f64, t)).collect();
    loglog_slope(&pts)
}
