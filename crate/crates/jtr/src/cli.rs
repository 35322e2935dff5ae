//! `jtr` command line: simulate, compare, benchmark, replay.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use jtr_core::FilterState;

use crate::error::CliError;
use crate::formats::csv::{self as csvout, write_preamble};
use crate::formats::{replay, snapshot};
use crate::manifest::ManifestBuilder;
use crate::simkit::bench::{self, BenchConfig};
use crate::simkit::config::{NoiseModel, ScenarioConfig};
use crate::simkit::driver::{
    build_estimator, registration_priors, run_tracker, Algo, EpochRecord, ProcessModel, Simulation, TrackerConfig,
};
use crate::simkit::metrics::{error_table, registration_error, ErrorTable};

pub const SEED_ENV: &str = "JTR_SEED";

#[derive(Debug, Parser)]
#[command(name = "jtr", version = crate::manifest::GIT_DESCRIBE, about = "Joint multi-target tracking and sensor registration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write tracks.csv and registration.csv.
    Simulate(SimulateArgs),
    /// Monte-Carlo comparison of every estimator.
    Compare(CompareArgs),
    /// Step time against the number of tracks; writes timing.csv.
    Benchmark(BenchmarkArgs),
    /// Run association and FMAP over a recorded detection file.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgoChoice {
    Fmap,
    Sep,
    Dense,
    All,
}

impl AlgoChoice {
    fn algos(self) -> Vec<Algo> {
        match self {
            AlgoChoice::Fmap => vec![Algo::Fmap],
            AlgoChoice::Sep => vec![Algo::Sep],
            AlgoChoice::Dense => vec![Algo::Dense],
            AlgoChoice::All => Algo::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides `JTR_SEED` and the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config's filter-side process noise model.
    #[arg(long, value_enum)]
    pub noise_model: Option<NoiseModelArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseModelArg {
    StandardCv,
    Verbatim,
}

impl From<NoiseModelArg> for NoiseModel {
    fn from(a: NoiseModelArg) -> Self {
        match a {
            NoiseModelArg::StandardCv => NoiseModel::StandardCv,
            NoiseModelArg::Verbatim => NoiseModel::Verbatim,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, value_enum, default_value = "fmap")]
    pub algo: AlgoChoice,
    /// Also write the final FMAP information array and a state snapshot.
    #[arg(long)]
    pub dump_info: bool,
    /// Also write the synthesized detections in the replay format.
    #[arg(long)]
    pub detections_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Trial `i` uses seed `seed + i`.
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Track counts, ascending.
    #[arg(long, value_delimiter = ',', default_value = "10,50,100,300")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    #[arg(long, default_value_t = 2)]
    pub warmup: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "all")]
    pub algo: AlgoChoice,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Detection file, `t,sensor_id,r,rdot,theta_deg` per line.
    pub detections: PathBuf,
    /// Sensor registrations (the reference for error columns), initial guess,
    /// noise and filter settings.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (name, out, config) = match &cli.command {
        Command::Simulate(a) => ("simulate", a.scenario.out.clone(), Some(a.scenario.config.clone())),
        Command::Compare(a) => ("compare", a.scenario.out.clone(), Some(a.scenario.config.clone())),
        Command::Benchmark(a) => ("benchmark", a.out.clone(), None),
        Command::Replay(a) => ("replay", a.out.clone(), Some(a.config.clone())),
    };
    let mut manifest = ManifestBuilder::new(name, &out, config.as_deref());
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(&a, &mut manifest),
        Command::Compare(a) => compare(&a, &mut manifest),
        Command::Benchmark(a) => benchmark(&a, &mut manifest),
        Command::Replay(a) => replay_cmd(&a, &mut manifest),
    };
    if let Err(e) = &outcome {
        eprintln!("error: {e}");
    }
    let code = outcome.as_ref().err().map_or(0, CliError::exit_code);
    match manifest.finish(&outcome) {
        Ok(_) => code,
        Err(e) => {
            eprintln!("error: cannot write manifest: {e}");
            if code == 0 {
                e.exit_code()
            } else {
                code
            }
        }
    }
}

/// Flag, then `JTR_SEED`, then the config value.
pub fn resolve_seed(flag: Option<u64>, env: Option<&str>, config: u64) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match env.map(str::trim).filter(|s| !s.is_empty()) {
        Some(s) => s.parse().map_err(|_| CliError::Config(format!("{SEED_ENV} is not an unsigned integer: {s:?}"))),
        None => Ok(config),
    }
}

fn env_seed() -> Option<String> {
    std::env::var(SEED_ENV).ok()
}

fn load_scenario(a: &ScenarioArgs, manifest: &mut ManifestBuilder) -> Result<ScenarioConfig, CliError> {
    let mut cfg = ScenarioConfig::load(&a.config)?;
    cfg.seed = resolve_seed(a.seed, env_seed().as_deref(), cfg.seed)?;
    if let Some(m) = a.noise_model {
        cfg.process.noise_model = m.into();
    }
    cfg.validate()?;
    manifest.seed(cfg.seed);
    Ok(cfg)
}

/// Files are staged in memory and written only once every run succeeded.
struct Outputs {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    fn new(dir: &Path) -> Self {
        Self { dir: dir.to_path_buf(), files: Vec::new() }
    }

    fn csv(&mut self, name: &str, header: &str) -> Result<&mut Vec<u8>, CliError> {
        let mut buf = Vec::new();
        write_preamble(&mut buf, name, header)?;
        self.files.push((name.to_string(), buf));
        Ok(&mut self.files.last_mut().expect("just pushed").1)
    }

    fn raw(&mut self, name: &str) -> &mut Vec<u8> {
        self.files.push((name.to_string(), Vec::new()));
        &mut self.files.last_mut().expect("just pushed").1
    }

    fn commit(self, manifest: &mut ManifestBuilder) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.dir)?;
        for (name, bytes) in &self.files {
            let mut f = BufWriter::new(File::create(self.dir.join(name))?);
            f.write_all(bytes)?;
            f.flush()?;
            manifest.output(name);
        }
        Ok(())
    }
}

fn simulate(a: &SimulateArgs, manifest: &mut ManifestBuilder) -> Result<(), CliError> {
    let cfg = load_scenario(&a.scenario, manifest)?;
    let sim = Simulation::generate(&cfg)?;
    let mut out = Outputs::new(&a.scenario.out);
    let algos = a.algo.algos();
    let mut runs: Vec<(Algo, Vec<EpochRecord>)> = Vec::new();
    let mut fmap_final: Option<FilterState> = None;
    for &algo in &algos {
        if algo == Algo::Fmap && a.dump_info {
            let est = FilterState::with_registration_prior(cfg.filter.fmap(), &registration_priors(&cfg))?;
            let (records, state) =
                run_tracker(est, &sim.epochs(), &ProcessModel::from_config(&cfg)?, TrackerConfig::from_config(&cfg))?;
            fmap_final = Some(state);
            runs.push((algo, records));
        } else {
            runs.push((algo, sim.run(algo, &cfg)?));
        }
    }

    let w = out.csv("tracks.csv", csvout::TRACKS_HEADER)?;
    for (algo, records) in &runs {
        csvout::write_tracks(w, *algo, records, Some(&sim.truth))?;
    }
    let w = out.csv("registration.csv", csvout::REGISTRATION_HEADER)?;
    for (algo, records) in &runs {
        csvout::write_registration(w, *algo, records, |t| sim.scenario.registration_at(t))?;
    }
    if let Some(state) = &fmap_final {
        snapshot::write_info_body(out.raw("fmap_info.txt"), state.info())?;
        snapshot::write_snapshot(out.raw("fmap_snapshot.txt"), state)?;
    }
    let detections = match &a.detections_out {
        Some(path) => {
            let mut buf = Vec::new();
            replay::write_detections(&mut buf, &sim.epochs())?;
            Some((path, buf))
        }
        None => None,
    };
    out.commit(manifest)?;
    if let Some((path, buf)) = detections {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, buf)?;
    }

    for (algo, records) in &runs {
        if let Some(last) = records.last() {
            let truth = sim.scenario.registration_at(last.t);
            for (s, (e, t)) in last.registration.iter().zip(&truth).enumerate() {
                let err = registration_error(e, t);
                println!(
                    "{algo:>5} sensor {s}: final error xi0 {:+.4} m, eta0 {:+.4} m, psi0 {:+.3} deg; {} tracks",
                    err[0],
                    err[1],
                    err[2].to_degrees(),
                    last.tracks.len()
                );
            }
        }
    }
    Ok(())
}

/// Per-trial results of [`compare`].
struct TrialResult {
    tables: Vec<ErrorTable>,
    /// Final signed registration errors per algorithm and sensor.
    finals: Vec<Vec<[f64; 3]>>,
}

fn run_trial(base: &ScenarioConfig, trial: usize, algos: &[Algo]) -> Result<TrialResult, CliError> {
    let cfg = ScenarioConfig { seed: base.seed.wrapping_add(trial as u64), ..base.clone() };
    let sim = Simulation::generate(&cfg)?;
    let mut tables = Vec::new();
    let mut finals = Vec::new();
    for &algo in algos {
        let records = sim.run(algo, &cfg)?;
        tables.push(error_table(&records, &sim.scenario, &sim.truth)?);
        let last = records.last().ok_or_else(|| CliError::Config("scenario has no epochs".into()))?;
        let truth = sim.scenario.registration_at(last.t);
        finals.push(last.registration.iter().zip(&truth).map(|(e, t)| registration_error(e, t)).collect());
    }
    Ok(TrialResult { tables, finals })
}

/// Runs `trials` independent trials on up to `jobs` threads; results are in
/// trial order regardless of scheduling.
fn run_trials(cfg: &ScenarioConfig, trials: usize, jobs: usize, algos: &[Algo]) -> Result<Vec<TrialResult>, CliError> {
    let jobs = jobs.clamp(1, trials.max(1));
    let mut slots: Vec<Option<Result<TrialResult, CliError>>> = (0..trials).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..jobs)
            .map(|w| {
                scope.spawn(move || {
                    (w..trials).step_by(jobs).map(|i| (i, run_trial(cfg, i, algos))).collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("trial worker panicked") {
                slots[i] = Some(r);
            }
        }
    });
    slots.into_iter().map(|r| r.expect("every trial ran")).collect()
}

fn compare(a: &CompareArgs, manifest: &mut ManifestBuilder) -> Result<(), CliError> {
    if a.trials == 0 {
        return Err(CliError::Config("at least one trial is required".into()));
    }
    let cfg = load_scenario(&a.scenario, manifest)?;
    let algos = Algo::ALL;
    let results = run_trials(&cfg, a.trials, a.jobs, &algos)?;

    let mut out = Outputs::new(&a.scenario.out);
    let w = out.csv("metrics.csv", csvout::METRICS_HEADER)?;
    let mut means = Vec::new();
    for (ai, &algo) in algos.iter().enumerate() {
        let k = cfg.sensors.len();
        let mut mean = ErrorTable { track: [0.0; 4], registration: vec![[0.0; 3]; k], track_samples: 0 };
        for r in &results {
            let t = &r.tables[ai];
            for c in 0..4 {
                mean.track[c] += t.track[c] / a.trials as f64;
            }
            for (m, s) in mean.registration.iter_mut().zip(&t.registration) {
                for c in 0..3 {
                    m[c] += s[c] / a.trials as f64;
                }
            }
            mean.track_samples += t.track_samples;
        }
        csvout::write_metrics(w, algo, a.trials, &mean)?;
        means.push(mean);
    }
    let w = out.csv("final_registration.csv", "algo,trial,seed,sensor,err_xi0,err_eta0,err_psi0_deg")?;
    for (i, r) in results.iter().enumerate() {
        for (ai, algo) in algos.iter().enumerate() {
            for (s, e) in r.finals[ai].iter().enumerate() {
                writeln!(
                    w,
                    "{algo},{i},{},{s},{},{},{}",
                    cfg.seed.wrapping_add(i as u64),
                    crate::formats::gfmt::g9(e[0]),
                    crate::formats::gfmt::g9(e[1]),
                    crate::formats::gfmt::g9(e[2].to_degrees())
                )?;
            }
        }
    }
    out.commit(manifest)?;

    println!("mean absolute error over {} trials (angles in degrees)", a.trials);
    println!("{:>5}  {:>9} {:>9} {:>9} {:>9}  sensor {:>9} {:>9} {:>9}", "algo", "xi", "v_xi", "eta", "v_eta", "xi0", "eta0", "psi0");
    for (algo, m) in algos.iter().zip(&means) {
        for (s, r) in m.registration.iter().enumerate() {
            println!(
                "{algo:>5}  {:>9.4} {:>9.4} {:>9.4} {:>9.4}  {s:>6} {:>9.4} {:>9.4} {:>9.4}",
                m.track[0],
                m.track[1],
                m.track[2],
                m.track[3],
                r[0],
                r[1],
                r[2].to_degrees()
            );
        }
    }
    Ok(())
}

fn benchmark(a: &BenchmarkArgs, manifest: &mut ManifestBuilder) -> Result<(), CliError> {
    let seed = resolve_seed(a.seed, env_seed().as_deref(), 1)?;
    manifest.seed(seed);
    let cfg = BenchConfig { n_list: a.n.clone(), trials: a.trials, warmup: a.warmup, seed };
    let algos = a.algo.algos();
    let samples = bench::run_benchmark(&cfg, &algos)?;
    let mut out = Outputs::new(&a.out);
    csvout::write_timing(out.csv("timing.csv", csvout::TIMING_HEADER)?, &samples)?;
    out.commit(manifest)?;
    for algo in algos {
        let med = bench::medians(&samples, algo);
        let cells: Vec<String> = med.iter().map(|(n, t)| format!("n={n}: {:.3e} s", t)).collect();
        let slope = if med.len() >= 2 { format!("{:.2}", bench::slope(&samples, algo)) } else { "n/a".into() };
        println!("{algo:>5} slope {slope}  median step {}", cells.join(", "));
    }
    Ok(())
}

fn replay_cmd(a: &ReplayArgs, manifest: &mut ManifestBuilder) -> Result<(), CliError> {
    let cfg = ScenarioConfig::load(&a.config)?;
    manifest.seed(cfg.seed);
    let text = std::fs::read_to_string(&a.detections)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", a.detections.display())))?;
    let epochs = replay::parse_detections(&text, cfg.sensors.len(), &cfg.noise.sigmas()?)?;
    let est = build_estimator(Algo::Fmap, &cfg)?;
    let (records, _) =
        run_tracker(est, &epochs, &ProcessModel::from_config(&cfg)?, TrackerConfig::from_config(&cfg))?;
    let surveyed: Vec<_> = cfg.sensors.iter().map(|s| s.registration()).collect();

    let mut out = Outputs::new(&a.out);
    csvout::write_registration(
        out.csv("registration.csv", csvout::REGISTRATION_HEADER)?,
        Algo::Fmap,
        &records,
        |_| surveyed.clone(),
    )?;
    csvout::write_track_count(out.csv("track_count.csv", csvout::TRACK_COUNT_HEADER)?, Algo::Fmap, &records)?;
    out.commit(manifest)?;
    if let Some(last) = records.last() {
        for (s, (e, t)) in last.registration.iter().zip(&surveyed).enumerate() {
            let err = registration_error(e, t);
            println!(
                "sensor {s}: final error xi0 {:+.4} m, eta0 {:+.4} m, psi0 {:+.3} deg",
                err[0],
                err[1],
                err[2].to_degrees()
            );
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_precedence() {
        assert_eq!(resolve_seed(Some(3), Some("5"), 7).unwrap(), 3);
        assert_eq!(resolve_seed(None, Some("5"), 7).unwrap(), 5);
        assert_eq!(resolve_seed(None, None, 7).unwrap(), 7);
        assert_eq!(resolve_seed(None, Some(" "), 7).unwrap(), 7);
        assert_eq!(resolve_seed(None, Some("x"), 7).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
