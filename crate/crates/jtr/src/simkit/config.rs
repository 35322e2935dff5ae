//! JSON scenario configuration. Angles are in degrees at this surface.

use std::path::Path;

use jtr_core::fmap::FmapConfig;
use jtr_core::models::{CvModel, NoiseSigmas, ProcessNoise, Registration, TrackState};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    pub xi0: f64,
    pub eta0: f64,
    pub psi0_deg: f64,
}

impl SensorConfig {
    pub fn registration(&self) -> Registration {
        Registration::from_degrees(self.xi0, self.eta0, self.psi0_deg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepChangeConfig {
    pub t: f64,
    pub sensor: usize,
    pub xi0: f64,
    pub eta0: f64,
    pub psi0_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpawnConfig {
    pub t_birth: f64,
    pub t_death: f64,
    pub xi: f64,
    pub v_xi: f64,
    pub eta: f64,
    pub v_eta: f64,
}

impl SpawnConfig {
    pub fn state(&self) -> TrackState {
        TrackState::new(self.xi, self.v_xi, self.eta, self.v_eta)
    }
}

/// Randomly placed targets, alive for the whole run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetConfig {
    pub count: usize,
    pub xi_range: [f64; 2],
    pub eta_range: [f64; 2],
    pub v_xi_range: [f64; 2],
    pub v_eta_range: [f64; 2],
    /// Minimum initial distance between two targets (m).
    pub min_separation: f64,
}

impl Default for TargetConfig {
    fn default() -> Self {
        Self {
            count: 10,
            xi_range: [10.0, 40.0],
            eta_range: [-12.0, 12.0],
            v_xi_range: [-0.5, 0.5],
            v_eta_range: [-0.5, 0.5],
            min_separation: 6.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub sigma_r: f64,
    pub sigma_rdot: f64,
    pub sigma_theta_deg: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { sigma_r: 0.1, sigma_rdot: 0.2, sigma_theta_deg: 1.0 }
    }
}

impl NoiseConfig {
    pub fn sigmas(&self) -> Result<NoiseSigmas, CliError> {
        NoiseSigmas::new(self.sigma_r, self.sigma_rdot, self.sigma_theta_deg.to_radians())
            .map_err(|e| CliError::Config(format!("noise: {e}")))
    }
}

/// Filter-side process noise information array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    /// Cholesky factor of the inverse white-acceleration covariance.
    #[default]
    StandardCv,
    /// `diag(qW, qW)` with `W` as printed.
    Verbatim,
}

impl NoiseModel {
    pub fn process_noise(self) -> ProcessNoise {
        match self {
            NoiseModel::StandardCv => ProcessNoise::StandardCv,
            NoiseModel::Verbatim => ProcessNoise::Verbatim,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProcessConfig {
    pub q_xi: f64,
    pub q_eta: f64,
    pub noise_model: NoiseModel,
}

impl Default for ProcessConfig {
    fn default() -> Self {
        Self { q_xi: 0.1, q_eta: 0.1, noise_model: NoiseModel::StandardCv }
    }
}

impl ProcessConfig {
    /// Filter-side model for a step of `dt`.
    pub fn model(&self, dt: f64) -> Result<CvModel, CliError> {
        CvModel::new(dt, self.q_xi, self.q_eta)
            .map(|m| m.with_noise(self.noise_model.process_noise()))
            .map_err(|e| CliError::Config(format!("process: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FovConfig {
    pub half_angle_deg: f64,
    pub r_min: f64,
    pub r_max: f64,
}

impl Default for FovConfig {
    fn default() -> Self {
        Self { half_angle_deg: 90.0, r_min: 0.5, r_max: 100.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterConfig {
    pub epsilon: f64,
    pub innovation_quantile: f64,
    pub innovation_window: usize,
    pub gate_distance: f64,
    pub miss_limit: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        let d = FmapConfig::default();
        Self {
            epsilon: d.epsilon,
            innovation_quantile: d.innovation_quantile,
            innovation_window: d.innovation_window,
            gate_distance: d.gate_distance,
            miss_limit: d.miss_limit,
        }
    }
}

impl FilterConfig {
    pub fn fmap(&self) -> FmapConfig {
        FmapConfig {
            epsilon: self.epsilon,
            innovation_quantile: self.innovation_quantile,
            innovation_window: self.innovation_window,
            gate_distance: self.gate_distance,
            miss_limit: self.miss_limit,
        }
    }
}

/// Standard deviations of the surveyed reference sensor's prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurveyConfig {
    pub position: f64,
    pub angle_deg: f64,
}

impl Default for SurveyConfig {
    fn default() -> Self {
        Self { position: 0.01, angle_deg: 0.1 }
    }
}

/// Offsets of the initial registration guess from the truth, drawn
/// uniformly from `±position` and `±angle_deg`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationConfig {
    pub position: f64,
    pub angle_deg: f64,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self { position: 0.2, angle_deg: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub duration: f64,
    pub dt: f64,
    /// True registrations.
    pub sensors: Vec<SensorConfig>,
    /// Sensor whose registration is known from a survey; `null` for none.
    pub reference_sensor: Option<usize>,
    pub reference_sigma: SurveyConfig,
    /// Explicit initial guess per sensor; when absent it is the truth plus a
    /// seeded perturbation.
    pub initial_guess: Option<Vec<SensorConfig>>,
    pub guess_perturbation: PerturbationConfig,
    pub step_changes: Vec<StepChangeConfig>,
    pub targets: TargetConfig,
    pub spawns: Vec<SpawnConfig>,
    pub noise: NoiseConfig,
    pub process: ProcessConfig,
    pub fov: FovConfig,
    pub filter: FilterConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            duration: 50.0,
            dt: 0.1,
            sensors: vec![
                SensorConfig { xi0: 2.0, eta0: 0.6, psi0_deg: 10.0 },
                SensorConfig { xi0: 2.0, eta0: -0.6, psi0_deg: -10.0 },
            ],
            reference_sensor: Some(0),
            reference_sigma: SurveyConfig::default(),
            initial_guess: None,
            guess_perturbation: PerturbationConfig::default(),
            step_changes: Vec::new(),
            targets: TargetConfig::default(),
            spawns: Vec::new(),
            noise: NoiseConfig::default(),
            process: ProcessConfig::default(),
            fov: FovConfig::default(),
            filter: FilterConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return bad("duration must be non-negative");
        }
        if self.sensors.is_empty() {
            return bad("at least one sensor is required");
        }
        if let Some(r) = self.reference_sensor {
            if r >= self.sensors.len() {
                return bad("reference_sensor out of range");
            }
        }
        if let Some(g) = &self.initial_guess {
            if g.len() != self.sensors.len() {
                return bad("initial_guess must list every sensor");
            }
        }
        if self.step_changes.iter().any(|s| s.sensor >= self.sensors.len()) {
            return bad("step change refers to an unknown sensor");
        }
        for s in &self.spawns {
            if !(s.t_birth >= 0.0 && s.t_death > s.t_birth && s.t_birth <= self.duration) {
                return bad("spawn window must lie within the run");
            }
        }
        let t = &self.targets;
        if t.xi_range[0] > t.xi_range[1] || t.eta_range[0] > t.eta_range[1] {
            return bad("target ranges must be ordered");
        }
        if self.fov.r_min >= self.fov.r_max || self.fov.half_angle_deg <= 0.0 {
            return bad("invalid field of view");
        }
        self.noise.sigmas()?;
        // q = 0 gives noiseless truth; the filter-side model is checked when a
        // filter is built.
        if !(self.process.q_xi >= 0.0 && self.process.q_eta >= 0.0) {
            return bad("process intensities must be non-negative");
        }
        self.filter.fmap().validate().map_err(|e| CliError::Config(format!("filter: {e}")))?;
        Ok(())
    }

    pub fn epochs(&self) -> usize {
        (self.duration / self.dt).round() as usize + 1
    }
}
