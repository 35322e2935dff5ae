//! `manifest.json`, written by every command before it exits.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::error::CliError;

/// `git describe` of the build, or `unknown`.
pub const GIT_DESCRIBE: &str = env!("JTR_GIT_DESCRIBE");

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub seed: Option<u64>,
    pub git_describe: String,
    pub output_dir: PathBuf,
    pub wall_time_seconds: f64,
    pub exit_code: i32,
    pub error: Option<String>,
    /// Files written, relative to the output directory.
    pub outputs: Vec<String>,
}

pub struct ManifestBuilder {
    manifest: RunManifest,
    start: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str, output_dir: &Path, config_path: Option<&Path>) -> Self {
        Self {
            manifest: RunManifest {
                command: command.to_string(),
                config_path: config_path.map(Path::to_path_buf),
                seed: None,
                git_describe: GIT_DESCRIBE.to_string(),
                output_dir: output_dir.to_path_buf(),
                wall_time_seconds: 0.0,
                exit_code: 0,
                error: None,
                outputs: Vec::new(),
            },
            start: Instant::now(),
        }
    }

    pub fn seed(&mut self, seed: u64) {
        self.manifest.seed = Some(seed);
    }

    pub fn output(&mut self, name: &str) {
        self.manifest.outputs.push(name.to_string());
    }

    /// Stamps the outcome and writes `manifest.json`, creating the output
    /// directory if needed.
    pub fn finish(mut self, outcome: &Result<(), CliError>) -> Result<RunManifest, CliError> {
        self.manifest.wall_time_seconds = self.start.elapsed().as_secs_f64();
        if let Err(e) = outcome {
            self.manifest.exit_code = e.exit_code();
            self.manifest.error = Some(e.to_string());
        }
        std::fs::create_dir_all(&self.manifest.output_dir)?;
        let text = serde_json::to_string_pretty(&self.manifest).map_err(|e| CliError::Io(e.into()))?;
        std::fs::write(self.manifest.output_dir.join("manifest.json"), text + "\n")?;
        Ok(self.manifest)
    }
}
