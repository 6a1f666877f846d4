use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Sidecar record written next to every output set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Command-line arguments after the program name; `hypercomm replay` reruns them.
    pub args: Vec<String>,
    /// Fully resolved configuration, no `auto` left.
    pub config: serde_json::Value,
    pub seed: u64,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    /// Worker threads, 0 for serial mode.
    pub threads: usize,
    pub version: String,
    pub started_unix: f64,
    pub wall_clock_seconds: f64,
}

pub struct Clock {
    started_unix: f64,
    start: Instant,
}

impl Clock {
    pub fn start() -> Self {
        let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
        Self { started_unix, start: Instant::now() }
    }
}

pub struct ManifestBuilder<'a> {
    pub command: &'a str,
    pub args: &'a [String],
    pub threads: usize,
    pub clock: Clock,
}

impl ManifestBuilder<'_> {
    pub fn finish(self, config: serde_json::Value, seed: u64, inputs: Vec<PathBuf>, outputs: Vec<PathBuf>, converged: Option<bool>) -> RunManifest {
        RunManifest {
            command: self.command.to_string(),
            args: self.args.to_vec(),
            config,
            seed,
            inputs,
            outputs,
            converged,
            threads: self.threads,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: self.clock.started_unix,
            wall_clock_seconds: self.clock.start.elapsed().as_secs_f64(),
        }
    }
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Data(format!("serializing manifest: {e}")))?;
        fs::write(path, text + "\n").map_err(|source| CliError::Io { path: path.to_path_buf(), source })
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }
}
