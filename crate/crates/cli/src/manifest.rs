//! `manifest.json`: what was run, by which build, and how it ended.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const MANIFEST_FORMAT: &str = "critles-manifest-v1";

/// Crate version and source revision of this binary.
pub fn version_stamp() -> String {
    format!(
        "{} ({})",
        env!("CARGO_PKG_VERSION"),
        env!("CRITLES_REVISION")
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Completed,
    BlowUp,
    Partial,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub format: &'static str,
    pub command: &'static str,
    pub version: String,
    pub workers: usize,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub steps_completed: usize,
    pub final_time: f64,
    pub wall_seconds: f64,
    /// Files written, relative to the output directory.
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<serde_json::Value>,
    /// Fully resolved configuration; `critles run manifest.json` repeats the run.
    pub config: RunConfig,
}

impl Manifest {
    pub fn new(command: &'static str, config: RunConfig, workers: usize) -> Self {
        Manifest {
            format: MANIFEST_FORMAT,
            command,
            version: version_stamp(),
            workers,
            status: Status::Completed,
            message: None,
            steps_completed: 0,
            final_time: 0.0,
            wall_seconds: 0.0,
            outputs: Vec::new(),
            sweep: None,
            config,
        }
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self)?;
        fs::write(&path, text + "\n").map_err(|e| CliError::io(path.display().to_string(), e))
    }
}
