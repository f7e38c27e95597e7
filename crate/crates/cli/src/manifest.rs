use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to reproduce a run's outputs with the same binary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub command: String,
    /// Fully resolved configuration, defaults included.
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    pub outputs: Vec<PathBuf>,
    pub duration_secs: f64,
}

impl RunManifest {
    pub fn new<C: Serialize>(command: &str, config: &C, seed: Option<u64>) -> Result<Self, CliError> {
        Ok(RunManifest {
            command: command.to_string(),
            config: serde_json::to_value(config).map_err(|e| CliError::Runtime(e.to_string()))?,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: Vec::new(),
            duration_secs: 0.0,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self).map_err(|e| CliError::Runtime(e.to_string()))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}
