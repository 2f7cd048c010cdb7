use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;

use crate::error::CliError;

/// Provenance record written next to every command's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub version: &'static str,
    pub duration_secs: f64,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        Self {
            command: command.to_owned(),
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed: None,
            version: env!("CARGO_PKG_VERSION"),
            duration_secs: 0.0,
        }
    }

    pub fn finish(mut self, elapsed: Duration, path: &Path) -> Result<(), CliError> {
        self.duration_secs = elapsed.as_secs_f64();
        let text = serde_json::to_string_pretty(&self)?;
        crate::error::write_file(path, text + "\n")
    }
}

/// `<out>.manifest.json` beside a primary output file.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}
