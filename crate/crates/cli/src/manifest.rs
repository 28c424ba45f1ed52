use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::Serialize;

/// Record of one subcommand run, written last and atomically.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// Full command line; rerunning it single-threaded reproduces the outputs.
    pub args: Vec<String>,
    pub config_file: Option<String>,
    pub config: serde_json::Value,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub started_utc: String,
    pub wall_seconds: f64,
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn start(subcommand: &str, config_file: Option<&Path>) -> (Self, Instant) {
        let m = Self {
            subcommand: subcommand.to_string(),
            args: std::env::args().collect(),
            config_file: config_file.map(|p| p.display().to_string()),
            config: serde_json::Value::Null,
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed: None,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_utc: chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ").to_string(),
            wall_seconds: 0.0,
            notes: Vec::new(),
        };
        (m, Instant::now())
    }

    pub fn input(&mut self, p: &Path) {
        self.inputs.push(p.display().to_string());
    }

    pub fn set_config<T: Serialize>(&mut self, c: &T) -> anyhow::Result<()> {
        self.config = serde_json::to_value(c).context("serializing resolved config")?;
        Ok(())
    }

    /// Writes `manifest-<subcommand>.json` into `dir`.
    pub fn finish(mut self, dir: &Path, started: Instant) -> anyhow::Result<PathBuf> {
        self.wall_seconds = started.elapsed().as_secs_f64();
        let path = dir.join(format!("manifest-{}.json", self.subcommand));
        let mut bytes = serde_json::to_vec_pretty(&self).context("serializing manifest")?;
        bytes.push(b'\n');
        write_atomic(&path, &bytes)?;
        Ok(path)
    }
}

/// Writes to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming {} to {}", tmp.display(), path.display()))?;
    Ok(())
}
