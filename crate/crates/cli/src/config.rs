use std::path::Path;

use airdelay_core::ingest::SynthConfig;
use airdelay_core::training::TrainConfig;
use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::errors::{coded, Code};

pub const CONFIG_ENV: &str = "AIRDELAY_CONFIG";

/// Contents of the optional TOML config file. Every section and field may
/// be omitted; command-line flags override whatever is set here.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub synth: SynthConfig,
    pub train: TrainConfig,
    pub split: SplitDays,
    pub ingest: IngestSection,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitDays {
    pub validation_days: Option<usize>,
    pub test_days: Option<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSection {
    pub missing_threshold: Option<f64>,
    pub max_fill_gap: Option<usize>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| coded(Code::Input, format!("config file {}: {e}", path.display())))?;
        toml::from_str(&text).with_context(|| format!("config file {}", path.display()))
    }
}

/// Overwrites `slot` when the flag was given.
pub fn overlay<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}
