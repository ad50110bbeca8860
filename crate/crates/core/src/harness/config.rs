use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policies::PolicyId;
use crate::testbeds::Testbed;

/// Seeds `start, start + 1, ..., start + count - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedRange {
    #[serde(default)]
    pub start: u64,
    pub count: u64,
}

impl SeedRange {
    pub fn iter(&self) -> impl Iterator<Item = u64> {
        self.start..self.start + self.count
    }
}

fn default_policies() -> Vec<PolicyId> {
    PolicyId::ALL.to_vec()
}

/// One experiment: a testbed, the policies to compare and the grid of
/// budgets, thresholds and seeds. Budgets are in the testbed's cost units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub testbed: Testbed,
    #[serde(default = "default_policies")]
    pub policies: Vec<PolicyId>,
    pub budgets: Vec<f64>,
    /// Thresholds for the multi-fidelity policy; the game default when empty.
    #[serde(default)]
    pub etas: Vec<f64>,
    pub seeds: SeedRange,
    /// Root of every derived seed.
    #[serde(default)]
    pub master_seed: u64,
    /// Overrides of the confidence-width constants and reward normalizer.
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub pe_samples: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub parallel: Option<usize>,
    /// Write one JSON trace per cell.
    #[serde(default = "yes")]
    pub save_runs: bool,
}

fn yes() -> bool {
    true
}

pub const PRESET_NAMES: [&str; 4] = ["synthetic-n2", "synthetic-n10", "power", "aloha"];

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let text = match name {
            "synthetic-n2" => include_str!("../../presets/synthetic-n2.toml"),
            "synthetic-n10" => include_str!("../../presets/synthetic-n10.toml"),
            "power" => include_str!("../../presets/power.toml"),
            "aloha" => include_str!("../../presets/aloha.toml"),
            other => {
                return Err(Error::Config(format!(
                    "unknown preset '{other}', expected one of {}",
                    PRESET_NAMES.join(", ")
                )))
            }
        };
        Self::from_toml(text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.policies.is_empty() {
            return bad("no policies listed".into());
        }
        if self.budgets.is_empty() || self.budgets.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            return bad("budgets must be a nonempty list of positive numbers".into());
        }
        if self.seeds.count == 0 {
            return bad("seed range is empty".into());
        }
        if self.etas.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
            return bad("thresholds must lie in (0, 1]".into());
        }
        if self.parallel == Some(0) {
            return bad("parallel must be at least 1".into());
        }
        Ok(())
    }
}
