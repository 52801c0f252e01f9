//! Run configuration shared by every CLI command.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::entropy::LogBase;
use crate::error::{Error, Result};
use crate::io::{sha256_hex, TensorFiles};
use crate::synth::SyntheticConfig;
use crate::witness::{Direction, EvaluationMode};

pub const DEFAULT_BOOTSTRAP: usize = 1000;

/// Where measured counts come from: a manifest, or explicit tensor lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct InputFiles {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub position: Vec<TensorFiles>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub momentum: Vec<TensorFiles>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MapValues {
    /// Bootstrap significance in standard deviations.
    #[default]
    Significance,
    /// Point-estimate margin in entropy units.
    Margin,
}

fn default_boot() -> usize {
    DEFAULT_BOOTSTRAP
}

fn default_directions() -> Vec<Direction> {
    vec![Direction::BGivenA, Direction::AGivenB, Direction::Symmetric]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub log_base: LogBase,
    /// Bootstrap replicates; 0 skips the bootstrap.
    #[serde(default = "default_boot")]
    pub n_boot: usize,
    /// Bootstrap seed.
    #[serde(default)]
    pub seed: u64,
    /// Witnesses to evaluate; sweeps use the first.
    #[serde(default = "default_directions")]
    pub directions: Vec<Direction>,
    /// Expected layout of the data; checked against what is loaded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<EvaluationMode>,
    /// Added to every cell before analysis.
    #[serde(default)]
    pub pseudocount: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputFiles>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticConfig>,
    /// Party-A resolutions of a map; all divisors of the base by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets_a: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets_b: Option<Vec<usize>>,
    /// Resolutions of a curve.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<usize>>,
    #[serde(default)]
    pub map_values: MapValues,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            log_base: LogBase::default(),
            n_boot: DEFAULT_BOOTSTRAP,
            seed: 0,
            directions: default_directions(),
            mode: None,
            pseudocount: 0,
            input: None,
            synthetic: None,
            targets_a: None,
            targets_b: None,
            targets: None,
            map_values: MapValues::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    /// Check the cross-field rules.
    pub fn validate(&self) -> Result<()> {
        match (&self.input, &self.synthetic) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give either input files or synthetic parameters, not both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::Config(
                    "no data: give input files or synthetic parameters".into(),
                ))
            }
            _ => {}
        }
        if let Some(input) = &self.input {
            let listed = !input.position.is_empty() || !input.momentum.is_empty();
            if input.manifest.is_some() == listed {
                return Err(Error::Config(
                    "input needs either a manifest or position and momentum tensors".into(),
                ));
            }
        }
        if let Some(s) = &self.synthetic {
            if let Some(mode) = self.mode {
                if mode != s.mode {
                    return Err(Error::Config(format!(
                        "mode {mode:?} disagrees with synthetic mode {:?}",
                        s.mode
                    )));
                }
            }
            if s.total_counts == 0 {
                return Err(Error::Config("synthetic total_counts must be positive".into()));
            }
        }
        if self.directions.is_empty() {
            return Err(Error::Config("no witness directions selected".into()));
        }
        for list in [&self.targets_a, &self.targets_b, &self.targets].into_iter().flatten() {
            if list.is_empty() || list.contains(&0) {
                return Err(Error::Config("resolution targets must be positive".into()));
            }
        }
        Ok(())
    }

    /// SHA-256 of the compact JSON form.
    pub fn hash(&self) -> Result<String> {
        Ok(sha256_hex(serde_json::to_string(self)?.as_bytes()))
    }
}
