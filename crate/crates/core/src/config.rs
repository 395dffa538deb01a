//! Experiment configuration: a single TOML file with nested sections for the
//! vehicle, planner, baseline driver, and scenario matrix. Every field has a
//! study default, so an empty file is a valid configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::BaselineParams;
use crate::harness::ScenarioSpec;
use crate::optimizer::OptimizerConfig;
use crate::vehicle::VehicleParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub out_dir: PathBuf,
    pub verbose: bool,
    pub vehicle: VehicleParams,
    pub optimizer: OptimizerConfig,
    pub baseline: BaselineParams,
    /// Explicit scenario matrix; empty means "use the built-in study matrix".
    pub scenarios: Vec<ScenarioSpec>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            master_seed: 42,
            out_dir: PathBuf::from("results"),
            verbose: false,
            vehicle: VehicleParams::cadillac_srx_2014(),
            optimizer: OptimizerConfig::default(),
            baseline: BaselineParams::default(),
            scenarios: Vec::new(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Collects every violated invariant across all sections; does not stop
    /// at the first.
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        problems.extend(self.vehicle.validate());
        problems.extend(self.optimizer.validate());
        problems.extend(self.baseline.validate());
        for (i, s) in self.scenarios.iter().enumerate() {
            problems.extend(s.validate().into_iter().map(|p| format!("scenarios[{i}]: {p}")));
        }
        problems
    }

    pub fn ensure_valid(&self) -> Result<(), ConfigError> {
        let problems = self.validate();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(problems))
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialization is infallible")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{GradeDirection, ScenarioKind};

    #[test]
    fn defaults_are_valid() {
        assert!(ExperimentConfig::default().validate().is_empty());
    }

    #[test]
    fn empty_file_parses_to_defaults() {
        let cfg: ExperimentConfig = toml::from_str("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
    }

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = ExperimentConfig::default();
        cfg.scenarios.push(ScenarioSpec {
            kind: ScenarioKind::Stochastic,
            grade: GradeDirection::Uphill,
            initial_speed_mps: 17.88,
            ttg_s: 20.0,
            bias_s: 1.0,
            sd_s: 2.0,
            replications: 10,
            seed: 7,
        });
        let text = cfg.to_toml();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn validation_names_the_offending_invariant() {
        let mut cfg = ExperimentConfig::default();
        cfg.optimizer.throttle_grid.push(1.2);
        cfg.scenarios.push(ScenarioSpec {
            kind: ScenarioKind::Stochastic,
            grade: GradeDirection::Downhill,
            initial_speed_mps: 17.88,
            ttg_s: 15.0,
            bias_s: 0.0,
            sd_s: -1.0,
            replications: 1,
            seed: 0,
        });
        let problems = cfg.validate();
        assert!(problems.iter().any(|p| p.contains("Control bounds")), "{problems:?}");
        assert!(problems.iter().any(|p| p.contains("sd_s")), "{problems:?}");
    }
}
