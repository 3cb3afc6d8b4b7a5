//! Solution and sweep-configuration documents exchanged through the CLI.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::format;
use crate::harness::{AlgoConfig, Algorithm, TrendThresholds};
use crate::model::{Assignment, DelayModel};
use crate::scenario::{Axis, ScenarioSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub format_version: String,
    pub algorithm: Algorithm,
    pub assignment: Assignment,
    pub makespan_ms: f64,
    pub completion_rate: f64,
    pub per_mode_loads: Vec<f64>,
    pub delay_model: DelayModel,
    pub seed: u64,
    /// Settings of the algorithm that produced the assignment.
    pub config: serde_json::Value,
    /// Wall-clock seconds, when recorded.
    pub runtime_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proven_optimal: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_states: Option<usize>,
}

impl Solution {
    pub fn from_json(s: &str) -> Result<Self> {
        let sol: Solution = serde_json::from_str(s)?;
        format::check_version(&sol.format_version)?;
        Ok(sol)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }
}

fn default_seeds() -> usize {
    30
}

fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Aarlm, Algorithm::Anneal, Algorithm::Random]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub format_version: String,
    #[serde(default)]
    pub name: String,
    pub base: ScenarioSpec,
    pub axis: Axis,
    pub points: Vec<usize>,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_seeds")]
    pub num_seeds: usize,
    #[serde(default)]
    pub algo_config: AlgoConfig,
    #[serde(default)]
    pub thresholds: TrendThresholds,
}

impl SweepConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: SweepConfig = serde_json::from_str(s)?;
        format::check_version(&cfg.format_version)?;
        cfg.base.validate()?;
        cfg.algo_config.validate()?;
        if cfg.num_seeds == 0 {
            return Err(crate::Error::InvalidConfig("num_seeds must be at least 1".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
