//! Run configuration.
//!
//! Files use flat dotted keys, one `key = value` per line:
//!
//! ```text
//! thresholds.abort = 0.30
//! thresholds.grace = 20
//! weights.acc_e = 0.25
//! bench.count_k2 = 300
//! ```
//!
//! Unknown keys are rejected. Omitted keys keep their defaults: the published
//! thresholds, and the calibrated meta-state weights.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::executive::Thresholds;
use crate::meta_state::StateWeights;
use crate::signal::SignalParams;
use crate::simworld::{MapParams, NavigatorParams, PerceptionParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

impl ConfigError {
    fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

/// Benchmark composition and scoring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchParams {
    pub count_k2: usize,
    pub count_k3: usize,
    pub budget_k2: u32,
    pub budget_k3: u32,
    pub master_seed: u64,
    /// Minimum pairwise goal separation, meters.
    pub min_separation: f64,
    /// Probability that a goal is infeasible.
    pub infeasible_fraction: f64,
    /// Share of infeasible goals that are absent rather than sealed.
    pub absent_share: f64,
    pub detectability: f64,
    /// A commit counts as a success within this distance of the goal, meters.
    pub success_radius: f64,
    pub reward: f64,
    pub lambda_cost: f64,
}

impl Default for BenchParams {
    fn default() -> Self {
        Self {
            count_k2: 300,
            count_k3: 200,
            budget_k2: 500,
            budget_k3: 650,
            master_seed: 2024,
            min_separation: 4.0,
            infeasible_fraction: 0.2,
            absent_share: 0.5,
            detectability: 0.9,
            success_radius: 3.0,
            reward: 1.0,
            lambda_cost: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub thresholds: Thresholds,
    pub weights: StateWeights,
    pub signal: SignalParams,
    pub perception: PerceptionParams,
    pub navigator: NavigatorParams,
    pub map: MapParams,
    pub bench: BenchParams,
}

impl RunConfig {
    pub fn from_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_str(&text)
    }

    /// Highest sufficiency an empty, noise-free evidence stream can reach
    /// at the goal: `w_e·b + w_stab·1 + w_prox·1`.
    pub fn absent_goal_sufficiency(&self) -> f64 {
        let w = &self.weights;
        w.acc_e * self.perception.base_noise_mean + w.acc_stab + w.acc_prox
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.thresholds
            .validate()
            .map_err(|e| ConfigError::invalid("thresholds", e.to_string()))?;
        self.weights
            .validate()
            .map_err(|e| ConfigError::invalid("weights", e.to_string()))?;
        self.signal
            .validate()
            .map_err(|e| ConfigError::invalid("signal", e.to_string()))?;
        self.perception
            .validate()
            .map_err(|e| ConfigError::invalid("perception", e.to_string()))?;

        let sigma = self.absent_goal_sufficiency();
        if sigma >= self.thresholds.commit {
            return Err(ConfigError::invalid(
                "weights.acc_*",
                format!(
                    "a goal-free evidence stream reaches sufficiency {sigma:.4} >= \
                     thresholds.commit {:.4}; absent goals could be committed",
                    self.thresholds.commit
                ),
            ));
        }

        let m = &self.map;
        if m.rooms_x == 0 || m.rooms_y == 0 || m.room_size < 4 {
            return Err(ConfigError::invalid("map", "need >= 1x1 rooms of size >= 4"));
        }
        if !(m.cell_size > 0.0 && m.cell_size.is_finite()) {
            return Err(ConfigError::invalid("map.cell_size", "must be > 0"));
        }
        if (m.cell_size - self.signal.step_length).abs() > 1e-12 {
            return Err(ConfigError::invalid(
                "signal.step_length",
                format!(
                    "must equal map.cell_size ({}) since the agent moves one cell per step",
                    m.cell_size
                ),
            ));
        }

        let b = &self.bench;
        for (key, v) in [
            ("bench.infeasible_fraction", b.infeasible_fraction),
            ("bench.absent_share", b.absent_share),
            ("bench.detectability", b.detectability),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ConfigError::invalid(key, format!("must lie in [0, 1], got {v}")));
            }
        }
        if b.budget_k2 == 0 || b.budget_k3 == 0 {
            return Err(ConfigError::invalid("bench.budget_k*", "budgets must be positive"));
        }
        if !(b.success_radius > 0.0) {
            return Err(ConfigError::invalid("bench.success_radius", "must be > 0"));
        }
        if !(b.min_separation >= 0.0) {
            return Err(ConfigError::invalid("bench.min_separation", "must be >= 0"));
        }
        Ok(())
    }

    /// Render as a flat dotted-key file that [`RunConfig::from_str`] reads back.
    pub fn to_flat_string(&self) -> String {
        let value = toml::Value::try_from(self).expect("config serializes");
        let mut out = String::new();
        if let toml::Value::Table(top) = value {
            for (section, inner) in top {
                if let toml::Value::Table(fields) = inner {
                    for (k, v) in fields {
                        out.push_str(&format!("{section}.{k} = {v}\n"));
                    }
                }
            }
        }
        out
    }
}
