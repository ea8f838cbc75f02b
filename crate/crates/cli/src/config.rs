//! Experiment configuration shared by all subcommands.
//!
//! Configs are JSON. Defaults applied on load: convolution step 1e-3 and
//! half-width 4 sigmas, hybrid switch index 15, recomputation period 1 and
//! advance-notice threshold 30 for the dynamic simulator. The `TW_SEED`
//! environment variable overrides the config seed (for CI sweeps).

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tw_core::arrival::ArrivalEngine;
use tw_core::dists::TravelTimeDist;
use tw_core::penalty::Penalty;

pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_HALF_WIDTH_SIGMAS: f64 = 4.0;
pub const DEFAULT_SWITCH_INDEX: usize = 15;
pub const DEFAULT_RECOMPUTE_PERIOD: f64 = 1.0;
pub const DEFAULT_NOTICE_THRESHOLD: f64 = 30.0;

#[derive(Debug)]
pub enum ConfigError {
    Io(std::io::Error),
    Parse(serde_json::Error),
    Validation(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(e) => write!(f, "cannot read config: {e}"),
            ConfigError::Parse(e) => write!(f, "cannot parse config: {e}"),
            ConfigError::Validation(msg) => write!(f, "invalid config: {msg}"),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LegSpec {
    pub family: String,
    pub mean: f64,
    pub sd: f64,
}

impl LegSpec {
    pub fn build(&self) -> Result<TravelTimeDist, ConfigError> {
        let res = match self.family.as_str() {
            "normal" => TravelTimeDist::normal(self.mean, self.sd),
            "lognormal" => TravelTimeDist::lognormal(self.mean, self.sd),
            "weibull" => TravelTimeDist::weibull(self.mean, self.sd),
            other => {
                return Err(ConfigError::Validation(format!(
                    "unknown leg family {other:?} (expected normal, lognormal, or weibull)"
                )))
            }
        };
        res.map_err(|e| ConfigError::Validation(format!("leg ({}): {e}", self.family)))
    }
}

/// Route definition: either an explicit leg list or a homogeneous block.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RouteSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub legs: Vec<LegSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub homogeneous: Option<HomogeneousSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct HomogeneousSpec {
    pub family: String,
    pub mean: f64,
    pub sd: f64,
    pub count: usize,
}

impl RouteSpec {
    pub fn build(&self) -> Result<Vec<TravelTimeDist>, ConfigError> {
        let mut legs = Vec::new();
        for spec in &self.legs {
            legs.push(spec.build()?);
        }
        if let Some(h) = &self.homogeneous {
            let spec = LegSpec { family: h.family.clone(), mean: h.mean, sd: h.sd };
            for _ in 0..h.count {
                legs.push(spec.build()?);
            }
        }
        if legs.is_empty() {
            return Err(ConfigError::Validation("route has no legs".into()));
        }
        Ok(legs)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum PenaltySpec {
    Linear { alpha: f64 },
    Power { alpha: f64, beta: f64 },
}

impl PenaltySpec {
    pub fn build(&self, omega: f64) -> Result<Penalty, ConfigError> {
        match *self {
            PenaltySpec::Linear { alpha } => {
                if alpha > omega.min(1.0 - omega) {
                    return Err(ConfigError::Validation(format!(
                        "linear penalty requires alpha <= min(omega, 1-omega); \
                         got alpha={alpha}, omega={omega}"
                    )));
                }
                Penalty::linear(alpha)
            }
            PenaltySpec::Power { alpha, beta } => Penalty::power(alpha, beta),
        }
        .map_err(|e| ConfigError::Validation(e.to_string()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, tag = "mode", rename_all = "snake_case")]
pub enum EngineSpec {
    ExactNormal,
    Convolution {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        step: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        half_width_sigmas: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_bins: Option<usize>,
    },
    Hybrid {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        switch_index: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        step: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        half_width_sigmas: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_bins: Option<usize>,
    },
}

impl Default for EngineSpec {
    fn default() -> Self {
        EngineSpec::Hybrid {
            switch_index: None,
            step: None,
            half_width_sigmas: None,
            max_bins: None,
        }
    }
}

impl EngineSpec {
    pub fn build(&self) -> ArrivalEngine {
        match *self {
            EngineSpec::ExactNormal => ArrivalEngine::ExactNormal,
            EngineSpec::Convolution { step, half_width_sigmas, max_bins } => {
                ArrivalEngine::Convolution {
                    step: step.unwrap_or(DEFAULT_STEP),
                    half_width_sigmas: half_width_sigmas.unwrap_or(DEFAULT_HALF_WIDTH_SIGMAS),
                    max_bins,
                }
            }
            EngineSpec::Hybrid { switch_index, step, half_width_sigmas, max_bins } => {
                ArrivalEngine::Hybrid {
                    switch_index: switch_index.unwrap_or(DEFAULT_SWITCH_INDEX),
                    step: step.unwrap_or(DEFAULT_STEP),
                    half_width_sigmas: half_width_sigmas.unwrap_or(DEFAULT_HALF_WIDTH_SIGMAS),
                    max_bins,
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DwosSpec {
    /// τ: recompute the schedule every this many time units.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recompute_period: Option<f64>,
    /// T values to sweep; a single default T = 30 when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notice_thresholds: Option<Vec<f64>>,
    pub runs: u64,
    /// 0-based client indices for the advance-notice table.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notice_clients: Vec<usize>,
    /// Notice bands (minutes) for the advance-notice table.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notice_bands: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EvaluateSpec {
    pub runs: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub route: RouteSpec,
    pub omega: f64,
    pub penalty: PenaltySpec,
    #[serde(default)]
    pub engine: EngineSpec,
    /// Solve one shared width across clients.
    #[serde(default)]
    pub uniform: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluate: Option<EvaluateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dwos: Option<DwosSpec>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.omega > 0.0 && self.omega < 1.0) {
            return Err(ConfigError::Validation(format!(
                "omega must be in (0,1), got {}",
                self.omega
            )));
        }
        self.penalty.build(self.omega)?;
        self.route.build()?;
        if let Some(d) = &self.dwos {
            if let Some(tau) = d.recompute_period {
                if !(tau > 0.0) {
                    return Err(ConfigError::Validation("recompute_period must be > 0".into()));
                }
            }
            if d.runs == 0 {
                return Err(ConfigError::Validation("dwos runs must be >= 1".into()));
            }
        }
        if let Some(e) = &self.evaluate {
            if e.runs == 0 {
                return Err(ConfigError::Validation("evaluate runs must be >= 1".into()));
            }
        }
        Ok(())
    }

    /// Seed after the `TW_SEED` environment override.
    pub fn effective_seed(&self) -> u64 {
        match std::env::var("TW_SEED") {
            Ok(v) => v.parse().unwrap_or(self.seed),
            Err(_) => self.seed,
        }
    }

    /// Canonical serialized form used for the output-file config hash.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(ConfigError::Io)?;
    let cfg: ExperimentConfig = serde_json::from_str(&text).map_err(ConfigError::Parse)?;
    cfg.validate()?;
    Ok(cfg)
}
