//! Experiment configuration: mode selection, training parameters, budgets
//! and seeds, with a text-file schema and dotted-key overrides.

use env_core::Resolution;
use prpd_core::PrpdConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{HarnessError, Result};

/// Effectively-unbounded sample budget; capped so the value survives every
/// serialization format in use.
pub const SAMPLES_UNLIMITED: u64 = i64::MAX as u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentMode {
    /// Progressive resolution ladder with Q-estimated mixture rate.
    Prpd,
    /// Single-resolution PPO baseline.
    Fixed,
    /// One shared policy trained across all ladder resolutions at once.
    Mixed,
    /// Progressive ladder with a fixed mixture rate.
    ConstantAlpha,
}

impl std::fmt::Display for ExperimentMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ExperimentMode::Prpd => "prpd",
            ExperimentMode::Fixed => "fixed",
            ExperimentMode::Mixed => "mixed",
            ExperimentMode::ConstantAlpha => "constant-alpha",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub mode: ExperimentMode,
    /// Learning parameters shared by every mode; the schedule is ignored in
    /// fixed mode.
    pub prpd: PrpdConfig,
    /// Training resolution for fixed mode.
    pub fixed_delta_mm: f64,
    /// Mixture rate for constant-alpha mode.
    pub constant_alpha: f64,
    pub domain_randomization: bool,
    pub seeds: Vec<u64>,
    /// Per-episode step cap in every environment.
    pub episode_max_steps: u32,
    /// Resolution of the secondary evaluation stream.
    pub eval_delta_mm: f64,
    /// Episodes per success-rate evaluation.
    pub eval_episodes: u64,
    /// Secondary-stream evaluation period in iterations; 0 disables it.
    pub eval_interval: u32,
    pub max_iterations: u32,
    pub max_samples: u64,
    pub max_wall_clock_secs: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: ExperimentMode::Prpd,
            prpd: PrpdConfig::default(),
            fixed_delta_mm: 10.0,
            constant_alpha: 1.0,
            domain_randomization: true,
            seeds: vec![0],
            episode_max_steps: 64,
            eval_delta_mm: 10.0,
            eval_episodes: 20,
            eval_interval: 0,
            max_iterations: 200,
            max_samples: SAMPLES_UNLIMITED,
            max_wall_clock_secs: 1800.0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.prpd.validate()?;
        if self.seeds.is_empty() {
            return Err(HarnessError::Config("seeds must be non-empty".into()));
        }
        if self.max_iterations == 0 || self.max_samples == 0 {
            return Err(HarnessError::Config("budgets must be positive".into()));
        }
        if self.max_wall_clock_secs <= 0.0 {
            return Err(HarnessError::Config(
                "wall-clock budget must be positive".into(),
            ));
        }
        if self.episode_max_steps == 0 {
            return Err(HarnessError::Config(
                "episode_max_steps must be positive".into(),
            ));
        }
        if self.eval_episodes == 0 {
            return Err(HarnessError::Config("eval_episodes must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.constant_alpha) {
            return Err(HarnessError::Config(format!(
                "constant_alpha {} must lie in [0, 1]",
                self.constant_alpha
            )));
        }
        Resolution::new(self.eval_delta_mm)?;
        match self.mode {
            ExperimentMode::Fixed => {
                Resolution::new(self.fixed_delta_mm)?;
            }
            _ => {
                for rung in self.prpd.schedule.ladder() {
                    Resolution::new(rung)?;
                }
            }
        }
        Ok(())
    }

    /// Learning parameters as actually used by the run loop: constant-alpha
    /// mode pins the mixture rate.
    pub fn effective_prpd(&self) -> PrpdConfig {
        let mut cfg = self.prpd.clone();
        if self.mode == ExperimentMode::ConstantAlpha {
            cfg.alpha_override = Some(self.constant_alpha);
        }
        cfg
    }

    /// Stable content hash over every semantic field (hex, 16 chars).
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| HarnessError::Serde(e.to_string()))
    }

    /// Applies one `dotted.key=value` override. The key must address an
    /// existing field of the fully materialized configuration.
    pub fn apply_override(&mut self, key: &str, raw_value: &str) -> Result<()> {
        let mut root = toml::Value::try_from(&*self).map_err(|e| HarnessError::Serde(e.to_string()))?;
        let parts: Vec<&str> = key.split('.').collect();
        let unknown = || HarnessError::Config(format!("unknown configuration key: {key}"));
        let (last, init) = parts.split_last().expect("split always yields one part");
        let mut node = &mut root;
        for part in init {
            node = node
                .as_table_mut()
                .and_then(|t| t.get_mut(*part))
                .ok_or_else(unknown)?;
        }
        let entry = node
            .as_table_mut()
            .and_then(|t| t.get_mut(*last))
            .ok_or_else(unknown)?;
        *entry = parse_override_value(raw_value);
        let updated: ExperimentConfig = root
            .try_into()
            .map_err(|e| HarnessError::Config(format!("override {key}={raw_value}: {e}")))?;
        *self = updated;
        Ok(())
    }
}

/// Interprets an override literal with standard typing rules, falling back
/// to a bare string.
fn parse_override_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    if let Ok(table) = wrapped.parse::<toml::Table>() {
        if let Some(v) = table.get("v") {
            return v.clone();
        }
    }
    toml::Value::String(raw.to_string())
}
