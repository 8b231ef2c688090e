//! PPO hyperparameters.

use serde::{Deserialize, Serialize};

use crate::{Result, RlError};

/// Learning parameters. Defaults are desk-scale (small E and T); the
/// full-scale values E=128, T=128 remain reachable through config.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct PpoConfig {
    pub gamma: f64,
    pub clip_epsilon: f64,
    /// Value-loss weight (c1).
    pub value_coef: f64,
    /// Entropy-bonus weight (c2).
    pub entropy_coef: f64,
    pub gae_lambda: f64,
    /// Rollout horizon T (steps per environment per iteration).
    pub horizon: usize,
    /// Parallel environment count E.
    pub num_envs: usize,
    /// Passes over the buffer per iteration.
    pub epochs: usize,
    pub minibatch_size: usize,
    pub learning_rate: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            gamma: 0.99,
            clip_epsilon: 0.2,
            value_coef: 0.5,
            entropy_coef: 0.01,
            gae_lambda: 0.95,
            horizon: 64,
            num_envs: 16,
            epochs: 8,
            minibatch_size: 256,
            learning_rate: 3e-4,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(RlError::Config(format!("gamma {} not in (0,1]", self.gamma)));
        }
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 1.0) {
            return Err(RlError::Config(format!(
                "clip_epsilon {} not in (0,1)",
                self.clip_epsilon
            )));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(RlError::Config(format!(
                "gae_lambda {} not in [0,1]",
                self.gae_lambda
            )));
        }
        if self.horizon == 0 || self.num_envs == 0 || self.minibatch_size == 0 {
            return Err(RlError::Config(
                "horizon, num_envs and minibatch_size must be positive".into(),
            ));
        }
        if self.value_coef < 0.0 || self.entropy_coef < 0.0 || self.learning_rate < 0.0 {
            return Err(RlError::Config(
                "loss weights and learning rate must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Minibatch gradient steps per iteration (epochs x minibatches).
    pub fn updates_per_iteration(&self) -> usize {
        let samples = self.num_envs * self.horizon;
        self.epochs * samples.div_ceil(self.minibatch_size)
    }
}
