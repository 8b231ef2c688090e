//! On-policy rollout storage, laid out as E contiguous trajectories of T
//! transitions each.

use crate::nets::{ACTION_DIM, OBS_DIM};

#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer {
    /// Normalized observations.
    pub obs: Vec<[f64; OBS_DIM]>,
    /// Raw policy-head samples (pre-scaling, pre-clamp).
    pub actions: Vec<[f64; ACTION_DIM]>,
    pub rewards: Vec<f64>,
    pub next_obs: Vec<[f64; OBS_DIM]>,
    pub log_probs: Vec<f64>,
    pub dones: Vec<bool>,
    /// True where an episode ended without reaching an absorbing failure
    /// state; the value bootstrap stays on at those rows.
    pub truncateds: Vec<bool>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    pub env_count: usize,
    pub horizon: usize,
    /// Simulation faults absorbed during collection.
    pub fault_count: u64,
    /// Episodes finished during collection and how many succeeded.
    pub episodes_finished: u64,
    pub episodes_succeeded: u64,
    pub voxel_ops: u64,
}

impl RolloutBuffer {
    pub fn with_layout(env_count: usize, horizon: usize) -> Self {
        let n = env_count * horizon;
        RolloutBuffer {
            obs: Vec::with_capacity(n),
            actions: Vec::with_capacity(n),
            rewards: Vec::with_capacity(n),
            next_obs: Vec::with_capacity(n),
            log_probs: Vec::with_capacity(n),
            dones: Vec::with_capacity(n),
            truncateds: Vec::with_capacity(n),
            advantages: Vec::new(),
            returns: Vec::new(),
            env_count,
            horizon,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    /// Advantages and returns are in place and cover every transition.
    pub fn is_ready(&self) -> bool {
        self.advantages.len() == self.len() && self.returns.len() == self.len()
    }

    pub fn mean_reward(&self) -> f64 {
        if self.rewards.is_empty() {
            0.0
        } else {
            self.rewards.iter().sum::<f64>() / self.rewards.len() as f64
        }
    }

    /// Flattened row-major observation matrix.
    pub fn obs_flat(&self) -> Vec<f64> {
        self.obs.iter().flatten().copied().collect()
    }

    pub fn next_obs_flat(&self) -> Vec<f64> {
        self.next_obs.iter().flatten().copied().collect()
    }

    pub fn actions_flat(&self) -> Vec<f64> {
        self.actions.iter().flatten().copied().collect()
    }
}
