//! Generalized advantage estimation.

use crate::buffer::RolloutBuffer;
use crate::nets::ActorCritic;
use crate::{Result, RlError};

/// GAE(γ, λ) over one trajectory.
///
/// `delta_t = r_t + γ·V(s'_t)·bootstrap_t − V(s_t)` where `bootstrap_t` is
/// zero only at true terminals (`done && !truncated`); truncated endings
/// keep the bootstrap so reward accrued past the cut is not lost. The
/// recursive accumulation always stops at `done`. Returns are `A + V(s)`.
pub fn gae_1d(
    rewards: &[f64],
    values: &[f64],
    next_values: &[f64],
    dones: &[bool],
    truncateds: &[bool],
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert!(
        values.len() == n && next_values.len() == n && dones.len() == n && truncateds.len() == n
    );
    let mut advantages = vec![0.0; n];
    let mut returns = vec![0.0; n];
    let mut carry = 0.0;
    for t in (0..n).rev() {
        let bootstrap = if dones[t] && !truncateds[t] { 0.0 } else { 1.0 };
        let chain = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_values[t] * bootstrap - values[t];
        carry = delta + gamma * lambda * chain * carry;
        advantages[t] = carry;
        returns[t] = carry + values[t];
    }
    (advantages, returns)
}

/// Fills `buffer.advantages` and `buffer.returns` using the value net,
/// running the recursion independently per environment trajectory.
pub fn compute_gae(
    buffer: &mut RolloutBuffer,
    gamma: f64,
    lambda: f64,
    nets: &ActorCritic,
) -> Result<()> {
    let n = buffer.len();
    if n == 0 {
        return Err(RlError::Config("empty rollout buffer".into()));
    }
    let values = nets.values_batch(&buffer.obs_flat(), n);
    let next_values = nets.values_batch(&buffer.next_obs_flat(), n);
    buffer.advantages = vec![0.0; n];
    buffer.returns = vec![0.0; n];
    let t = buffer.horizon;
    for e in 0..buffer.env_count {
        let r = e * t..(e + 1) * t;
        let (adv, ret) = gae_1d(
            &buffer.rewards[r.clone()],
            &values[r.clone()],
            &next_values[r.clone()],
            &buffer.dones[r.clone()],
            &buffer.truncateds[r.clone()],
            gamma,
            lambda,
        );
        buffer.advantages[r.clone()].copy_from_slice(&adv);
        buffer.returns[r].copy_from_slice(&ret);
    }
    Ok(())
}

/// Normalizes advantages to mean 0, std 1 across the whole buffer.
pub fn normalize_advantages(buffer: &mut RolloutBuffer) {
    let n = buffer.advantages.len();
    if n == 0 {
        return;
    }
    let mean = buffer.advantages.iter().sum::<f64>() / n as f64;
    let var = buffer
        .advantages
        .iter()
        .map(|a| (a - mean).powi(2))
        .sum::<f64>()
        / n as f64;
    let std = var.sqrt().max(1e-8);
    for a in &mut buffer.advantages {
        *a = (*a - mean) / std;
    }
}
