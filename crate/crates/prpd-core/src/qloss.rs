//! Temporal-difference loss for the auxiliary Q network.

use rand_chacha::ChaCha8Rng;
use rl_core::{standard_normal, RolloutBuffer, ACTION_DIM, OBS_DIM};
use tensor_core::{Mlp, MlpVars, Tape, Tensor, Var, LOG_STD_MAX, LOG_STD_MIN};

use crate::Result;

/// Transition slice for Q learning, flattened row-major.
#[derive(Debug, Clone)]
pub struct QBatch {
    pub obs: Vec<f64>,
    pub actions: Vec<f64>,
    pub rewards: Vec<f64>,
    pub next_obs: Vec<f64>,
    pub dones: Vec<bool>,
    pub truncateds: Vec<bool>,
    pub rows: usize,
}

impl QBatch {
    pub fn gather(buffer: &RolloutBuffer, indices: &[usize]) -> Self {
        let rows = indices.len();
        let mut b = QBatch {
            obs: Vec::with_capacity(rows * OBS_DIM),
            actions: Vec::with_capacity(rows * ACTION_DIM),
            rewards: Vec::with_capacity(rows),
            next_obs: Vec::with_capacity(rows * OBS_DIM),
            dones: Vec::with_capacity(rows),
            truncateds: Vec::with_capacity(rows),
            rows,
        };
        for &i in indices {
            b.obs.extend_from_slice(&buffer.obs[i]);
            b.actions.extend_from_slice(&buffer.actions[i]);
            b.rewards.push(buffer.rewards[i]);
            b.next_obs.extend_from_slice(&buffer.next_obs[i]);
            b.dones.push(buffer.dones[i]);
            b.truncateds.push(buffer.truncateds[i]);
        }
        b
    }
}

pub struct QLossGraph {
    pub loss: Var,
    pub q_vars: MlpVars,
    pub value: f64,
}

/// Builds `E[(Q(s,a) - (r + gamma * E_{a'~pi} Q(s',a')))^2]` on the tape.
///
/// The bootstrap is a constant: it is computed graph-free with `samples`
/// fresh policy draws per next state, so no gradient flows through the
/// target or the policy from this loss. True terminals (done and not
/// truncated) use the bare reward as target.
pub fn q_td_loss(
    tape: &mut Tape,
    q_net: &Mlp,
    policy: &Mlp,
    log_std: &Tensor,
    batch: &QBatch,
    gamma: f64,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<QLossGraph> {
    let n = batch.rows;
    let next_means = policy.infer_batch(&batch.next_obs, n);
    let std: Vec<f64> = log_std
        .values
        .iter()
        .map(|&l| l.clamp(LOG_STD_MIN, LOG_STD_MAX).exp())
        .collect();

    // Sampled next-state inputs are gathered into one batched Q pass; the
    // per-row sample order and averaging order match the per-call form.
    let mut boot_rows = Vec::new();
    let mut boot_in = Vec::new();
    for i in 0..n {
        if !(batch.dones[i] && !batch.truncateds[i]) && gamma != 0.0 && samples > 0 {
            boot_rows.push(i);
            for _ in 0..samples {
                boot_in.extend_from_slice(&batch.next_obs[i * OBS_DIM..(i + 1) * OBS_DIM]);
                for d in 0..ACTION_DIM {
                    boot_in.push(next_means[i * ACTION_DIM + d] + std[d] * standard_normal(rng));
                }
            }
        }
    }
    let boot_q = q_net.infer_batch(&boot_in, boot_rows.len() * samples);
    let mut targets: Vec<f64> = batch.rewards.clone();
    for (bi, &i) in boot_rows.iter().enumerate() {
        let mut q_sum = 0.0;
        for s in 0..samples {
            q_sum += boot_q[bi * samples + s];
        }
        targets[i] += gamma * (q_sum / samples as f64);
    }

    let mut q_input = Vec::with_capacity(n * (OBS_DIM + ACTION_DIM));
    for i in 0..n {
        q_input.extend_from_slice(&batch.obs[i * OBS_DIM..(i + 1) * OBS_DIM]);
        q_input.extend_from_slice(&batch.actions[i * ACTION_DIM..(i + 1) * ACTION_DIM]);
    }
    let x = tape.leaf(n, OBS_DIM + ACTION_DIM, q_input);
    let q_vars = q_net.push_vars(tape);
    let q = q_net.forward(tape, &q_vars, x)?;
    let y = tape.leaf(n, 1, targets);
    let resid = tape.sub(q, y)?;
    let sq = tape.square(resid);
    let loss = tape.mean(sq);
    Ok(QLossGraph {
        loss,
        q_vars,
        value: tape.scalar_value(loss),
    })
}
