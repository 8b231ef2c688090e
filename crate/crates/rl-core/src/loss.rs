//! Clipped-surrogate PPO loss, built on the tape so one backward pass
//! yields all policy and value gradients.

use tensor_core::{gaussian_log_prob_var, MlpVars, Tape, Var, LN_2PI, LOG_STD_MAX, LOG_STD_MIN};

use crate::buffer::RolloutBuffer;
use crate::nets::{ActorCritic, ACTION_DIM, OBS_DIM};
use crate::Result;

/// One minibatch, flattened row-major.
#[derive(Debug, Clone)]
pub struct Minibatch {
    pub obs: Vec<f64>,
    pub actions: Vec<f64>,
    pub old_log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    pub rows: usize,
}

impl Minibatch {
    pub fn gather(buffer: &RolloutBuffer, indices: &[usize]) -> Self {
        let rows = indices.len();
        let mut mb = Minibatch {
            obs: Vec::with_capacity(rows * OBS_DIM),
            actions: Vec::with_capacity(rows * ACTION_DIM),
            old_log_probs: Vec::with_capacity(rows),
            advantages: Vec::with_capacity(rows),
            returns: Vec::with_capacity(rows),
            rows,
        };
        for &i in indices {
            mb.obs.extend_from_slice(&buffer.obs[i]);
            mb.actions.extend_from_slice(&buffer.actions[i]);
            mb.old_log_probs.push(buffer.log_probs[i]);
            mb.advantages.push(buffer.advantages[i]);
            mb.returns.push(buffer.returns[i]);
        }
        mb
    }
}

/// Handles into the recorded graph plus scalar component values, so the
/// caller can run backward and read gradients out.
pub struct PpoLossGraph {
    pub loss: Var,
    pub policy_vars: MlpVars,
    pub log_std_var: Var,
    pub value_vars: MlpVars,
    /// Per-row log-densities under the current head (forward values).
    pub log_probs: Vec<f64>,
    pub surrogate: f64,
    pub value_loss: f64,
    pub entropy: f64,
}

/// Builds `-E[min(ρA, clip(ρ, 1−ε, 1+ε)A)] + c1·E[(V−R̂)²] − c2·H` on the
/// tape. Minimizing it maximizes the clipped surrogate and entropy while
/// minimizing value error.
pub fn ppo_loss(
    tape: &mut Tape,
    nets: &ActorCritic,
    mb: &Minibatch,
    clip_epsilon: f64,
    value_coef: f64,
    entropy_coef: f64,
) -> Result<PpoLossGraph> {
    let m = mb.rows;
    let obs = tape.leaf(m, OBS_DIM, mb.obs.clone());
    let policy_vars = nets.policy.push_vars(tape);
    let mean = nets.policy.forward(tape, &policy_vars, obs)?;
    let log_std_var = tape.leaf(1, ACTION_DIM, nets.log_std.values.clone());
    let actions = tape.leaf(m, ACTION_DIM, mb.actions.clone());
    let log_probs = gaussian_log_prob_var(tape, mean, log_std_var, actions)?;
    let log_probs_vals = tape.value(log_probs).to_vec();

    let old = tape.leaf(m, 1, mb.old_log_probs.clone());
    let diff = tape.sub(log_probs, old)?;
    let ratio = tape.exp(diff);
    let adv = tape.leaf(m, 1, mb.advantages.clone());
    let unclipped = tape.mul(ratio, adv)?;
    let clipped_ratio = tape.clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
    let clipped = tape.mul(clipped_ratio, adv)?;
    let surrogate_rows = tape.min(unclipped, clipped)?;
    let surrogate = tape.mean(surrogate_rows);
    let policy_loss = tape.neg(surrogate);

    let value_vars = nets.value.push_vars(tape);
    let v = nets.value.forward(tape, &value_vars, obs)?;
    let returns = tape.leaf(m, 1, mb.returns.clone());
    let resid = tape.sub(v, returns)?;
    let sq = tape.square(resid);
    let value_loss = tape.mean(sq);

    // State-independent head: entropy depends on log_std only.
    let ls = tape.clamp(log_std_var, LOG_STD_MIN, LOG_STD_MAX);
    let ls_sum = tape.sum(ls);
    let entropy = tape.add_scalar(ls_sum, ACTION_DIM as f64 * 0.5 * (LN_2PI + 1.0));

    let weighted_v = tape.scale(value_loss, value_coef);
    let weighted_ent = tape.scale(entropy, -entropy_coef);
    let partial = tape.add(policy_loss, weighted_v)?;
    let loss = tape.add(partial, weighted_ent)?;

    Ok(PpoLossGraph {
        loss,
        policy_vars,
        log_std_var,
        value_vars,
        log_probs: log_probs_vals,
        surrogate: tape.scalar_value(surrogate),
        value_loss: tape.scalar_value(value_loss),
        entropy: tape.scalar_value(entropy),
    })
}
