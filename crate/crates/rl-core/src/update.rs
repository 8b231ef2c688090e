//! Minibatch PPO updates over a prepared rollout buffer.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use tensor_core::AdamState;

use crate::buffer::RolloutBuffer;
use crate::loss::{ppo_loss, Minibatch};
use crate::nets::ActorCritic;
use crate::{PpoConfig, Result, RlError};

/// Per-iteration loss statistics averaged over minibatch steps.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossStats {
    pub surrogate: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub total: f64,
    pub minibatch_steps: usize,
}

impl LossStats {
    fn accumulate(&mut self, surrogate: f64, value_loss: f64, entropy: f64, total: f64) {
        self.surrogate += surrogate;
        self.value_loss += value_loss;
        self.entropy += entropy;
        self.total += total;
        self.minibatch_steps += 1;
    }

    fn finalize(mut self) -> Self {
        if self.minibatch_steps > 0 {
            let k = self.minibatch_steps as f64;
            self.surrogate /= k;
            self.value_loss /= k;
            self.entropy /= k;
            self.total /= k;
        }
        self
    }
}

/// Runs `epochs` shuffled passes of minibatch gradient steps on the policy
/// and value networks. The Q network is untouched here; it has its own
/// objective. `epochs = 0` or a zero learning rate leaves parameters
/// bit-identical while still reporting losses.
pub fn update_iteration(
    nets: &mut ActorCritic,
    buffer: &RolloutBuffer,
    config: &PpoConfig,
    optimizer: &mut AdamState,
    rng: &mut ChaCha8Rng,
) -> Result<LossStats> {
    config.validate()?;
    if !buffer.is_ready() {
        return Err(RlError::Config(
            "advantages must be computed before updating".into(),
        ));
    }
    let mut stats = LossStats::default();
    let mut indices: Vec<usize> = (0..buffer.len()).collect();
    for _ in 0..config.epochs {
        indices.shuffle(rng);
        for chunk in indices.chunks(config.minibatch_size) {
            let mb = Minibatch::gather(buffer, chunk);
            let mut tape = tensor_core::Tape::new();
            let graph = ppo_loss(
                &mut tape,
                nets,
                &mb,
                config.clip_epsilon,
                config.value_coef,
                config.entropy_coef,
            )?;
            let total = tape.scalar_value(graph.loss);
            if !total.is_finite() {
                return Err(RlError::NonFiniteLoss(format!(
                    "surrogate={} value={} entropy={} rows={}",
                    graph.surrogate, graph.value_loss, graph.entropy, mb.rows
                )));
            }
            stats.accumulate(graph.surrogate, graph.value_loss, graph.entropy, total);
            tape.backward(graph.loss)?;
            nets.policy.zero_grads();
            nets.value.zero_grads();
            nets.log_std.zero_grad();
            nets.policy.read_grads(&tape, &graph.policy_vars);
            nets.value.read_grads(&tape, &graph.value_vars);
            nets.log_std.add_grad(tape.grad(graph.log_std_var));
            let mut params: Vec<&mut tensor_core::Tensor> = Vec::new();
            params.extend(nets.policy.params_mut());
            params.push(&mut nets.log_std);
            params.extend(nets.value.params_mut());
            optimizer.step(&mut params)?;
        }
    }
    Ok(stats.finalize())
}
