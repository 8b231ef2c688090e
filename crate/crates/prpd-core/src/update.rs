//! Combined objective and the per-iteration update loop.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tensor_core::{AdamState, Tape};

use rl_core::{ppo_loss, ActorCritic, Minibatch, PpoConfig, RolloutBuffer};

use crate::alpha::estimate_alpha;
use crate::distill::distill_loss;
use crate::qloss::{q_td_loss, QBatch};
use crate::schedule::ResolutionSchedule;
use crate::teacher::TeacherSnapshot;
use crate::{PrpdError, Result};

/// Weights of the distillation and Q terms in the combined objective.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct DistillWeights {
    pub c3: f64,
    pub c4: f64,
}

impl Default for DistillWeights {
    fn default() -> Self {
        DistillWeights { c3: 0.5, c4: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct PrpdConfig {
    pub ppo: PpoConfig,
    pub schedule: ResolutionSchedule,
    /// Scaling coefficient for the mixture-rate estimate.
    pub alpha0: f64,
    pub weights: DistillWeights,
    /// Monte-Carlo action draws per state in the alpha, distillation and
    /// Q-target estimators.
    pub action_samples: usize,
    /// Fixed mixture rate for constant-alpha baselines; `None` estimates it
    /// from the Q gap each iteration.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_override: Option<f64>,
}

impl Default for PrpdConfig {
    fn default() -> Self {
        PrpdConfig {
            ppo: PpoConfig::default(),
            schedule: ResolutionSchedule::default(),
            alpha0: 2.0,
            weights: DistillWeights::default(),
            action_samples: 4,
            alpha_override: None,
        }
    }
}

impl PrpdConfig {
    pub fn validate(&self) -> Result<()> {
        self.ppo.validate().map_err(PrpdError::Rl)?;
        self.schedule.validate()?;
        if self.alpha0 <= 0.0 {
            return Err(PrpdError::Config(format!("alpha0 {} must be positive", self.alpha0)));
        }
        if self.weights.c3 < 0.0 || self.weights.c4 < 0.0 {
            return Err(PrpdError::Config("c3 and c4 must be non-negative".into()));
        }
        if self.action_samples == 0 {
            return Err(PrpdError::Config("action_samples must be positive".into()));
        }
        if let Some(a) = self.alpha_override {
            if !(0.0..=1.0).contains(&a) {
                return Err(PrpdError::Config(format!(
                    "alpha_override {a} must lie in [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Scalar components of one combined-loss evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TotalLoss {
    pub surrogate: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub distill: f64,
    pub q: f64,
    /// `L_PPO + c3 * L_distill + c4 * L_Q`.
    pub total: f64,
}

/// Evaluates the combined loss on one minibatch and leaves its gradients
/// accumulated in the network `grad` buffers without applying an optimizer
/// step.
///
/// Gradient partition: the policy receives gradients from the surrogate,
/// entropy and (scaled) distillation terms; the value net only from the
/// value-error term; the Q net only from the (scaled) TD term.
#[allow(clippy::too_many_arguments)]
pub fn total_loss_grads(
    nets: &mut ActorCritic,
    teacher: Option<&TeacherSnapshot>,
    buffer: &RolloutBuffer,
    indices: &[usize],
    alpha: f64,
    config: &PrpdConfig,
    rng: &mut ChaCha8Rng,
) -> Result<TotalLoss> {
    let mb = Minibatch::gather(buffer, indices);
    nets.policy.zero_grads();
    nets.value.zero_grads();
    nets.q.zero_grads();
    nets.log_std.zero_grad();

    let mut out = TotalLoss::default();

    let mut tape = Tape::new();
    let ppo = ppo_loss(
        &mut tape,
        nets,
        &mb,
        config.ppo.clip_epsilon,
        config.ppo.value_coef,
        config.ppo.entropy_coef,
    )
    .map_err(PrpdError::Rl)?;
    let ppo_total = tape.scalar_value(ppo.loss);
    tape.backward(ppo.loss)?;
    nets.policy.read_grads(&tape, &ppo.policy_vars);
    nets.value.read_grads(&tape, &ppo.value_vars);
    nets.log_std.add_grad(tape.grad(ppo.log_std_var));
    out.surrogate = ppo.surrogate;
    out.value_loss = ppo.value_loss;
    out.entropy = ppo.entropy;

    if config.weights.c3 > 0.0 {
        let mut tape = Tape::new();
        if let Some(graph) = distill_loss(
            &mut tape,
            nets,
            teacher,
            alpha,
            &mb.obs,
            mb.rows,
            config.action_samples,
            rng,
        )? {
            let scaled = tape.scale(graph.loss, config.weights.c3);
            tape.backward(scaled)?;
            nets.policy.read_grads(&tape, &graph.policy_vars);
            nets.log_std.add_grad(tape.grad(graph.log_std_var));
            out.distill = graph.value;
        }
    }

    if config.weights.c4 > 0.0 {
        let qb = QBatch::gather(buffer, indices);
        let mut tape = Tape::new();
        let graph = q_td_loss(
            &mut tape,
            &nets.q,
            &nets.policy,
            &nets.log_std,
            &qb,
            config.ppo.gamma,
            config.action_samples,
            rng,
        )?;
        let scaled = tape.scale(graph.loss, config.weights.c4);
        tape.backward(scaled)?;
        nets.q.read_grads(&tape, &graph.q_vars);
        out.q = graph.value;
    }

    out.total = ppo_total + config.weights.c3 * out.distill + config.weights.c4 * out.q;
    Ok(out)
}

/// Per-iteration statistics, averaged over minibatch steps.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PrpdStats {
    pub alpha: f64,
    pub surrogate: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub distill: f64,
    pub q_loss: f64,
    pub total: f64,
    pub minibatch_steps: usize,
}

/// One full PRPD update iteration: estimates alpha once from the fresh
/// buffer, then runs shuffled minibatch steps of the combined objective.
/// The policy/value pair and the Q net have separate optimizers.
pub fn prpd_update_iteration(
    nets: &mut ActorCritic,
    teacher: Option<&TeacherSnapshot>,
    buffer: &RolloutBuffer,
    config: &PrpdConfig,
    actor_optimizer: &mut AdamState,
    q_optimizer: &mut AdamState,
    rng: &mut ChaCha8Rng,
) -> Result<PrpdStats> {
    config.validate()?;
    if !buffer.is_ready() {
        return Err(PrpdError::Config(
            "advantages must be computed before updating".into(),
        ));
    }
    let alpha = match config.alpha_override {
        Some(a) if teacher.is_some() => a,
        Some(_) => 0.0,
        None => estimate_alpha(buffer, nets, teacher, config.alpha0, config.action_samples, rng),
    };
    let mut stats = PrpdStats {
        alpha,
        ..PrpdStats::default()
    };
    let mut indices: Vec<usize> = (0..buffer.len()).collect();
    for _ in 0..config.ppo.epochs {
        indices.shuffle(rng);
        for chunk in indices.chunks(config.ppo.minibatch_size) {
            let loss = total_loss_grads(nets, teacher, buffer, chunk, alpha, config, rng)?;
            if !loss.total.is_finite() {
                return Err(PrpdError::Rl(rl_core::RlError::NonFiniteLoss(format!(
                    "{loss:?}"
                ))));
            }
            stats.surrogate += loss.surrogate;
            stats.value_loss += loss.value_loss;
            stats.entropy += loss.entropy;
            stats.distill += loss.distill;
            stats.q_loss += loss.q;
            stats.total += loss.total;
            stats.minibatch_steps += 1;

            let mut actor_params: Vec<&mut tensor_core::Tensor> = Vec::new();
            actor_params.extend(nets.policy.params_mut());
            actor_params.push(&mut nets.log_std);
            actor_params.extend(nets.value.params_mut());
            actor_optimizer.step(&mut actor_params)?;
            let mut q_params: Vec<&mut tensor_core::Tensor> = nets.q.params_mut().collect();
            q_optimizer.step(&mut q_params)?;
        }
    }
    if stats.minibatch_steps > 0 {
        let k = stats.minibatch_steps as f64;
        stats.surrogate /= k;
        stats.value_loss /= k;
        stats.entropy /= k;
        stats.distill /= k;
        stats.q_loss /= k;
        stats.total /= k;
    }
    Ok(stats)
}
