//! Frozen teacher snapshot and cross-rung policy transfer.

use env_core::Fnv64;
use rl_core::{ActorCritic, ACTION_DIM, OBS_DIM};
use tensor_core::{AdamState, Mlp, Tensor, LN_2PI, LOG_STD_MAX, LOG_STD_MIN};

use crate::{PrpdError, Result};

/// Immutable copy of a converged policy head. Holds only what the
/// distillation and mixture-rate machinery needs.
#[derive(Debug, Clone)]
pub struct TeacherSnapshot {
    policy: Mlp,
    log_std: Tensor,
}

impl TeacherSnapshot {
    pub fn policy(&self) -> &Mlp {
        &self.policy
    }

    pub fn log_std(&self) -> &Tensor {
        &self.log_std
    }

    pub fn std(&self) -> [f64; ACTION_DIM] {
        let mut out = [0.0; ACTION_DIM];
        for (o, &l) in out.iter_mut().zip(&self.log_std.values) {
            *o = l.clamp(LOG_STD_MIN, LOG_STD_MAX).exp();
        }
        out
    }

    pub fn mean_batch(&self, obs: &[f64], rows: usize) -> Vec<f64> {
        self.policy.infer_batch(obs, rows)
    }

    pub fn log_prob(&self, obs: &[f64; OBS_DIM], action: &[f64; ACTION_DIM]) -> f64 {
        let mean = self.policy.infer(obs);
        let std = self.std();
        let mut lp = 0.0;
        for d in 0..ACTION_DIM {
            let z = (action[d] - mean[d]) / std[d];
            lp += -0.5 * LN_2PI - std[d].ln() - 0.5 * z * z;
        }
        lp
    }

    pub fn digest(&self) -> u64 {
        let mut h = Fnv64::new();
        for t in self.policy.params() {
            for &v in &t.values {
                h.write_f64(v);
            }
        }
        for &v in &self.log_std.values {
            h.write_f64(v);
        }
        h.finish()
    }
}

/// Concludes a rung: freezes the current policy head as the teacher for
/// the next finer resolution and resets optimizer momentum, which is stale
/// across the resolution change. The student keeps the copied parameters
/// and continues training in place.
pub fn transfer_policy(
    nets: &ActorCritic,
    optimizers: &mut [&mut AdamState],
) -> Result<TeacherSnapshot> {
    if nets.policy.input_dim() != OBS_DIM || nets.policy.output_dim() != ACTION_DIM {
        return Err(PrpdError::Config(format!(
            "policy dims {}x{} do not match the observation/action interface",
            nets.policy.input_dim(),
            nets.policy.output_dim()
        )));
    }
    for opt in optimizers.iter_mut() {
        opt.reset();
    }
    Ok(TeacherSnapshot {
        policy: nets.policy.clone(),
        log_std: nets.log_std.clone(),
    })
}
