//! Actor-critic parameter bundle: Gaussian policy, state value V and the
//! auxiliary action value Q.

use env_core::Fnv64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tensor_core::{Mlp, Tensor, LOG_STD_MAX, LOG_STD_MIN};

use crate::Result;

pub const OBS_DIM: usize = 8;
pub const ACTION_DIM: usize = 4;
pub const HIDDEN: usize = 64;

/// Fixed observation scaling: millimeter channels divided by 100 so all
/// network inputs sit near unit scale; pitch (rad) and the binary flag
/// pass through.
pub fn normalize_obs(raw: &[f64; OBS_DIM]) -> [f64; OBS_DIM] {
    [
        raw[0] / 100.0,
        raw[1] / 100.0,
        raw[2],
        raw[3],
        raw[4] / 100.0,
        raw[5] / 100.0,
        raw[6] / 100.0,
        raw[7],
    ]
}

#[derive(Debug, Clone)]
pub struct ActorCritic {
    /// Policy mean network, 8 -> 64 -> 64 -> 4.
    pub policy: Mlp,
    /// State-independent `[1, 4]` log standard deviation.
    pub log_std: Tensor,
    /// State value network, 8 -> 64 -> 64 -> 1.
    pub value: Mlp,
    /// Action value network over obs||action, 12 -> 64 -> 64 -> 1.
    pub q: Mlp,
}

impl ActorCritic {
    pub fn new(rng: &mut ChaCha8Rng) -> Result<Self> {
        Ok(ActorCritic {
            policy: Mlp::new(&[OBS_DIM, HIDDEN, HIDDEN, ACTION_DIM], rng)?,
            log_std: Tensor::new(vec![1, ACTION_DIM], vec![-0.5; ACTION_DIM]),
            value: Mlp::new(&[OBS_DIM, HIDDEN, HIDDEN, 1], rng)?,
            q: Mlp::new(&[OBS_DIM + ACTION_DIM, HIDDEN, HIDDEN, 1], rng)?,
        })
    }

    pub fn std(&self) -> [f64; ACTION_DIM] {
        let mut out = [0.0; ACTION_DIM];
        for (o, &l) in out.iter_mut().zip(&self.log_std.values) {
            *o = l.clamp(LOG_STD_MIN, LOG_STD_MAX).exp();
        }
        out
    }

    /// Policy mean for one normalized observation.
    pub fn mean_action(&self, obs: &[f64; OBS_DIM]) -> [f64; ACTION_DIM] {
        let out = self.policy.infer(obs);
        [out[0], out[1], out[2], out[3]]
    }

    /// Draws an action from the Gaussian head and returns it with its
    /// summed log-density. Uses Box-Muller so only `rng.gen` is consumed.
    pub fn sample_action(
        &self,
        obs: &[f64; OBS_DIM],
        rng: &mut ChaCha8Rng,
    ) -> ([f64; ACTION_DIM], f64) {
        let mean = self.mean_action(obs);
        let std = self.std();
        let mut action = [0.0; ACTION_DIM];
        let mut log_prob = 0.0;
        for d in 0..ACTION_DIM {
            let eps = standard_normal(rng);
            action[d] = mean[d] + std[d] * eps;
            log_prob += -0.5 * tensor_core::LN_2PI - std[d].ln() - 0.5 * eps * eps;
        }
        (action, log_prob)
    }

    /// Log-density of `action` under the current head at `obs`.
    pub fn log_prob(&self, obs: &[f64; OBS_DIM], action: &[f64; ACTION_DIM]) -> f64 {
        let mean = self.mean_action(obs);
        let std = self.std();
        let mut lp = 0.0;
        for d in 0..ACTION_DIM {
            let z = (action[d] - mean[d]) / std[d];
            lp += -0.5 * tensor_core::LN_2PI - std[d].ln() - 0.5 * z * z;
        }
        lp
    }

    /// Batched state values; `obs` is row-major `[rows, 8]`.
    pub fn values_batch(&self, obs: &[f64], rows: usize) -> Vec<f64> {
        self.value.infer_batch(obs, rows)
    }

    /// Batched Q values over concatenated obs||action rows.
    pub fn q_batch(&self, obs: &[f64], actions: &[f64], rows: usize) -> Vec<f64> {
        let mut input = Vec::with_capacity(rows * (OBS_DIM + ACTION_DIM));
        for i in 0..rows {
            input.extend_from_slice(&obs[i * OBS_DIM..(i + 1) * OBS_DIM]);
            input.extend_from_slice(&actions[i * ACTION_DIM..(i + 1) * ACTION_DIM]);
        }
        self.q.infer_batch(&input, rows)
    }

    fn digest_mlp(h: &mut Fnv64, net: &Mlp) {
        for t in net.params() {
            for &v in &t.values {
                h.write_f64(v);
            }
        }
    }

    /// Bit-exact digest of policy-side parameters (mean net + log_std).
    pub fn policy_digest(&self) -> u64 {
        let mut h = Fnv64::new();
        Self::digest_mlp(&mut h, &self.policy);
        for &v in &self.log_std.values {
            h.write_f64(v);
        }
        h.finish()
    }

    /// Bit-exact digest of every parameter in the bundle.
    pub fn params_digest(&self) -> u64 {
        let mut h = Fnv64::new();
        Self::digest_mlp(&mut h, &self.policy);
        for &v in &self.log_std.values {
            h.write_f64(v);
        }
        Self::digest_mlp(&mut h, &self.value);
        Self::digest_mlp(&mut h, &self.q);
        h.finish()
    }
}

/// Box-Muller standard normal draw.
pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u1: f64 = rng.gen_range(0.0..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        if u1 > 0.0 {
            return (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        }
    }
}
