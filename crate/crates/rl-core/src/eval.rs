//! Deterministic-policy evaluation: success rate over n fresh episodes.

use crate::envs::Environment;
use crate::nets::{normalize_obs, ActorCritic};
use crate::{Result, RlError};

/// Runs `episodes` episodes using the policy mean action (no exploration
/// noise) and returns the success fraction. Consumes no learner RNG.
pub fn evaluate_policy<E: Environment>(
    nets: &ActorCritic,
    mut make_env: impl FnMut(u64) -> E,
    episodes: u64,
    max_steps: u32,
) -> Result<f64> {
    if episodes == 0 {
        return Err(RlError::Config("evaluation needs at least 1 episode".into()));
    }
    let mut successes = 0u64;
    for ep in 0..episodes {
        let mut env = make_env(ep);
        let mut raw_obs = env.reset()?;
        for _ in 0..max_steps {
            let action = nets.mean_action(&normalize_obs(&raw_obs));
            let t = env.step(&action)?;
            if t.done {
                if t.success {
                    successes += 1;
                }
                break;
            }
            raw_obs = t.observation;
        }
    }
    Ok(successes as f64 / episodes as f64)
}
