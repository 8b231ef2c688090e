//! Parallel on-policy rollout collection against an immutable policy
//! snapshot.

use env_core::derive_seed;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::buffer::RolloutBuffer;
use crate::envs::Environment;
use crate::nets::{normalize_obs, ActorCritic, ACTION_DIM, OBS_DIM};
use crate::{Result, RlError};

const MAX_FAULT_RETRIES: u32 = 100;

struct EnvTrace {
    obs: Vec<[f64; OBS_DIM]>,
    actions: Vec<[f64; ACTION_DIM]>,
    rewards: Vec<f64>,
    next_obs: Vec<[f64; OBS_DIM]>,
    log_probs: Vec<f64>,
    dones: Vec<bool>,
    truncateds: Vec<bool>,
    faults: u64,
    finished: u64,
    succeeded: u64,
    voxel_ops: u64,
}

fn collect_one<E: Environment>(
    nets: &ActorCritic,
    env: &mut E,
    horizon: usize,
    seed: u64,
) -> Result<EnvTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = EnvTrace {
        obs: Vec::with_capacity(horizon),
        actions: Vec::with_capacity(horizon),
        rewards: Vec::with_capacity(horizon),
        next_obs: Vec::with_capacity(horizon),
        log_probs: Vec::with_capacity(horizon),
        dones: Vec::with_capacity(horizon),
        truncateds: Vec::with_capacity(horizon),
        faults: 0,
        finished: 0,
        succeeded: 0,
        voxel_ops: 0,
    };
    let mut raw_obs = env.reset()?;
    let mut retries = 0u32;
    while trace.obs.len() < horizon {
        let obs = normalize_obs(&raw_obs);
        let (action, log_prob) = nets.sample_action(&obs, &mut rng);
        match env.step(&action) {
            Ok(t) => {
                retries = 0;
                trace.obs.push(obs);
                trace.actions.push(action);
                trace.rewards.push(t.reward);
                trace.next_obs.push(normalize_obs(&t.observation));
                trace.log_probs.push(log_prob);
                trace.dones.push(t.done);
                trace.truncateds.push(t.truncated);
                trace.voxel_ops += t.voxel_ops;
                if t.done {
                    trace.finished += 1;
                    if t.success {
                        trace.succeeded += 1;
                    }
                    raw_obs = env.reset()?;
                } else {
                    raw_obs = t.observation;
                }
            }
            Err(RlError::Env(env_core::EnvError::SimulationFault(_))) => {
                // The faulted step contributes nothing; restart the episode
                // and keep filling the window.
                trace.faults += 1;
                retries += 1;
                if retries > MAX_FAULT_RETRIES {
                    return Err(RlError::Config(format!(
                        "environment faulted {MAX_FAULT_RETRIES} times in a row"
                    )));
                }
                raw_obs = env.reset()?;
            }
            Err(e) => return Err(e),
        }
    }
    // The window ends mid-episode for most trajectories; keep the value
    // bootstrap on for the final row unless it was a real terminal.
    if let Some(last) = trace.dones.last().copied() {
        if !last {
            *trace.dones.last_mut().unwrap() = true;
            *trace.truncateds.last_mut().unwrap() = true;
        }
    }
    Ok(trace)
}

/// Collects exactly `envs.len() * horizon` transitions. Episodes ending
/// early are reset in place and keep contributing; simulation faults reset
/// the offending environment and are counted, not fatal.
pub fn collect_rollout<E: Environment>(
    nets: &ActorCritic,
    envs: &mut [E],
    horizon: usize,
    seed: u64,
) -> Result<RolloutBuffer> {
    if envs.is_empty() || horizon == 0 {
        return Err(RlError::Config("need at least one env and step".into()));
    }
    let traces: Vec<Result<EnvTrace>> = envs
        .par_iter_mut()
        .enumerate()
        .map(|(i, env)| collect_one(nets, env, horizon, derive_seed(&[seed, i as u64, 3])))
        .collect();
    let mut buffer = RolloutBuffer::with_layout(envs.len(), horizon);
    for trace in traces {
        let t = trace?;
        buffer.obs.extend(t.obs);
        buffer.actions.extend(t.actions);
        buffer.rewards.extend(t.rewards);
        buffer.next_obs.extend(t.next_obs);
        buffer.log_probs.extend(t.log_probs);
        buffer.dones.extend(t.dones);
        buffer.truncateds.extend(t.truncateds);
        buffer.fault_count += t.faults;
        buffer.episodes_finished += t.finished;
        buffer.episodes_succeeded += t.succeeded;
        buffer.voxel_ops += t.voxel_ops;
    }
    debug_assert_eq!(buffer.len(), envs.len() * horizon);
    Ok(buffer)
}
