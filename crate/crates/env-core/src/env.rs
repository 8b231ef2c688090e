//! Episode lifecycle wrapper: per-episode randomization draws, step
//! counting and deterministic trace digests.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::world::{generate_world, observe, step_env, Action, Observation, Resolution, StepResult, WorldState};
use crate::{derive_seed, sample_dr, DrRanges, EnvError, Fnv64, Result};

/// Static environment configuration shared by every episode of a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvConfig {
    pub resolution: Resolution,
    pub max_steps: u32,
    pub randomize: bool,
    pub ranges: DrRanges,
    /// Run-level seed; episode streams are derived from it together with
    /// `env_index` and the episode counter.
    pub seed: u64,
    pub env_index: u64,
}

impl EnvConfig {
    pub fn new(resolution: Resolution, max_steps: u32, randomize: bool, seed: u64) -> Result<Self> {
        if max_steps == 0 {
            return Err(EnvError::Config("max_steps must be positive".into()));
        }
        Ok(EnvConfig {
            resolution,
            max_steps,
            randomize,
            ranges: DrRanges::default(),
            seed,
            env_index: 0,
        })
    }

    pub fn with_env_index(mut self, env_index: u64) -> Self {
        self.env_index = env_index;
        self
    }
}

/// Summary of a finished episode, written one JSON object per line.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EpisodeDigest {
    pub episode: u64,
    pub steps: u32,
    pub success: bool,
    pub total_reward: f64,
    pub voxel_ops: u64,
    /// FNV-1a over the bit-exact step trace.
    pub trace_digest: u64,
}

/// One simulated excavation environment.
pub struct ExcavationEnv {
    pub config: EnvConfig,
    state: Option<WorldState>,
    episode: u64,
    steps: u32,
    total_reward: f64,
    voxel_ops: u64,
    hasher: Fnv64,
}

impl ExcavationEnv {
    pub fn new(config: EnvConfig) -> Self {
        ExcavationEnv {
            config,
            state: None,
            episode: 0,
            steps: 0,
            total_reward: 0.0,
            voxel_ops: 0,
            hasher: Fnv64::new(),
        }
    }

    /// Starts episode `n` (0-based, incremented on every reset) and returns
    /// its first observation.
    pub fn reset(&mut self) -> Result<Observation> {
        let episode = self.episode;
        self.episode += 1;
        let dr_seed = derive_seed(&[self.config.seed, self.config.env_index, episode, 0]);
        let world_seed = derive_seed(&[self.config.seed, self.config.env_index, episode, 1]);
        let mut dr_rng = ChaCha8Rng::seed_from_u64(dr_seed);
        let dr = sample_dr(&self.config.ranges, self.config.randomize, &mut dr_rng)?;
        let mut state = generate_world(self.config.resolution, &dr, self.config.max_steps, world_seed)?;
        let obs = observe(&mut state);
        self.state = Some(state);
        self.steps = 0;
        self.total_reward = 0.0;
        self.voxel_ops = 0;
        self.hasher = Fnv64::new();
        for v in obs.to_array() {
            self.hasher.write_f64(v);
        }
        Ok(obs)
    }

    pub fn step(&mut self, action: &Action) -> Result<StepResult> {
        let state = self
            .state
            .as_mut()
            .ok_or_else(|| EnvError::SimulationFault("step before reset".into()))?;
        let result = step_env(state, action)?;
        self.steps += 1;
        self.total_reward += result.reward;
        self.voxel_ops += result.voxel_ops;
        result.hash_into(&mut self.hasher);
        Ok(result)
    }

    /// Episode index of the episode currently in progress (after reset).
    pub fn current_episode(&self) -> u64 {
        self.episode.saturating_sub(1)
    }

    pub fn state(&self) -> Option<&WorldState> {
        self.state.as_ref()
    }

    /// Digest of the episode in progress; call after the final step.
    pub fn episode_digest(&self, success: bool) -> EpisodeDigest {
        EpisodeDigest {
            episode: self.current_episode(),
            steps: self.steps,
            success,
            total_reward: self.total_reward,
            voxel_ops: self.voxel_ops,
            trace_digest: self.hasher.finish(),
        }
    }
}
