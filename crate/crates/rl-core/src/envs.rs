//! Environment abstraction used by rollout collection and evaluation, so
//! learners can be exercised against stub dynamics in tests.

use env_core::{Action, ExcavationEnv};

use crate::nets::ACTION_DIM;
use crate::nets::OBS_DIM;
use crate::Result;

/// One step outcome in raw (un-normalized) observation units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub observation: [f64; OBS_DIM],
    pub reward: f64,
    pub done: bool,
    /// Episode ended by something other than a true absorbing failure;
    /// the value bootstrap stays on. Time limits and lift success both
    /// truncate: reward keeps accruing past them conceptually.
    pub truncated: bool,
    pub success: bool,
    pub voxel_ops: u64,
}

pub trait Environment: Send {
    fn reset(&mut self) -> Result<[f64; OBS_DIM]>;
    /// `action` is the policy's unitless output; implementations scale it.
    fn step(&mut self, action: &[f64; ACTION_DIM]) -> Result<Transition>;
}

impl Environment for ExcavationEnv {
    fn reset(&mut self) -> Result<[f64; OBS_DIM]> {
        Ok(ExcavationEnv::reset(self)?.to_array())
    }

    fn step(&mut self, action: &[f64; ACTION_DIM]) -> Result<Transition> {
        let r = ExcavationEnv::step(self, &Action::from_normalized(action))?;
        Ok(Transition {
            observation: r.observation.to_array(),
            reward: r.reward,
            done: r.done,
            truncated: r.done,
            success: r.success,
            voxel_ops: r.voxel_ops,
        })
    }
}
