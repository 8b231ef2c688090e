//! PPO actor-critic learner: rollout collection over parallel
//! environments, generalized advantage estimation, clipped-surrogate
//! updates and a deterministic evaluation protocol.

mod buffer;
mod config;
mod envs;
mod error;
mod eval;
mod gae;
mod loss;
mod nets;
mod rollout;
mod update;

pub use buffer::RolloutBuffer;
pub use config::PpoConfig;
pub use envs::{Environment, Transition};
pub use error::RlError;
pub use eval::evaluate_policy;
pub use gae::{compute_gae, gae_1d, normalize_advantages};
pub use loss::{ppo_loss, Minibatch, PpoLossGraph};
pub use nets::{normalize_obs, standard_normal, ActorCritic, ACTION_DIM, HIDDEN, OBS_DIM};
pub use rollout::collect_rollout;
pub use update::{update_iteration, LossStats};

pub type Result<T> = std::result::Result<T, RlError>;
