//! Variable-resolution quasi-static granular excavation simulator.
//!
//! The world is a height-field of soil voxels plus a face-connected voxel
//! rock and a fork bucket that interacts only with the rock. Resolution
//! (voxel edge length, mm) controls particle count and therefore per-step
//! cost; the physics itself is deterministic given (config, seed).

mod digest;
mod dr;
mod env;
mod error;
mod replay;
mod rock;
mod soil;
mod world;


pub use digest::Fnv64;
pub use dr::{sample_dr, DrParams, DrRanges};
pub use env::{EnvConfig, EpisodeDigest, ExcavationEnv};
pub use error::EnvError;
pub use replay::{record_episode, replay_episode, ReplayDivergence, ReplayFile};
pub use rock::{grow_rock, is_face_connected, RockState};
pub use soil::{settle_soil, SettleStats, SoilField};
pub use world::{
    generate_world, ground_height_mm, is_success, observe, step_env, Action, BucketState,
    Observation, Resolution, StepResult, WorldState, ACTION_PITCH_LIMIT_RAD, ACTION_XYZ_LIMIT_MM,
    HOLD_PITCH_MAX_RAD, HOLD_PITCH_MIN_RAD, PLATE_SIZE_MM,
};

pub type Result<T> = std::result::Result<T, EnvError>;

/// Splitmix-style seed derivation so every RNG stream is a pure function of
/// (run seed, stream labels).
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9e3779b97f4a7c15;
    for &p in parts {
        let mut z = h ^ p.wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        h = z ^ (z >> 31);
    }
    h
}
