//! Recorded episodes and bit-exact replay verification.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::{EnvConfig, ExcavationEnv};
use crate::world::Action;
use crate::{EnvError, Fnv64, Result};

/// A recorded episode: the configuration that produced it, the episode
/// index within the environment's reset sequence, the action trace and a
/// per-step digest of the resulting step outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayFile {
    pub format_version: u32,
    pub config: EnvConfig,
    /// 0-based episode index; earlier episodes are fast-forwarded during
    /// replay so randomization streams line up.
    pub episode: u64,
    pub actions: Vec<Action>,
    /// Digest of each step's output, in order.
    pub step_digests: Vec<u64>,
    pub success: bool,
}

pub const REPLAY_FORMAT_VERSION: u32 = 1;

impl ReplayFile {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        let file: ReplayFile = serde_json::from_reader(std::io::BufReader::new(f))?;
        if file.format_version != REPLAY_FORMAT_VERSION {
            return Err(EnvError::Config(format!(
                "replay format version {} unsupported (expected {REPLAY_FORMAT_VERSION})",
                file.format_version
            )));
        }
        Ok(file)
    }

    /// Loads newline-delimited JSON digests (one per episode).
    pub fn load_jsonl(path: &Path) -> Result<Vec<ReplayFile>> {
        let f = std::fs::File::open(path)?;
        let mut out = Vec::new();
        for line in std::io::BufReader::new(f).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(serde_json::from_str(&line)?);
        }
        Ok(out)
    }
}

/// First point at which a replay stopped matching the recording.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayDivergence {
    pub step: usize,
    pub expected_digest: u64,
    pub actual_digest: u64,
}

/// Records an episode by running `actions` against a fresh environment
/// built from `config`, skipping `episode` earlier resets.
pub fn record_episode(config: &EnvConfig, episode: u64, actions: &[Action]) -> Result<ReplayFile> {
    let mut env = ExcavationEnv::new(config.clone());
    for _ in 0..=episode {
        env.reset()?;
    }
    let mut step_digests = Vec::with_capacity(actions.len());
    let mut success = false;
    for action in actions {
        let result = env.step(action)?;
        let mut h = Fnv64::new();
        result.hash_into(&mut h);
        step_digests.push(h.finish());
        success = result.success;
        if result.done {
            break;
        }
    }
    step_digests.truncate(step_digests.len());
    let used = step_digests.len();
    Ok(ReplayFile {
        format_version: REPLAY_FORMAT_VERSION,
        config: config.clone(),
        episode,
        actions: actions[..used].to_vec(),
        step_digests,
        success,
    })
}

/// Re-simulates a recording and verifies every step digest. Returns `Ok(None)`
/// on a bit-exact match and `Ok(Some(divergence))` at the first mismatch.
pub fn replay_episode(file: &ReplayFile) -> Result<Option<ReplayDivergence>> {
    let mut env = ExcavationEnv::new(file.config.clone());
    for _ in 0..=file.episode {
        env.reset()?;
    }
    for (i, action) in file.actions.iter().enumerate() {
        let result = env.step(action)?;
        let mut h = Fnv64::new();
        result.hash_into(&mut h);
        let actual = h.finish();
        let expected = file.step_digests[i];
        if actual != expected {
            return Ok(Some(ReplayDivergence {
                step: i,
                expected_digest: expected,
                actual_digest: actual,
            }));
        }
        if result.done && i + 1 < file.actions.len() {
            return Ok(Some(ReplayDivergence {
                step: i,
                expected_digest: expected,
                actual_digest: actual,
            }));
        }
    }
    Ok(None)
}
