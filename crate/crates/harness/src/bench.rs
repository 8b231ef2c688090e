//! Per-resolution stepping cost benchmark.

use std::time::Instant;

use env_core::{derive_seed, Action, EnvConfig, ExcavationEnv, Resolution};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{HarnessError, Result};

/// Minimum steps per resolution for a stable median.
pub const MIN_BENCH_STEPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub delta_mm: f64,
    pub median_step_secs: f64,
    pub mean_voxel_ops: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingTable {
    /// Rows in the given ladder order (coarse to fine).
    pub rows: Vec<TimingRow>,
}

impl TimingTable {
    /// True when per-step time does not increase with coarser resolution:
    /// walking the ladder coarse to fine, times never drop.
    pub fn time_monotone(&self) -> bool {
        self.rows.windows(2).all(|p| p[1].median_step_secs >= p[0].median_step_secs)
    }

    pub fn voxel_ops_monotone(&self) -> bool {
        self.rows.windows(2).all(|p| p[1].mean_voxel_ops >= p[0].mean_voxel_ops)
    }

    /// Ratio of the finest rung's median step time to the coarsest rung's.
    pub fn fine_to_coarse_time_ratio(&self) -> Option<f64> {
        let first = self.rows.first()?;
        let last = self.rows.last()?;
        Some(last.median_step_secs / first.median_step_secs)
    }

    pub fn csv_string(&self) -> String {
        let mut out = String::from("delta_mm,median_step_secs,mean_voxel_ops,steps\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.delta_mm, r.median_step_secs, r.mean_voxel_ops, r.steps
            ));
        }
        out
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite timings"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Measures median wall time and mean voxel work per environment step at
/// each resolution of the ladder. Stepping is strictly single-threaded so
/// parallel scheduling noise cannot skew the comparison.
pub fn bench_timing(
    ladder: &[f64],
    steps_per_delta: usize,
    repeats: usize,
    seed: u64,
) -> Result<TimingTable> {
    if ladder.is_empty() {
        return Err(HarnessError::Config("ladder must be non-empty".into()));
    }
    if steps_per_delta < MIN_BENCH_STEPS {
        return Err(HarnessError::Config(format!(
            "need at least {MIN_BENCH_STEPS} steps per resolution for a stable median, got {steps_per_delta}"
        )));
    }
    if repeats == 0 {
        return Err(HarnessError::Config("repeats must be positive".into()));
    }

    let mut rows = Vec::with_capacity(ladder.len());
    for (i, &delta) in ladder.iter().enumerate() {
        let resolution = Resolution::new(delta)?;
        let mut times = Vec::with_capacity(steps_per_delta * repeats);
        let mut voxel_ops = 0u64;
        let mut total_steps = 0usize;
        for rep in 0..repeats {
            let config = EnvConfig::new(
                resolution,
                u32::MAX,
                true,
                derive_seed(&[seed, 41, i as u64, rep as u64]),
            )?;
            let mut env = ExcavationEnv::new(config);
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(&[seed, 43, i as u64, rep as u64]));
            env.reset()?;
            for _ in 0..steps_per_delta {
                let action = Action::from_normalized(&std::array::from_fn(|_| {
                    rng.gen_range(-1.0..1.0)
                }));
                let begin = Instant::now();
                let result = env.step(&action)?;
                times.push(begin.elapsed().as_secs_f64());
                voxel_ops += result.voxel_ops;
                total_steps += 1;
                if result.done {
                    env.reset()?;
                }
            }
        }
        rows.push(TimingRow {
            delta_mm: delta,
            median_step_secs: median(&mut times),
            mean_voxel_ops: voxel_ops as f64 / total_steps as f64,
            steps: total_steps,
        });
    }
    Ok(TimingTable { rows })
}
