//! Baseline and ablation grids: one run per (variant, seed) with a JSON
//! manifest tying variants to their records. Failures stay isolated to the
//! variant that produced them.

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentMode};
use crate::run::{run_experiment_with, EnvFactory, ExcavationFactory, RunRecord};
use crate::Result;

/// Mixture-rate variant of the alpha ablation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AlphaVariant {
    /// Q-gap estimated rate.
    Optimized,
    Fixed(f64),
}

/// One-axis ablation families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GridAxis {
    Alpha(Vec<AlphaVariant>),
    /// Resolution step between rungs.
    IntervalMm(Vec<f64>),
    /// Rung-advance success threshold.
    TargetTau(Vec<f64>),
    /// Distillation weight, with the Q weight held at its default.
    C3(Vec<f64>),
    /// Q-loss weight, with the distillation weight held at its default.
    C4(Vec<f64>),
    /// Single-resolution baselines.
    FixedDelta(Vec<f64>),
}

impl GridAxis {
    pub fn name(&self) -> &'static str {
        match self {
            GridAxis::Alpha(_) => "alpha",
            GridAxis::IntervalMm(_) => "interval",
            GridAxis::TargetTau(_) => "target-tau",
            GridAxis::C3(_) => "c3",
            GridAxis::C4(_) => "c4",
            GridAxis::FixedDelta(_) => "fixed-delta",
        }
    }
}

/// Materializes the labelled configs of one axis, without validation; bad
/// variants surface as per-variant errors at run time.
pub fn grid_variants(
    base: &ExperimentConfig,
    axis: &GridAxis,
) -> Vec<(String, ExperimentConfig)> {
    let mut out = Vec::new();
    match axis {
        GridAxis::Alpha(variants) => {
            for v in variants {
                let mut cfg = base.clone();
                let label = match v {
                    AlphaVariant::Optimized => {
                        cfg.mode = ExperimentMode::Prpd;
                        "alpha-opt".to_string()
                    }
                    AlphaVariant::Fixed(a) => {
                        cfg.mode = ExperimentMode::ConstantAlpha;
                        cfg.constant_alpha = *a;
                        format!("alpha-{a}")
                    }
                };
                out.push((label, cfg));
            }
        }
        GridAxis::IntervalMm(values) => {
            for &r in values {
                let mut cfg = base.clone();
                cfg.prpd.schedule.interval_mm = r;
                out.push((format!("interval-{r}"), cfg));
            }
        }
        GridAxis::TargetTau(values) => {
            for &t in values {
                let mut cfg = base.clone();
                cfg.prpd.schedule.target_tau = t;
                out.push((format!("tau-{t}"), cfg));
            }
        }
        GridAxis::C3(values) => {
            for &c in values {
                let mut cfg = base.clone();
                cfg.prpd.weights.c3 = c;
                out.push((format!("c3-{c}"), cfg));
            }
        }
        GridAxis::C4(values) => {
            for &c in values {
                let mut cfg = base.clone();
                cfg.prpd.weights.c4 = c;
                out.push((format!("c4-{c}"), cfg));
            }
        }
        GridAxis::FixedDelta(values) => {
            for &d in values {
                let mut cfg = base.clone();
                cfg.mode = ExperimentMode::Fixed;
                cfg.fixed_delta_mm = d;
                out.push((format!("fixed-{d}"), cfg));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRunInfo {
    pub seed: u64,
    pub reached_target: bool,
    pub metrics_digest: String,
    pub final_tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridVariantEntry {
    pub label: String,
    pub config_hash: String,
    /// Variant-level failure (for example an invalid derived ladder); the
    /// other variants still run.
    pub error: Option<String>,
    pub runs: Vec<GridRunInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridManifest {
    pub grid: String,
    pub base_config_hash: String,
    pub variants: Vec<GridVariantEntry>,
}

pub struct GridOutcome {
    pub manifest: GridManifest,
    /// Records per variant label, in manifest order; failed variants have
    /// no entry here.
    pub records: Vec<(String, Vec<RunRecord>)>,
}

/// Runs the whole grid with a caller-chosen environment supplier.
pub fn run_baseline_grid_with<F: EnvFactory>(
    base: &ExperimentConfig,
    axis: &GridAxis,
    factory: &F,
) -> Result<GridOutcome> {
    let mut manifest = GridManifest {
        grid: axis.name().to_string(),
        base_config_hash: base.config_hash(),
        variants: Vec::new(),
    };
    let mut all_records = Vec::new();
    for (label, config) in grid_variants(base, axis) {
        let mut entry = GridVariantEntry {
            label: label.clone(),
            config_hash: config.config_hash(),
            error: None,
            runs: Vec::new(),
        };
        if let Err(e) = config.validate() {
            entry.error = Some(e.to_string());
            manifest.variants.push(entry);
            continue;
        }
        let mut records = Vec::new();
        for &seed in &config.seeds {
            match run_experiment_with(&config, seed, factory) {
                Ok(record) => {
                    entry.runs.push(GridRunInfo {
                        seed,
                        reached_target: record.reached_target(),
                        metrics_digest: format!("{:016x}", record.metrics_digest()),
                        final_tau: record.final_tau(),
                    });
                    records.push(record);
                }
                Err(e) => {
                    entry.error = Some(format!("seed {seed}: {e}"));
                    break;
                }
            }
        }
        if entry.error.is_none() {
            all_records.push((label, records));
        }
        manifest.variants.push(entry);
    }
    Ok(GridOutcome {
        manifest,
        records: all_records,
    })
}

/// Runs the grid on the real excavation environment.
pub fn run_baseline_grid(base: &ExperimentConfig, axis: &GridAxis) -> Result<GridOutcome> {
    run_baseline_grid_with(base, axis, &ExcavationFactory)
}
