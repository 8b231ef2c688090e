//! Seeded experiment orchestration: progressive-resolution training runs,
//! fixed/mixed/constant-alpha baselines, ablation grids, a stepping-cost
//! benchmark, and multi-seed aggregation.

mod aggregate;
mod bench;
mod config;
mod csvio;
mod error;
mod grid;
mod run;

pub use aggregate::{aggregate_runs, summarize, MetricSummary, RunSummary};
pub use bench::{bench_timing, TimingRow, TimingTable, MIN_BENCH_STEPS};
pub use config::{ExperimentConfig, ExperimentMode, SAMPLES_UNLIMITED};
pub use csvio::{
    load_metrics_csv, load_record, metrics_csv_string, parse_metrics_csv, save_record,
    METRICS_SCHEMA_VERSION,
};
pub use error::HarnessError;
pub use grid::{
    grid_variants, run_baseline_grid, run_baseline_grid_with, AlphaVariant, GridAxis,
    GridManifest, GridOutcome, GridRunInfo, GridVariantEntry,
};
pub use run::{
    run_experiment, run_experiment_full, run_experiment_full_with, run_experiment_with,
    EnvFactory, ExcavationFactory, IterationRow, RunOutput, RunRecord, RungEvent, TerminalStatus,
    FAULT_FLAG_FRACTION,
};

pub type Result<T> = std::result::Result<T, HarnessError>;
