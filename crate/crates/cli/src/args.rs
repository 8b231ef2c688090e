//! Command-line surface: verbs, flags, and shared options.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "PRPD_OUTPUT_ROOT";

#[derive(Debug, Parser)]
#[command(
    name = "prpd",
    about = "Progressive-resolution policy distillation for voxel excavation",
    version
)]
pub struct Cli {
    /// Output directory root; defaults to $PRPD_OUTPUT_ROOT, then ./artifacts.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a policy and write metrics, a checkpoint, and a JSON summary.
    Train(TrainArgs),
    /// Evaluate a checkpoint's success rate at a chosen resolution.
    Eval(EvalArgs),
    /// Benchmark per-step simulation cost across the resolution ladder.
    Bench(BenchArgs),
    /// Run an ablation grid and write its manifest and records.
    Ablate(AblateArgs),
    /// Record or verify a bit-exact episode replay.
    Replay(ReplayArgs),
    /// Render SVG figures from run metrics CSVs.
    Plot(PlotArgs),
}

#[derive(Debug, Parser)]
pub struct ConfigArgs {
    /// Experiment configuration file (TOML); defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a configuration key, e.g. --set prpd.ppo.gamma=0.98.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Parser)]
pub struct TrainArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Experiment mode: prpd, fixed, mixed, or constant-alpha.
    #[arg(long)]
    pub mode: Option<String>,
    /// Training resolution for fixed mode, in mm.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Train this single seed instead of the configured seed list.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Parser)]
pub struct EvalArgs {
    /// Policy checkpoint to evaluate.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Evaluation resolution in mm.
    #[arg(long, default_value_t = 10.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 100)]
    pub episodes: u64,
    #[arg(long, default_value_t = 64)]
    pub max_steps: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Disable domain randomization during evaluation.
    #[arg(long)]
    pub no_randomize: bool,
    /// Expected config hash; loading fails on mismatch unless --force.
    #[arg(long)]
    pub expect_hash: Option<String>,
    /// Load the checkpoint even if its config hash does not match.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Parser)]
pub struct BenchArgs {
    /// Comma-separated resolution ladder in mm.
    #[arg(long, default_value = "70,60,50,40,30,20,10")]
    pub ladder: String,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Parser)]
pub struct AblateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Grid family: alpha, interval, target-tau, c3, c4, or fixed-delta.
    #[arg(long)]
    pub grid: String,
}

#[derive(Debug, Parser)]
pub struct ReplayArgs {
    /// Replay file to verify, or to write with --record.
    #[arg(long)]
    pub file: PathBuf,
    /// Record a fresh random-action episode into the file instead of
    /// verifying it.
    #[arg(long)]
    pub record: bool,
    #[arg(long, default_value_t = 70.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 32)]
    pub steps: usize,
}

#[derive(Debug, Parser)]
pub struct PlotArgs {
    /// Run metrics CSV files.
    #[arg(required = true)]
    pub csvs: Vec<PathBuf>,
    /// Treat the CSVs as seeds of one variant and draw a mean line with a
    /// standard-deviation band.
    #[arg(long)]
    pub group: bool,
    /// Ablation grid manifest; adds a per-variant summary figure.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}
