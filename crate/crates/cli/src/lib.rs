//! Command-line front end: train, evaluate, benchmark, ablate, replay,
//! and plot, with a stable exit-code contract.

mod args;
mod checkpoint;
mod commands;
mod error;
mod plot;

pub use args::{
    AblateArgs, BenchArgs, Cli, Command, ConfigArgs, EvalArgs, PlotArgs, ReplayArgs, TrainArgs,
    OUTPUT_ROOT_ENV,
};
pub use checkpoint::{
    checkpoint_bytes, load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use commands::{
    cmd_ablate, cmd_bench, cmd_eval, cmd_plot, cmd_replay, cmd_train, dispatch, resolve_config,
};
pub use error::CliError;
pub use plot::{render_svg, Band, Marker, PlotSpec, Series};

pub type Result<T> = std::result::Result<T, CliError>;
