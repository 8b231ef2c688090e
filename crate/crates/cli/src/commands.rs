//! Verb implementations behind the command-line surface.

use std::fs;
use std::path::{Path, PathBuf};

use env_core::{derive_seed, Action, EnvConfig, ExcavationEnv, ReplayFile, Resolution};
use harness::{
    aggregate_runs, bench_timing, load_record, parse_metrics_csv, run_baseline_grid,
    run_experiment_full, save_record, AlphaVariant, ExperimentConfig, ExperimentMode, GridAxis,
    IterationRow, RunRecord,
};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rl_core::evaluate_policy;
use serde_json::json;

use crate::args::{
    AblateArgs, BenchArgs, Cli, Command, ConfigArgs, EvalArgs, PlotArgs, ReplayArgs, TrainArgs,
    OUTPUT_ROOT_ENV,
};
use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::plot::{render_svg, Band, Marker, PlotSpec, Series};
use crate::{CliError, Result};

pub fn dispatch(cli: Cli) -> Result<()> {
    let out = output_root(cli.out);
    match cli.command {
        Command::Train(args) => cmd_train(args, &out),
        Command::Eval(args) => cmd_eval(args, &out),
        Command::Bench(args) => cmd_bench(args, &out),
        Command::Ablate(args) => cmd_ablate(args, &out),
        Command::Replay(args) => cmd_replay(args),
        Command::Plot(args) => cmd_plot(args, &out),
    }
}

fn output_root(flag: Option<PathBuf>) -> PathBuf {
    flag.unwrap_or_else(|| {
        std::env::var(OUTPUT_ROOT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|_| PathBuf::from("artifacts"))
    })
}

/// Loads the configuration file (or defaults) and applies `--set` pairs.
pub fn resolve_config(args: &ConfigArgs) -> Result<ExperimentConfig> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            ExperimentConfig::from_toml_str(&text)?
        }
        None => ExperimentConfig::default(),
    };
    for pair in &args.overrides {
        let (key, value) = pair.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("override {pair:?} is not of the form key=value"))
        })?;
        config.apply_override(key.trim(), value.trim())?;
    }
    Ok(config)
}

fn parse_mode(text: &str) -> Result<ExperimentMode> {
    match text {
        "prpd" => Ok(ExperimentMode::Prpd),
        "fixed" => Ok(ExperimentMode::Fixed),
        "mixed" => Ok(ExperimentMode::Mixed),
        "constant-alpha" => Ok(ExperimentMode::ConstantAlpha),
        other => Err(CliError::Usage(format!(
            "unknown mode {other:?}; expected prpd, fixed, mixed, or constant-alpha"
        ))),
    }
}

pub fn cmd_train(args: TrainArgs, out: &Path) -> Result<()> {
    let mut config = resolve_config(&args.config)?;
    if let Some(mode) = &args.mode {
        config.mode = parse_mode(mode)?;
    }
    if let Some(delta) = args.delta {
        config.fixed_delta_mm = delta;
    }
    if let Some(seed) = args.seed {
        config.seeds = vec![seed];
    }
    config.validate()?;

    let hash = config.config_hash();
    fs::create_dir_all(out)?;
    let seeds = config.seeds.clone();
    for seed in seeds {
        let output = run_experiment_full(&config, seed)?;
        let stem = format!("{}-seed{seed}", config.mode);
        let (csv_path, json_path) = save_record(&output.record, out, &stem)?;
        let ckpt_path = out.join(format!("{stem}.ckpt"));
        save_checkpoint(&ckpt_path, &output.nets, &hash)?;
        let summary = json!({
            "seed": seed,
            "mode": config.mode.to_string(),
            "config_hash": hash,
            "status": output.record.status,
            "iterations": output.record.rows.len(),
            "final_tau": output.record.final_tau(),
            "total_samples": output.record.total_samples,
            "wall_clock_s": output.record.total_wall_clock_s(),
            "rung_events": output.record.rung_events.len(),
            "fault_flagged": output.record.fault_flagged,
            "metrics_csv": csv_path,
            "record_json": json_path,
            "checkpoint": ckpt_path,
        });
        println!("{}", serde_json::to_string_pretty(&summary)?);
    }
    Ok(())
}

pub fn cmd_eval(args: EvalArgs, out: &Path) -> Result<()> {
    if args.episodes == 0 {
        return Err(CliError::Usage("evaluation needs at least 1 episode".into()));
    }
    let resolution = Resolution::new(args.delta).map_err(|e| CliError::Usage(e.to_string()))?;
    let (nets, stored_hash) =
        load_checkpoint(&args.checkpoint, args.expect_hash.as_deref(), args.force)?;
    let tau = evaluate_policy(
        &nets,
        |ep| {
            let seed = derive_seed(&[args.seed, 53, ep]);
            let config = EnvConfig::new(resolution, args.max_steps, !args.no_randomize, seed)
                .expect("validated evaluation parameters");
            ExcavationEnv::new(config)
        },
        args.episodes,
        args.max_steps,
    )?;
    // Normal-approximation binomial 95% interval, clamped to [0, 1].
    let half = 1.96 * (tau * (1.0 - tau) / args.episodes as f64).sqrt();
    let (lo, hi) = ((tau - half).max(0.0), (tau + half).min(1.0));

    let report = json!({
        "checkpoint": args.checkpoint,
        "config_hash": stored_hash,
        "delta_mm": args.delta,
        "episodes": args.episodes,
        "tau": tau,
        "ci95": [lo, hi],
    });
    fs::create_dir_all(out)?;
    fs::write(out.join("eval.json"), serde_json::to_string_pretty(&report)?)?;
    println!(
        "tau = {tau:.3} (95% CI [{lo:.3}, {hi:.3}]) at delta {} mm over {} episodes",
        args.delta, args.episodes
    );
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

pub fn cmd_bench(args: BenchArgs, out: &Path) -> Result<()> {
    let ladder: Vec<f64> = args
        .ladder
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad ladder entry {s:?}")))
        })
        .collect::<Result<_>>()?;
    let table = bench_timing(&ladder, args.steps, args.repeats, args.seed)?;
    fs::create_dir_all(out)?;
    fs::write(out.join("bench.csv"), table.csv_string())?;
    println!("delta_mm  median_step_ms  mean_voxel_ops");
    for row in &table.rows {
        println!(
            "{:>8}  {:>14.4}  {:>14.1}",
            row.delta_mm,
            row.median_step_secs * 1e3,
            row.mean_voxel_ops
        );
    }
    println!(
        "time monotone toward finer resolution: {}; fine/coarse time ratio: {:.2}",
        table.time_monotone(),
        table.fine_to_coarse_time_ratio().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn grid_axis(name: &str) -> Result<GridAxis> {
    match name {
        "alpha" => Ok(GridAxis::Alpha(vec![
            AlphaVariant::Optimized,
            AlphaVariant::Fixed(0.0),
            AlphaVariant::Fixed(0.5),
            AlphaVariant::Fixed(1.0),
        ])),
        "interval" => Ok(GridAxis::IntervalMm(vec![5.0, 10.0, 20.0, 30.0])),
        "target-tau" => Ok(GridAxis::TargetTau(vec![0.85, 0.90, 0.95])),
        "c3" => Ok(GridAxis::C3(vec![0.0, 0.1, 0.5, 1.0, 5.0])),
        "c4" => Ok(GridAxis::C4(vec![0.0, 0.5, 1.0, 2.0])),
        "fixed-delta" => Ok(GridAxis::FixedDelta(vec![70.0, 40.0, 10.0])),
        other => Err(CliError::Usage(format!(
            "unknown grid {other:?}; expected alpha, interval, target-tau, c3, c4, or fixed-delta"
        ))),
    }
}

pub fn cmd_ablate(args: AblateArgs, out: &Path) -> Result<()> {
    let config = resolve_config(&args.config)?;
    config.validate()?;
    let axis = grid_axis(&args.grid)?;
    let outcome = run_baseline_grid(&config, &axis)?;

    let grid_dir = out.join(&args.grid);
    fs::create_dir_all(&grid_dir)?;
    for (label, records) in &outcome.records {
        for record in records {
            save_record(record, &grid_dir, &format!("{label}-seed{}", record.seed))?;
        }
        if !records.is_empty() {
            let summary = aggregate_runs(records)?;
            fs::write(
                grid_dir.join(format!("{label}-summary.json")),
                serde_json::to_string_pretty(&summary)?,
            )?;
        }
    }
    let manifest_path = grid_dir.join("manifest.json");
    fs::write(&manifest_path, serde_json::to_string_pretty(&outcome.manifest)?)?;
    println!(
        "grid {} finished: {} variants, manifest at {}",
        args.grid,
        outcome.manifest.variants.len(),
        manifest_path.display()
    );
    for entry in &outcome.manifest.variants {
        match &entry.error {
            Some(e) => println!("  {}: FAILED ({e})", entry.label),
            None => println!("  {}: {} runs", entry.label, entry.runs.len()),
        }
    }
    Ok(())
}

pub fn cmd_replay(args: ReplayArgs) -> Result<()> {
    if args.record {
        let resolution =
            Resolution::new(args.delta).map_err(|e| CliError::Usage(e.to_string()))?;
        let config = EnvConfig::new(resolution, args.steps.max(1) as u32, true, args.seed)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[args.seed, 59]));
        let actions: Vec<Action> = (0..args.steps)
            .map(|_| Action::from_normalized(&std::array::from_fn(|_| rng.gen_range(-1.0..1.0))))
            .collect();
        let file = env_core::record_episode(&config, 0, &actions)?;
        file.save(&args.file)?;
        println!(
            "recorded {} steps at delta {} mm into {}",
            file.step_digests.len(),
            args.delta,
            args.file.display()
        );
        return Ok(());
    }
    let file = ReplayFile::load(&args.file)?;
    match env_core::replay_episode(&file)? {
        None => {
            println!(
                "replay OK: {} steps reproduced bit-exactly",
                file.step_digests.len()
            );
            Ok(())
        }
        Some(divergence) => Err(CliError::Runtime(format!(
            "replay diverged at step {}: expected digest {:016x}, got {:016x}",
            divergence.step, divergence.expected_digest, divergence.actual_digest
        ))),
    }
}

struct LoadedRun {
    label: String,
    rows: Vec<IterationRow>,
    record: Option<RunRecord>,
}

fn load_runs(paths: &[PathBuf]) -> Result<Vec<LoadedRun>> {
    let mut runs = Vec::new();
    for path in paths {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        let rows = parse_metrics_csv(&text)?;
        if rows.is_empty() {
            return Err(CliError::Usage(format!(
                "{} contains no data rows",
                path.display()
            )));
        }
        // Rung events live in the JSON sidecar written next to the CSV.
        let record = load_record(&path.with_extension("json")).ok();
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        runs.push(LoadedRun { label, rows, record });
    }
    Ok(runs)
}

fn rung_markers(runs: &[LoadedRun], x_of: impl Fn(&RunRecord, u32) -> f64) -> Vec<Marker> {
    let mut markers = Vec::new();
    if let Some(record) = runs.iter().find_map(|r| r.record.as_ref()) {
        for event in &record.rung_events {
            markers.push(Marker {
                x: x_of(record, event.iteration),
                label: format!("{}mm", event.to_delta_mm),
            });
        }
    }
    markers
}

/// Mean and standard deviation of `metric` across runs per iteration
/// index, over the iterations all runs share.
fn mean_band(runs: &[LoadedRun], metric: impl Fn(&IterationRow) -> f64) -> (Series, Band) {
    let common = runs.iter().map(|r| r.rows.len()).min().unwrap_or(0);
    let mut mean_points = Vec::with_capacity(common);
    let mut band = Band {
        xs: Vec::with_capacity(common),
        lower: Vec::with_capacity(common),
        upper: Vec::with_capacity(common),
    };
    for i in 0..common {
        let values: Vec<f64> = runs.iter().map(|r| metric(&r.rows[i])).collect();
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let x = i as f64;
        mean_points.push((x, mean));
        band.xs.push(x);
        band.lower.push(mean - std);
        band.upper.push(mean + std);
    }
    (
        Series {
            label: format!("mean over {} runs", runs.len()),
            points: mean_points,
        },
        band,
    )
}

pub fn cmd_plot(args: PlotArgs, out: &Path) -> Result<()> {
    let runs = load_runs(&args.csvs)?;
    fs::create_dir_all(out)?;

    let mut curves = PlotSpec {
        title: "Success rate vs wall-clock time".into(),
        x_label: "wall-clock [s]".into(),
        y_label: "success rate".into(),
        ..PlotSpec::default()
    };
    let mut alpha = PlotSpec {
        title: "Mixture rate over training".into(),
        x_label: "iteration".into(),
        y_label: "alpha".into(),
        ..PlotSpec::default()
    };
    if args.group && runs.len() > 1 {
        let (tau_mean, tau_band) = mean_band(&runs, |r| r.tau);
        // The shared x axis for grouped curves is the iteration index;
        // wall clocks differ across seeds.
        let mut grouped = curves.clone();
        grouped.x_label = "iteration".into();
        grouped.series.push(tau_mean);
        grouped.bands.push(tau_band);
        grouped.markers = rung_markers(&runs, |_, iteration| iteration as f64);
        curves = grouped;

        let (alpha_mean, alpha_band) = mean_band(&runs, |r| r.alpha);
        alpha.series.push(alpha_mean);
        alpha.bands.push(alpha_band);
    } else {
        for run in &runs {
            curves.series.push(Series {
                label: run.label.clone(),
                points: run.rows.iter().map(|r| (r.wall_clock_s, r.tau)).collect(),
            });
            alpha.series.push(Series {
                label: run.label.clone(),
                points: run
                    .rows
                    .iter()
                    .map(|r| (r.iteration as f64, r.alpha))
                    .collect(),
            });
        }
        curves.markers = rung_markers(&runs, |record, iteration| {
            record
                .rows
                .iter()
                .find(|r| r.iteration == iteration)
                .map(|r| r.wall_clock_s)
                .unwrap_or(0.0)
        });
    }
    alpha.markers = rung_markers(&runs, |_, iteration| iteration as f64);

    let curves_path = out.join("learning_curves.svg");
    fs::write(&curves_path, render_svg(&curves)?)?;
    let alpha_path = out.join("alpha_traces.svg");
    fs::write(&alpha_path, render_svg(&alpha)?)?;
    println!("wrote {}", curves_path.display());
    println!("wrote {}", alpha_path.display());

    if let Some(manifest_path) = &args.manifest {
        let text = fs::read_to_string(manifest_path)
            .map_err(|e| CliError::Usage(format!("cannot read manifest: {e}")))?;
        let manifest: harness::GridManifest = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("bad manifest: {e}")))?;
        let mut summary = PlotSpec {
            title: format!("Ablation summary: {}", manifest.grid),
            x_label: "variant index".into(),
            y_label: "final success rate".into(),
            ..PlotSpec::default()
        };
        for (i, entry) in manifest.variants.iter().enumerate() {
            if entry.runs.is_empty() {
                continue;
            }
            summary.series.push(Series {
                label: entry.label.clone(),
                points: entry
                    .runs
                    .iter()
                    .map(|r| (i as f64, r.final_tau))
                    .collect(),
            });
        }
        let summary_path = out.join("ablation_summary.svg");
        fs::write(&summary_path, render_svg(&summary)?)?;
        println!("wrote {}", summary_path.display());
    }
    Ok(())
}
