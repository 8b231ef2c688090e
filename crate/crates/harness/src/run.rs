//! Single-run orchestration: the training loop for every experiment mode,
//! with per-iteration metrics, rung events, and budget handling.

use std::time::Instant;

use env_core::{derive_seed, EnvConfig, ExcavationEnv, Fnv64, Resolution};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rl_core::{
    collect_rollout, compute_gae, evaluate_policy, normalize_advantages, update_iteration,
    ActorCritic, Environment,
};
use serde::{Deserialize, Serialize};
use tensor_core::AdamState;

use prpd_core::{schedule_resolution, transfer_policy, ScheduleStep, TeacherSnapshot};

use crate::config::{ExperimentConfig, ExperimentMode};
use crate::{HarnessError, Result};

/// Episode fault fraction above which a run is flagged as unreliable.
pub const FAULT_FLAG_FRACTION: f64 = 0.01;

/// One metrics row per training iteration. `wall_clock_s` is the only
/// nondeterministic field and is excluded from digests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRow {
    pub iteration: u32,
    pub delta_mm: f64,
    /// Cumulative environment steps consumed so far.
    pub samples: u64,
    pub wall_clock_s: f64,
    /// Success rate at the current training resolution (the scheduling gate).
    pub tau: f64,
    /// Success rate of the secondary evaluation stream, when measured.
    pub tau_eval: Option<f64>,
    pub alpha: f64,
    pub surrogate: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub distill: f64,
    pub q_loss: f64,
    pub total_loss: f64,
    /// Cumulative finished episodes.
    pub episodes: u64,
    /// Cumulative simulation faults.
    pub faults: u64,
}

/// A scheduler-triggered resolution decrease.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RungEvent {
    pub iteration: u32,
    pub from_delta_mm: f64,
    pub to_delta_mm: f64,
    /// Cumulative samples at the moment of the change.
    pub samples_at_change: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminalStatus {
    /// Reached the target success rate at the final training resolution.
    ReachedTarget { iteration: u32 },
    /// Stopped by the iteration, sample, or wall-clock budget.
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub mode: ExperimentMode,
    pub seed: u64,
    pub rows: Vec<IterationRow>,
    pub rung_events: Vec<RungEvent>,
    pub status: TerminalStatus,
    /// Set when more than `FAULT_FLAG_FRACTION` of episodes faulted.
    pub fault_flagged: bool,
    pub total_samples: u64,
    pub total_episodes: u64,
    pub total_faults: u64,
}

impl RunRecord {
    pub fn reached_target(&self) -> bool {
        matches!(self.status, TerminalStatus::ReachedTarget { .. })
    }

    /// Wall-clock seconds at termination; `None` when censored by budget.
    pub fn time_to_target(&self) -> Option<f64> {
        if self.reached_target() {
            self.rows.last().map(|r| r.wall_clock_s)
        } else {
            None
        }
    }

    pub fn samples_to_target(&self) -> Option<u64> {
        if self.reached_target() {
            self.rows.last().map(|r| r.samples)
        } else {
            None
        }
    }

    pub fn final_tau(&self) -> f64 {
        self.rows.last().map(|r| r.tau).unwrap_or(0.0)
    }

    pub fn total_wall_clock_s(&self) -> f64 {
        self.rows.last().map(|r| r.wall_clock_s).unwrap_or(0.0)
    }

    /// Samples spent per rung segment, in ladder order. Segments are
    /// delimited by rung events; their sum equals `total_samples` exactly.
    pub fn samples_per_rung(&self) -> Vec<(f64, u64)> {
        let mut out = Vec::new();
        let mut prev_samples = 0u64;
        for event in &self.rung_events {
            out.push((event.from_delta_mm, event.samples_at_change - prev_samples));
            prev_samples = event.samples_at_change;
        }
        let last_delta = self
            .rows
            .last()
            .map(|r| r.delta_mm)
            .or_else(|| self.rung_events.last().map(|e| e.to_delta_mm))
            .unwrap_or(0.0);
        out.push((last_delta, self.total_samples - prev_samples));
        out
    }

    /// Digest over every deterministic field: rows (minus wall-clock),
    /// events, status, and totals.
    pub fn metrics_digest(&self) -> u64 {
        let mut h = Fnv64::new();
        h.write_bytes(self.config_hash.as_bytes());
        h.write_u64(self.seed);
        for r in &self.rows {
            h.write_u64(r.iteration as u64);
            h.write_f64(r.delta_mm);
            h.write_u64(r.samples);
            h.write_f64(r.tau);
            h.write_bool(r.tau_eval.is_some());
            h.write_f64(r.tau_eval.unwrap_or(0.0));
            h.write_f64(r.alpha);
            h.write_f64(r.surrogate);
            h.write_f64(r.value_loss);
            h.write_f64(r.entropy);
            h.write_f64(r.distill);
            h.write_f64(r.q_loss);
            h.write_f64(r.total_loss);
            h.write_u64(r.episodes);
            h.write_u64(r.faults);
        }
        for e in &self.rung_events {
            h.write_u64(e.iteration as u64);
            h.write_f64(e.from_delta_mm);
            h.write_f64(e.to_delta_mm);
            h.write_u64(e.samples_at_change);
        }
        match self.status {
            TerminalStatus::ReachedTarget { iteration } => {
                h.write_u64(1);
                h.write_u64(iteration as u64);
            }
            TerminalStatus::BudgetExhausted => h.write_u64(2),
        }
        h.write_bool(self.fault_flagged);
        h.write_u64(self.total_samples);
        h.write_u64(self.total_episodes);
        h.write_u64(self.total_faults);
        h.finish()
    }
}

/// Environment supplier, injectable so orchestration logic is testable with
/// cheap stand-in dynamics.
pub trait EnvFactory {
    type Env: Environment;

    /// Training environment `env_index` at the given resolution.
    fn train_env(
        &self,
        config: &ExperimentConfig,
        delta_mm: f64,
        seed: u64,
        env_index: u64,
    ) -> Self::Env;

    /// Fresh single-episode evaluation environment.
    fn eval_env(&self, config: &ExperimentConfig, delta_mm: f64, seed: u64) -> Self::Env;
}

/// Supplies the real excavation environment.
pub struct ExcavationFactory;

impl EnvFactory for ExcavationFactory {
    type Env = ExcavationEnv;

    fn train_env(
        &self,
        config: &ExperimentConfig,
        delta_mm: f64,
        seed: u64,
        env_index: u64,
    ) -> ExcavationEnv {
        let resolution = Resolution::new(delta_mm).expect("resolution validated with the config");
        let env_config = EnvConfig::new(
            resolution,
            config.episode_max_steps,
            config.domain_randomization,
            seed,
        )
        .expect("env parameters validated with the config")
        .with_env_index(env_index);
        ExcavationEnv::new(env_config)
    }

    fn eval_env(&self, config: &ExperimentConfig, delta_mm: f64, seed: u64) -> ExcavationEnv {
        self.train_env(config, delta_mm, seed, 0)
    }
}

/// Per-env training resolutions for one iteration of the given mode.
fn training_deltas(config: &ExperimentConfig, current_rung: f64) -> Vec<f64> {
    let num_envs = config.prpd.ppo.num_envs;
    match config.mode {
        ExperimentMode::Fixed => vec![config.fixed_delta_mm; num_envs],
        ExperimentMode::Mixed => {
            let ladder = config.prpd.schedule.ladder();
            let per = num_envs / ladder.len();
            let finest = *ladder.last().expect("non-empty ladder");
            (0..num_envs)
                .map(|i| {
                    if per > 0 && i < per * ladder.len() {
                        ladder[i / per]
                    } else {
                        finest
                    }
                })
                .collect()
        }
        ExperimentMode::Prpd | ExperimentMode::ConstantAlpha => vec![current_rung; num_envs],
    }
}

fn eval_tau<F: EnvFactory>(
    factory: &F,
    config: &ExperimentConfig,
    nets: &ActorCritic,
    delta_mm: f64,
    seed: u64,
    iteration: u32,
    stream: u64,
) -> Result<f64> {
    let tau = evaluate_policy(
        nets,
        |ep| {
            let env_seed = derive_seed(&[seed, 23, iteration as u64, stream, ep]);
            factory.eval_env(config, delta_mm, env_seed)
        },
        config.eval_episodes,
        config.episode_max_steps,
    )?;
    Ok(tau)
}

/// A finished run: its metrics record plus the trained networks.
pub struct RunOutput {
    pub record: RunRecord,
    pub nets: ActorCritic,
}

/// Runs one seeded experiment to termination with a caller-chosen
/// environment supplier.
pub fn run_experiment_full_with<F: EnvFactory>(
    config: &ExperimentConfig,
    seed: u64,
    factory: &F,
) -> Result<RunOutput> {
    config.validate()?;
    let prpd_cfg = config.effective_prpd();
    let ppo = &prpd_cfg.ppo;
    let samples_per_iteration = (ppo.num_envs * ppo.horizon) as u64;

    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, 29, 0]));
    let mut nets = ActorCritic::new(&mut init_rng)?;
    let mut update_rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, 31, 0]));
    let mut actor_opt = AdamState::new(ppo.learning_rate);
    let mut q_opt = AdamState::new(ppo.learning_rate);
    let mut teacher: Option<TeacherSnapshot> = None;

    let ladder = config.prpd.schedule.ladder();
    let progressive = matches!(
        config.mode,
        ExperimentMode::Prpd | ExperimentMode::ConstantAlpha
    );
    let mut rung_index = 0usize;
    // Row resolution: the scheduling gate. Mixed mode trains across the
    // whole ladder but gates on the evaluation resolution.
    let mut gate_delta = match config.mode {
        ExperimentMode::Fixed => config.fixed_delta_mm,
        ExperimentMode::Mixed => config.eval_delta_mm,
        _ => ladder[0],
    };

    let build_envs = |config: &ExperimentConfig, gate: f64, rung: usize| -> Vec<F::Env> {
        training_deltas(config, gate)
            .iter()
            .enumerate()
            .map(|(i, &delta)| {
                let env_seed = derive_seed(&[seed, 11, rung as u64]);
                factory.train_env(config, delta, env_seed, i as u64)
            })
            .collect()
    };
    let mut envs = build_envs(config, gate_delta, rung_index);

    let mut record = RunRecord {
        config_hash: config.config_hash(),
        mode: config.mode,
        seed,
        rows: Vec::new(),
        rung_events: Vec::new(),
        status: TerminalStatus::BudgetExhausted,
        fault_flagged: false,
        total_samples: 0,
        total_episodes: 0,
        total_faults: 0,
    };

    let start = Instant::now();
    for iteration in 0..config.max_iterations {
        if record.total_samples + samples_per_iteration > config.max_samples
            || start.elapsed().as_secs_f64() >= config.max_wall_clock_secs
        {
            break;
        }

        let mut buffer = collect_rollout(
            &nets,
            &mut envs,
            ppo.horizon,
            derive_seed(&[seed, 17, iteration as u64]),
        )?;
        compute_gae(&mut buffer, ppo.gamma, ppo.gae_lambda, &nets)?;
        normalize_advantages(&mut buffer);
        record.total_samples += samples_per_iteration;
        record.total_episodes += buffer.episodes_finished;
        record.total_faults += buffer.fault_count;

        let stats = if progressive {
            prpd_core::prpd_update_iteration(
                &mut nets,
                teacher.as_ref(),
                &buffer,
                &prpd_cfg,
                &mut actor_opt,
                &mut q_opt,
                &mut update_rng,
            )?
        } else {
            let s = update_iteration(&mut nets, &buffer, ppo, &mut actor_opt, &mut update_rng)?;
            prpd_core::PrpdStats {
                alpha: 0.0,
                surrogate: s.surrogate,
                value_loss: s.value_loss,
                entropy: s.entropy,
                distill: 0.0,
                q_loss: 0.0,
                total: s.total,
                minibatch_steps: s.minibatch_steps,
            }
        };

        let tau = eval_tau(factory, config, &nets, gate_delta, seed, iteration, 0)?;
        let tau_eval = if config.eval_interval > 0
            && iteration % config.eval_interval == 0
            && config.eval_delta_mm != gate_delta
        {
            Some(eval_tau(
                factory,
                config,
                &nets,
                config.eval_delta_mm,
                seed,
                iteration,
                1,
            )?)
        } else {
            None
        };

        record.rows.push(IterationRow {
            iteration,
            delta_mm: gate_delta,
            samples: record.total_samples,
            wall_clock_s: start.elapsed().as_secs_f64(),
            tau,
            tau_eval,
            alpha: stats.alpha,
            surrogate: stats.surrogate,
            value_loss: stats.value_loss,
            entropy: stats.entropy,
            distill: stats.distill,
            q_loss: stats.q_loss,
            total_loss: stats.total,
            episodes: record.total_episodes,
            faults: record.total_faults,
        });

        if progressive {
            match schedule_resolution(gate_delta, tau, &config.prpd.schedule)? {
                ScheduleStep::Advance(next) => {
                    record.rung_events.push(RungEvent {
                        iteration,
                        from_delta_mm: gate_delta,
                        to_delta_mm: next,
                        samples_at_change: record.total_samples,
                    });
                    teacher = Some(transfer_policy(&nets, &mut [&mut actor_opt, &mut q_opt])?);
                    rung_index += 1;
                    gate_delta = next;
                    envs = build_envs(config, gate_delta, rung_index);
                }
                ScheduleStep::Finished => {
                    record.status = TerminalStatus::ReachedTarget { iteration };
                    break;
                }
                ScheduleStep::Unchanged => {}
            }
        } else if tau >= config.prpd.schedule.target_tau {
            record.status = TerminalStatus::ReachedTarget { iteration };
            break;
        }
    }

    if record.total_episodes > 0 {
        let fraction = record.total_faults as f64 / record.total_episodes as f64;
        record.fault_flagged = fraction > FAULT_FLAG_FRACTION;
    }
    validate_record(&record, config)?;
    Ok(RunOutput { record, nets })
}

/// As `run_experiment_full_with`, keeping only the metrics record.
pub fn run_experiment_with<F: EnvFactory>(
    config: &ExperimentConfig,
    seed: u64,
    factory: &F,
) -> Result<RunRecord> {
    Ok(run_experiment_full_with(config, seed, factory)?.record)
}

/// Runs one seeded experiment on the real excavation environment.
pub fn run_experiment_full(config: &ExperimentConfig, seed: u64) -> Result<RunOutput> {
    run_experiment_full_with(config, seed, &ExcavationFactory)
}

/// Runs one seeded experiment on the real excavation environment.
pub fn run_experiment(config: &ExperimentConfig, seed: u64) -> Result<RunRecord> {
    run_experiment_with(config, seed, &ExcavationFactory)
}

/// Internal bookkeeping invariants; violation indicates an orchestration
/// bug, not a bad configuration.
fn validate_record(record: &RunRecord, config: &ExperimentConfig) -> Result<()> {
    for pair in record.rows.windows(2) {
        if pair[1].samples <= pair[0].samples {
            return Err(HarnessError::Config(
                "sample counter must be strictly increasing".into(),
            ));
        }
        if pair[1].wall_clock_s < pair[0].wall_clock_s {
            return Err(HarnessError::Config(
                "wall clock must be non-decreasing".into(),
            ));
        }
        if matches!(
            config.mode,
            ExperimentMode::Prpd | ExperimentMode::ConstantAlpha
        ) && pair[1].delta_mm > pair[0].delta_mm
        {
            return Err(HarnessError::Config(
                "resolution must be non-increasing in progressive modes".into(),
            ));
        }
    }
    let per_rung: u64 = record.samples_per_rung().iter().map(|(_, s)| s).sum();
    if per_rung != record.total_samples {
        return Err(HarnessError::Config(
            "per-rung sample bookkeeping does not add up".into(),
        ));
    }
    Ok(())
}
