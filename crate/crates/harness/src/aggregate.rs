//! Multi-seed aggregation with explicit censoring of runs that never
//! reached the target success rate.

use serde::{Deserialize, Serialize};

use crate::run::RunRecord;
use crate::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: f64,
    pub median: f64,
}

/// Mean, population standard deviation, and median of a sample.
pub fn summarize(values: &[f64]) -> Option<MetricSummary> {
    if values.is_empty() {
        return None;
    }
    // Summation over sorted values keeps the result permutation invariant.
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite metrics"));
    if sorted.first() == sorted.last() {
        return Some(MetricSummary {
            mean: sorted[0],
            std: 0.0,
            median: sorted[0],
        });
    }
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let var = sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let k = sorted.len();
    let median = if k % 2 == 1 {
        sorted[k / 2]
    } else {
        0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
    };
    Some(MetricSummary {
        mean,
        std: var.sqrt(),
        median,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub runs: usize,
    /// Runs that hit a budget before reaching the target; their time and
    /// sample counts are excluded from the to-target distributions.
    pub censored: usize,
    pub fault_flagged: usize,
    pub final_tau: MetricSummary,
    pub total_wall_clock_s: MetricSummary,
    pub total_samples: MetricSummary,
    /// Distribution over uncensored runs only.
    pub time_to_target_s: Option<MetricSummary>,
    pub samples_to_target: Option<MetricSummary>,
    /// Budget-point wall-clock values of the censored runs, sorted.
    pub censored_budget_times_s: Vec<f64>,
}

/// Aggregates the records of one variant across seeds. Permutation
/// invariant in record order.
pub fn aggregate_runs(records: &[RunRecord]) -> Result<RunSummary> {
    if records.is_empty() {
        return Err(HarnessError::Config(
            "aggregation needs at least one record".into(),
        ));
    }
    let final_tau: Vec<f64> = records.iter().map(|r| r.final_tau()).collect();
    let wall: Vec<f64> = records.iter().map(|r| r.total_wall_clock_s()).collect();
    let samples: Vec<f64> = records.iter().map(|r| r.total_samples as f64).collect();
    let times: Vec<f64> = records.iter().filter_map(|r| r.time_to_target()).collect();
    let to_target: Vec<f64> = records
        .iter()
        .filter_map(|r| r.samples_to_target().map(|s| s as f64))
        .collect();
    let mut censored_times: Vec<f64> = records
        .iter()
        .filter(|r| !r.reached_target())
        .map(|r| r.total_wall_clock_s())
        .collect();
    censored_times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));

    Ok(RunSummary {
        runs: records.len(),
        censored: records.iter().filter(|r| !r.reached_target()).count(),
        fault_flagged: records.iter().filter(|r| r.fault_flagged).count(),
        final_tau: summarize(&final_tau).expect("non-empty"),
        total_wall_clock_s: summarize(&wall).expect("non-empty"),
        total_samples: summarize(&samples).expect("non-empty"),
        time_to_target_s: summarize(&times),
        samples_to_target: summarize(&to_target),
        censored_budget_times_s: censored_times,
    })
}
