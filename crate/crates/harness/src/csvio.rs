//! Metrics persistence: schema-versioned CSV rows plus a JSON sidecar for
//! events and terminal status.

use std::fs;
use std::path::{Path, PathBuf};

use crate::run::{IterationRow, RunRecord};
use crate::{HarnessError, Result};

/// Frozen metrics schema identifier; always the first CSV row.
pub const METRICS_SCHEMA_VERSION: &str = "prpd-metrics-v1";

const HEADER: [&str; 16] = [
    "iteration",
    "delta_mm",
    "samples",
    "wall_clock_s",
    "tau",
    "tau_eval",
    "alpha",
    "surrogate",
    "value_loss",
    "entropy",
    "distill",
    "q_loss",
    "total_loss",
    "episodes",
    "faults",
    "schema",
];

/// Renders the per-iteration metrics as CSV text. The schema version rides
/// in the first row's trailing column so plain readers keep working.
pub fn metrics_csv_string(rows: &[IterationRow]) -> String {
    let mut out = String::new();
    out.push_str(&HEADER.join(","));
    out.push('\n');
    for (i, r) in rows.iter().enumerate() {
        let tau_eval = r.tau_eval.map(|v| v.to_string()).unwrap_or_default();
        let schema = if i == 0 { METRICS_SCHEMA_VERSION } else { "" };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.iteration,
            r.delta_mm,
            r.samples,
            r.wall_clock_s,
            r.tau,
            tau_eval,
            r.alpha,
            r.surrogate,
            r.value_loss,
            r.entropy,
            r.distill,
            r.q_loss,
            r.total_loss,
            r.episodes,
            r.faults,
            schema,
        ));
    }
    out
}

/// Parses metrics CSV text, rejecting unknown schemas and malformed rows.
pub fn parse_metrics_csv(text: &str) -> Result<Vec<IterationRow>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| HarnessError::Config("empty metrics CSV".into()))?;
    if header != HEADER.join(",") {
        let expected: Vec<&str> = HEADER.to_vec();
        let got: Vec<&str> = header.split(',').collect();
        let missing: Vec<&str> = expected
            .iter()
            .filter(|c| !got.contains(c))
            .copied()
            .collect();
        return Err(HarnessError::Config(format!(
            "metrics CSV header mismatch; missing columns: {missing:?}"
        )));
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != HEADER.len() {
            return Err(HarnessError::Config(format!(
                "metrics CSV row {idx} has {} fields, expected {}",
                fields.len(),
                HEADER.len()
            )));
        }
        if idx == 0 && fields[15] != METRICS_SCHEMA_VERSION {
            return Err(HarnessError::Config(format!(
                "unsupported metrics schema {:?}, expected {METRICS_SCHEMA_VERSION:?}",
                fields[15]
            )));
        }
        let num = |i: usize| -> Result<f64> {
            fields[i]
                .parse()
                .map_err(|_| HarnessError::Config(format!("bad value in column {}", HEADER[i])))
        };
        rows.push(IterationRow {
            iteration: num(0)? as u32,
            delta_mm: num(1)?,
            samples: num(2)? as u64,
            wall_clock_s: num(3)?,
            tau: num(4)?,
            tau_eval: if fields[5].is_empty() {
                None
            } else {
                Some(num(5)?)
            },
            alpha: num(6)?,
            surrogate: num(7)?,
            value_loss: num(8)?,
            entropy: num(9)?,
            distill: num(10)?,
            q_loss: num(11)?,
            total_loss: num(12)?,
            episodes: num(13)? as u64,
            faults: num(14)? as u64,
        });
    }
    Ok(rows)
}

/// Writes `<stem>.csv` (metrics rows) and `<stem>.json` (the full record)
/// into `dir`, returning both paths.
pub fn save_record(record: &RunRecord, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    fs::write(&csv_path, metrics_csv_string(&record.rows))?;
    let json =
        serde_json::to_string_pretty(record).map_err(|e| HarnessError::Serde(e.to_string()))?;
    fs::write(&json_path, json)?;
    Ok((csv_path, json_path))
}

pub fn load_record(json_path: &Path) -> Result<RunRecord> {
    let text = fs::read_to_string(json_path)?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Serde(e.to_string()))
}

pub fn load_metrics_csv(csv_path: &Path) -> Result<Vec<IterationRow>> {
    parse_metrics_csv(&fs::read_to_string(csv_path)?)
}
