//! Coarse-to-fine resolution ladder and its advance rule.

use serde::{Deserialize, Serialize};

use crate::{PrpdError, Result};

/// Ladder parameters: start at `initial_mm`, step down by `interval_mm`
/// whenever the evaluated success rate reaches `target_tau`, stop at
/// `final_mm`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct ResolutionSchedule {
    pub initial_mm: f64,
    pub final_mm: f64,
    pub interval_mm: f64,
    pub target_tau: f64,
}

impl Default for ResolutionSchedule {
    fn default() -> Self {
        ResolutionSchedule {
            initial_mm: 70.0,
            final_mm: 10.0,
            interval_mm: 10.0,
            target_tau: 0.95,
        }
    }
}

const DIV_TOL: f64 = 1e-9;

impl ResolutionSchedule {
    pub fn new(initial_mm: f64, final_mm: f64, interval_mm: f64, target_tau: f64) -> Result<Self> {
        let s = ResolutionSchedule {
            initial_mm,
            final_mm,
            interval_mm,
            target_tau,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.initial_mm < self.final_mm || self.final_mm <= 0.0 {
            return Err(PrpdError::Config(format!(
                "ladder must run downward from {} to a positive {}",
                self.initial_mm, self.final_mm
            )));
        }
        if !(self.target_tau > 0.0 && self.target_tau <= 1.0) {
            return Err(PrpdError::Config(format!(
                "target success rate {} not in (0,1]",
                self.target_tau
            )));
        }
        if self.initial_mm > self.final_mm {
            if self.interval_mm <= 0.0 {
                return Err(PrpdError::Config(
                    "interval must be positive on a multi-rung ladder".into(),
                ));
            }
            let span = self.initial_mm - self.final_mm;
            let steps = span / self.interval_mm;
            if (steps - steps.round()).abs() > DIV_TOL {
                return Err(PrpdError::Config(format!(
                    "span {span} mm is not divisible by interval {} mm",
                    self.interval_mm
                )));
            }
        }
        Ok(())
    }

    /// The full rung sequence, coarse to fine.
    pub fn ladder(&self) -> Vec<f64> {
        let mut rungs = Vec::new();
        let mut d = self.initial_mm;
        while d > self.final_mm + DIV_TOL {
            rungs.push(d);
            d -= self.interval_mm;
        }
        rungs.push(self.final_mm);
        rungs
    }

    pub fn rung_count(&self) -> usize {
        self.ladder().len()
    }
}

/// Outcome of one scheduling decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleStep {
    /// Move to this finer resolution and start a distillation phase.
    Advance(f64),
    Unchanged,
    /// Final rung converged; training is done.
    Finished,
}

/// Advance rule: step down one rung when `tau >= target`, finish when
/// already at the final rung.
pub fn schedule_resolution(
    current_mm: f64,
    tau: f64,
    schedule: &ResolutionSchedule,
) -> Result<ScheduleStep> {
    schedule.validate()?;
    if !(0.0..=1.0).contains(&tau) {
        return Err(PrpdError::Config(format!("success rate {tau} not in [0,1]")));
    }
    if current_mm < schedule.final_mm - DIV_TOL {
        return Err(PrpdError::ScheduleCorruption(format!(
            "current resolution {current_mm} mm is below the final rung {} mm",
            schedule.final_mm
        )));
    }
    if !schedule
        .ladder()
        .iter()
        .any(|&r| (r - current_mm).abs() <= DIV_TOL)
    {
        return Err(PrpdError::ScheduleCorruption(format!(
            "current resolution {current_mm} mm is not on the ladder"
        )));
    }
    if tau < schedule.target_tau {
        return Ok(ScheduleStep::Unchanged);
    }
    if (current_mm - schedule.final_mm).abs() <= DIV_TOL {
        return Ok(ScheduleStep::Finished);
    }
    Ok(ScheduleStep::Advance(current_mm - schedule.interval_mm))
}
