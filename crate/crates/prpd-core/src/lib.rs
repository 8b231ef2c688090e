//! Progressive-resolution policy distillation: a resolution scheduler,
//! conservative student/teacher mixture updates with a Q-estimated mixture
//! rate, and the combined training objective.

mod alpha;
mod distill;
mod error;
mod qloss;
mod schedule;
mod teacher;
mod update;

pub use alpha::{estimate_alpha, estimate_alpha_with};
pub use distill::{distill_loss, mixture_density, DistillGraph};
pub use error::PrpdError;
pub use qloss::{q_td_loss, QBatch, QLossGraph};
pub use schedule::{schedule_resolution, ResolutionSchedule, ScheduleStep};
pub use teacher::{transfer_policy, TeacherSnapshot};
pub use update::{
    prpd_update_iteration, total_loss_grads, DistillWeights, PrpdConfig, PrpdStats, TotalLoss,
};

pub type Result<T> = std::result::Result<T, PrpdError>;

#[cfg(test)]
mod tests;
