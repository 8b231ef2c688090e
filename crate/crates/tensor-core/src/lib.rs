//! Minimal dense-tensor and reverse-mode differentiation substrate.
//!
//! Everything here exists to support small tanh MLPs with Gaussian policy
//! heads trained by Adam: a flat `Tensor`, a per-loss `Tape` of recorded
//! operations, and closed-form diagonal-Gaussian helpers. All arithmetic is
//! f64 end to end so gradient checks can use tight tolerances.

mod adam;
mod check;
mod error;
mod gaussian;
mod mlp;
mod tape;
mod tensor;

pub use adam::AdamState;
pub use check::{grad_check, GradCheckReport};
pub use error::TensorError;
pub use gaussian::{
    gaussian_entropy, gaussian_kl, gaussian_log_prob, gaussian_log_prob_var, GaussianHead, LN_2PI,
};
pub use mlp::{mlp_forward, Mlp, MlpVars};
pub use tape::{Tape, Var};
pub use tensor::Tensor;

/// Learnable log standard deviations are clamped to this range before
/// exponentiation, keeping std strictly positive and bounded.
pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

pub type Result<T> = std::result::Result<T, TensorError>;

#[cfg(test)]
mod tests;
