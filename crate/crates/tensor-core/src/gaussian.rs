//! Diagonal Gaussian head: state-independent learnable log-std plus a mean
//! vector, with closed-form log-density, entropy and KL.

use crate::{Result, Tape, Tensor, TensorError, Var, LOG_STD_MAX, LOG_STD_MIN};

pub const LN_2PI: f64 = 1.8378770664093453;

#[derive(Debug, Clone)]
pub struct GaussianHead {
    /// `[1, dim]` mean.
    pub mean: Tensor,
    /// `[1, dim]` log standard deviation, clamped on read.
    pub log_std: Tensor,
}

impl GaussianHead {
    pub fn new(mean: Vec<f64>, log_std: Vec<f64>) -> Result<Self> {
        if mean.len() != log_std.len() {
            return Err(TensorError::ShapeMismatch {
                op: "gaussian_head",
                left: vec![mean.len()],
                right: vec![log_std.len()],
            });
        }
        let dim = mean.len();
        Ok(GaussianHead {
            mean: Tensor::new(vec![1, dim], mean),
            log_std: Tensor::new(vec![1, dim], log_std),
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn std(&self) -> Vec<f64> {
        self.log_std
            .values
            .iter()
            .map(|&l| l.clamp(LOG_STD_MIN, LOG_STD_MAX).exp())
            .collect()
    }
}

/// Sum over dimensions of `log N(a_d; mu_d, sigma_d)`.
pub fn gaussian_log_prob(head: &GaussianHead, action: &[f64]) -> Result<f64> {
    if action.len() != head.dim() {
        return Err(TensorError::ShapeMismatch {
            op: "gaussian_log_prob",
            left: vec![head.dim()],
            right: vec![action.len()],
        });
    }
    let std = head.std();
    let mut lp = 0.0;
    for ((&a, &mu), sd) in action.iter().zip(&head.mean.values).zip(&std) {
        let z = (a - mu) / sd;
        lp += -0.5 * LN_2PI - sd.ln() - 0.5 * z * z;
    }
    Ok(lp)
}

/// Entropy of the diagonal Gaussian, `sum_d (log sigma_d + 0.5 ln(2 pi e))`.
pub fn gaussian_entropy(head: &GaussianHead) -> f64 {
    head.std().iter().map(|sd| sd.ln() + 0.5 * (LN_2PI + 1.0)).sum()
}

/// Closed-form KL(p || q) between diagonal Gaussians of equal dimension.
pub fn gaussian_kl(p: &GaussianHead, q: &GaussianHead) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(TensorError::ShapeMismatch {
            op: "gaussian_kl",
            left: vec![p.dim()],
            right: vec![q.dim()],
        });
    }
    let (sp, sq) = (p.std(), q.std());
    let mut kl = 0.0;
    for i in 0..p.dim() {
        let var_ratio = (sp[i] / sq[i]).powi(2);
        let mean_term = (p.mean.values[i] - q.mean.values[i]).powi(2) / (sq[i] * sq[i]);
        kl += 0.5 * (var_ratio + mean_term - 1.0 - var_ratio.ln());
    }
    Ok(kl)
}

/// Tape composition of the batched Gaussian log-density.
///
/// `mean` is `[m, dim]`, `log_std` is a `[1, dim]` leaf (clamped inside),
/// `actions` is `[m, dim]`; the result is `[m, 1]`, one summed log-density
/// per row, differentiable w.r.t. `mean` and `log_std`.
pub fn gaussian_log_prob_var(tape: &mut Tape, mean: Var, log_std: Var, actions: Var) -> Result<Var> {
    let (_, dim) = tape.shape(mean);
    let ls = tape.clamp(log_std, LOG_STD_MIN, LOG_STD_MAX);
    let neg_ls = tape.neg(ls);
    let inv_std = tape.exp(neg_ls);
    let diff = tape.sub(actions, mean)?;
    let z = tape.mul_row(diff, inv_std)?;
    let z2 = tape.square(z);
    let z2 = tape.scale(z2, -0.5);
    let z2 = tape.sub_row(z2, ls)?;
    let z2 = tape.add_scalar(z2, -0.5 * LN_2PI);
    let _ = dim;
    Ok(tape.row_sum(z2))
}
