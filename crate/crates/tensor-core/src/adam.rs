//! Adam optimizer over a fixed-order parameter list.

use crate::{Result, Tensor, TensorError};

#[derive(Debug, Clone)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(learning_rate: f64) -> Self {
        AdamState {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
        }
    }

    /// Drops moment buffers and the step counter, keeping hyperparameters.
    pub fn reset(&mut self) {
        self.step = 0;
        self.first_moment.clear();
        self.second_moment.clear();
    }

    /// One Adam update over `params`, consuming each tensor's `grad`.
    ///
    /// The parameter list must keep the same order and shapes across calls.
    /// Tensors without a populated gradient are treated as zero-gradient.
    pub fn step(&mut self, params: &mut [&mut Tensor]) -> Result<()> {
        if self.first_moment.is_empty() {
            self.first_moment = params.iter().map(|p| vec![0.0; p.len()]).collect();
            self.second_moment = params.iter().map(|p| vec![0.0; p.len()]).collect();
        }
        assert_eq!(self.first_moment.len(), params.len(), "parameter list changed");
        for (p, m) in params.iter().zip(&self.first_moment) {
            assert_eq!(p.len(), m.len(), "parameter shape changed");
        }
        for p in params.iter() {
            if let Some(g) = &p.grad {
                if g.iter().any(|v| !v.is_finite()) {
                    return Err(TensorError::NonFiniteGradient);
                }
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (pi, p) in params.iter_mut().enumerate() {
            let grad = match &p.grad {
                Some(g) => g.clone(),
                None => continue,
            };
            let m = &mut self.first_moment[pi];
            let v = &mut self.second_moment[pi];
            for i in 0..grad.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * grad[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p.values[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}
