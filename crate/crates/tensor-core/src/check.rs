//! Central finite-difference verification of backprop gradients.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::mlp::mlp_forward;
use crate::{Mlp, Result, Tape};

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub checked_parameters: usize,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_relative_error < self.tolerance
    }
}

/// Loss used for checking: mean of squared outputs over a random input batch.
fn scalar_loss(net: &Mlp, x: &[f64], rows: usize) -> f64 {
    let out = net.infer_batch(x, rows);
    out.iter().map(|v| v * v).sum::<f64>() / out.len() as f64
}

/// Compares backprop gradients against central finite differences (h = 1e-5)
/// for every parameter of `net` on a random input batch.
pub fn grad_check(net: &Mlp, tolerance: f64, rng: &mut ChaCha8Rng) -> Result<GradCheckReport> {
    let rows = 3;
    let x: Vec<f64> = (0..rows * net.input_dim())
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();

    // Analytic gradients via the tape.
    let mut tape = Tape::new();
    let (out, vars) = mlp_forward(net, &mut tape, &x, rows)?;
    let sq = tape.square(out);
    let loss = tape.mean(sq);
    tape.backward(loss)?;

    let mut probe = net.clone();
    let h = 1e-5;
    let mut max_rel = 0.0f64;
    let mut checked = 0usize;

    let layer_count = net.weights.len();
    for li in 0..layer_count {
        for which in 0..2 {
            let len = if which == 0 {
                net.weights[li].len()
            } else {
                net.biases[li].len()
            };
            let analytic = if which == 0 {
                tape.grad(vars.weights[li]).to_vec()
            } else {
                tape.grad(vars.biases[li]).to_vec()
            };
            for i in 0..len {
                let orig = if which == 0 {
                    probe.weights[li].values[i]
                } else {
                    probe.biases[li].values[i]
                };
                let set = |p: &mut Mlp, v: f64| {
                    if which == 0 {
                        p.weights[li].values[i] = v;
                    } else {
                        p.biases[li].values[i] = v;
                    }
                };
                set(&mut probe, orig + h);
                let up = scalar_loss(&probe, &x, rows);
                set(&mut probe, orig - h);
                let down = scalar_loss(&probe, &x, rows);
                set(&mut probe, orig);
                let numeric = (up - down) / (2.0 * h);
                let denom = analytic[i].abs().max(numeric.abs()).max(1e-8);
                max_rel = max_rel.max((analytic[i] - numeric).abs() / denom);
                checked += 1;
            }
        }
    }

    Ok(GradCheckReport {
        max_relative_error: max_rel,
        checked_parameters: checked,
        tolerance,
    })
}
