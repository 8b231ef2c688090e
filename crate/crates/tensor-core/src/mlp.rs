//! Fully connected network with tanh hidden activations and identity output.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::tape::PAR_FLOPS;
use crate::{Result, Tape, Tensor, TensorError, Var};

#[derive(Debug, Clone)]
pub struct Mlp {
    pub widths: Vec<usize>,
    /// Per layer, `[in, out]` row-major.
    pub weights: Vec<Tensor>,
    /// Per layer, `[1, out]`.
    pub biases: Vec<Tensor>,
}

/// Leaf handles for one forward pass, used to read gradients back.
pub struct MlpVars {
    pub weights: Vec<Var>,
    pub biases: Vec<Var>,
}

impl Mlp {
    /// Xavier-uniform initialized network. `widths` lists layer sizes
    /// including input and output, so it must have at least two entries.
    pub fn new(widths: &[usize], rng: &mut ChaCha8Rng) -> Result<Self> {
        if widths.len() < 2 || widths.iter().any(|&w| w == 0) {
            return Err(TensorError::InvalidLayout(format!(
                "layer widths must be >= 2 positive entries, got {widths:?}"
            )));
        }
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for pair in widths.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let values = (0..fan_in * fan_out)
                .map(|_| rng.gen_range(-bound..bound))
                .collect();
            weights.push(Tensor::new(vec![fan_in, fan_out], values));
            biases.push(Tensor::zeros(vec![1, fan_out]));
        }
        Ok(Mlp {
            widths: widths.to_vec(),
            weights,
            biases,
        })
    }

    /// All-zero network with the same layout rules as [`Mlp::new`].
    pub fn zeros(widths: &[usize]) -> Result<Self> {
        let mut rng = rand_chacha::rand_core::SeedableRng::seed_from_u64(0);
        let mut net = Mlp::new(widths, &mut rng)?;
        for w in &mut net.weights {
            w.values.iter_mut().for_each(|v| *v = 0.0);
        }
        Ok(net)
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(Tensor::len).sum::<usize>()
            + self.biases.iter().map(Tensor::len).sum::<usize>()
    }

    /// Graph-free batched forward pass. `x` is row-major `[rows, input_dim]`.
    /// Rows are independent, so the large-batch parallel path is
    /// bit-identical to the sequential one.
    pub fn infer_batch(&self, x: &[f64], rows: usize) -> Vec<f64> {
        assert_eq!(x.len(), rows * self.input_dim());
        let last = self.weights.len() - 1;
        let mut cur = x.to_vec();
        let mut cur_cols = self.input_dim();
        for (li, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let out_cols = w.cols();
            let mut next = vec![0.0; rows * out_cols];
            let row = |i: usize, orow: &mut [f64]| {
                let xrow = &cur[i * cur_cols..(i + 1) * cur_cols];
                orow.copy_from_slice(&b.values);
                for (k, &xk) in xrow.iter().enumerate() {
                    if xk == 0.0 {
                        continue;
                    }
                    let wrow = &w.values[k * out_cols..(k + 1) * out_cols];
                    for (o, wk) in orow.iter_mut().zip(wrow) {
                        *o += xk * wk;
                    }
                }
                if li != last {
                    orow.iter_mut().for_each(|v| *v = v.tanh());
                }
            };
            if rows * cur_cols * out_cols >= PAR_FLOPS {
                next.par_chunks_mut(out_cols)
                    .enumerate()
                    .for_each(|(i, r)| row(i, r));
            } else {
                for (i, r) in next.chunks_mut(out_cols).enumerate() {
                    row(i, r);
                }
            }
            cur = next;
            cur_cols = out_cols;
        }
        cur
    }

    pub fn infer(&self, x: &[f64]) -> Vec<f64> {
        self.infer_batch(x, 1)
    }

    /// Pushes parameter leaves onto `tape` for a differentiable pass.
    pub fn push_vars(&self, tape: &mut Tape) -> MlpVars {
        let weights = self
            .weights
            .iter()
            .map(|w| tape.leaf(w.rows(), w.cols(), w.values.clone()))
            .collect();
        let biases = self
            .biases
            .iter()
            .map(|b| tape.leaf(1, b.cols(), b.values.clone()))
            .collect();
        MlpVars { weights, biases }
    }

    /// Recorded forward pass; `x` must already be on the tape with
    /// `input_dim` columns.
    pub fn forward(&self, tape: &mut Tape, vars: &MlpVars, x: Var) -> Result<Var> {
        let (_, cols) = tape.shape(x);
        if cols != self.input_dim() {
            return Err(TensorError::ShapeMismatch {
                op: "mlp_forward",
                left: vec![tape.shape(x).0, cols],
                right: vec![self.input_dim()],
            });
        }
        let last = vars.weights.len() - 1;
        let mut h = x;
        for li in 0..vars.weights.len() {
            let z = tape.matmul(h, vars.weights[li])?;
            let z = tape.add_row(z, vars.biases[li])?;
            h = if li == last { z } else { tape.tanh(z) };
        }
        Ok(h)
    }

    /// Accumulates tape gradients into the network's `grad` buffers.
    pub fn read_grads(&mut self, tape: &Tape, vars: &MlpVars) {
        for (w, v) in self.weights.iter_mut().zip(&vars.weights) {
            w.add_grad(tape.grad(*v));
        }
        for (b, v) in self.biases.iter_mut().zip(&vars.biases) {
            b.add_grad(tape.grad(*v));
        }
    }

    pub fn zero_grads(&mut self) {
        for t in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            t.zero_grad();
        }
    }

    pub fn params(&self) -> impl Iterator<Item = &Tensor> {
        self.weights.iter().chain(self.biases.iter())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut Tensor> {
        self.weights.iter_mut().chain(self.biases.iter_mut())
    }
}

/// Convenience wrapper matching the operation-level contract: one recorded
/// forward pass over a fresh leaf input.
pub fn mlp_forward(net: &Mlp, tape: &mut Tape, x: &[f64], rows: usize) -> Result<(Var, MlpVars)> {
    if x.len() != rows * net.input_dim() {
        return Err(TensorError::ShapeMismatch {
            op: "mlp_forward",
            left: vec![rows, x.len() / rows.max(1)],
            right: vec![rows, net.input_dim()],
        });
    }
    let input = tape.leaf(rows, net.input_dim(), x.to_vec());
    let vars = net.push_vars(tape);
    let out = net.forward(tape, &vars, input)?;
    Ok((out, vars))
}
