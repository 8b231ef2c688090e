//! Wengert tape for reverse-mode differentiation.
//!
//! A `Tape` is built per loss computation: leaves are pushed for parameters
//! and data, composite ops record their parents, and `backward` walks the
//! node list in reverse accumulating gradients. Every node is a row-major
//! 2-D f64 buffer; scalars are `[1, 1]`.

use rayon::prelude::*;

use crate::{Result, TensorError};

/// Work threshold (multiply-adds) above which matrix kernels fan out over
/// rows. Row results are accumulated in the same element order either way,
/// so parallel and sequential execution are bit-identical.
pub(crate) const PAR_FLOPS: usize = 1 << 16;

/// Plain row-major matmul `A (m x k) * B (k x n)`, row-parallel when large.
pub(crate) fn matmul_values(av: &[f64], bv: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    let row = |i: usize, orow: &mut [f64]| {
        for kk in 0..k {
            let aik = av[i * k + kk];
            if aik == 0.0 {
                continue;
            }
            let brow = &bv[kk * n..(kk + 1) * n];
            for (o, bkj) in orow.iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
    };
    if m * k * n >= PAR_FLOPS {
        out.par_chunks_mut(n).enumerate().for_each(|(i, orow)| row(i, orow));
    } else {
        for (i, orow) in out.chunks_mut(n).enumerate() {
            row(i, orow);
        }
    }
    out
}

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(pub(crate) usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Min(Var, Var),
    /// Broadcasts the `[1, n]` right operand over the rows of the left.
    AddRow(Var, Var),
    SubRow(Var, Var),
    MulRow(Var, Var),
    Scale(Var, f64),
    /// Shift by a constant; the constant carries no gradient.
    AddScalar(Var),
    Neg(Var),
    Exp(Var),
    Ln(Var),
    Tanh(Var),
    Square(Var),
    /// Zero gradient outside `[lo, hi]`.
    Clamp(Var, f64, f64),
    Sum(Var),
    Mean(Var),
    /// `[m, n]` -> `[m, 1]` summing each row.
    RowSum(Var),
}

struct Node {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    grad: Vec<f64>,
    op: Op,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, rows: usize, cols: usize, values: Vec<f64>, op: Op) -> Var {
        debug_assert_eq!(rows * cols, values.len());
        let grad = vec![0.0; values.len()];
        self.nodes.push(Node {
            rows,
            cols,
            values,
            grad,
            op,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, rows: usize, cols: usize, values: Vec<f64>) -> Var {
        self.push(rows, cols, values, Op::Leaf)
    }

    pub fn leaf_scalar(&mut self, value: f64) -> Var {
        self.leaf(1, 1, vec![value])
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].values
    }

    pub fn grad(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].grad
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        let n = &self.nodes[v.0];
        (n.rows, n.cols)
    }

    pub fn scalar_value(&self, v: Var) -> f64 {
        self.nodes[v.0].values[0]
    }

    /// Copies current values into a fresh leaf, cutting the gradient path.
    pub fn detach(&mut self, v: Var) -> Var {
        let (r, c) = self.shape(v);
        let vals = self.nodes[v.0].values.clone();
        self.leaf(r, c, vals)
    }

    fn check_same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        let (ar, ac) = self.shape(a);
        let (br, bc) = self.shape(b);
        if (ar, ac) != (br, bc) {
            return Err(TensorError::ShapeMismatch {
                op,
                left: vec![ar, ac],
                right: vec![br, bc],
            });
        }
        Ok(())
    }

    fn check_row_shape(&self, op: &'static str, a: Var, row: Var) -> Result<()> {
        let (_, ac) = self.shape(a);
        let (rr, rc) = self.shape(row);
        if rr != 1 || rc != ac {
            return Err(TensorError::ShapeMismatch {
                op,
                left: vec![self.shape(a).0, ac],
                right: vec![rr, rc],
            });
        }
        Ok(())
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, ka) = self.shape(a);
        let (kb, n) = self.shape(b);
        if ka != kb {
            return Err(TensorError::ShapeMismatch {
                op: "matmul",
                left: vec![m, ka],
                right: vec![kb, n],
            });
        }
        let out = matmul_values(&self.nodes[a.0].values, &self.nodes[b.0].values, m, ka, n);
        Ok(self.push(m, n, out, Op::MatMul(a, b)))
    }

    fn binary(&mut self, op_name: &'static str, a: Var, b: Var, f: impl Fn(f64, f64) -> f64, op: Op) -> Result<Var> {
        self.check_same_shape(op_name, a, b)?;
        let (r, c) = self.shape(a);
        let out: Vec<f64> = self.nodes[a.0]
            .values
            .iter()
            .zip(&self.nodes[b.0].values)
            .map(|(&x, &y)| f(x, y))
            .collect();
        Ok(self.push(r, c, out, op))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    pub fn min(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("min", a, b, f64::min, Op::Min(a, b))
    }

    fn row_broadcast(&mut self, op_name: &'static str, a: Var, row: Var, f: impl Fn(f64, f64) -> f64, op: Op) -> Result<Var> {
        self.check_row_shape(op_name, a, row)?;
        let (r, c) = self.shape(a);
        let rv = self.nodes[row.0].values.clone();
        let out: Vec<f64> = self.nodes[a.0]
            .values
            .iter()
            .enumerate()
            .map(|(i, &x)| f(x, rv[i % c]))
            .collect();
        Ok(self.push(r, c, out, op))
    }

    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        self.row_broadcast("add_row", a, row, |x, y| x + y, Op::AddRow(a, row))
    }

    pub fn sub_row(&mut self, a: Var, row: Var) -> Result<Var> {
        self.row_broadcast("sub_row", a, row, |x, y| x - y, Op::SubRow(a, row))
    }

    pub fn mul_row(&mut self, a: Var, row: Var) -> Result<Var> {
        self.row_broadcast("mul_row", a, row, |x, y| x * y, Op::MulRow(a, row))
    }

    fn unary(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let (r, c) = self.shape(a);
        let out: Vec<f64> = self.nodes[a.0].values.iter().map(|&x| f(x)).collect();
        self.push(r, c, out, op)
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        self.unary(a, |x| x * s, Op::Scale(a, s))
    }

    pub fn add_scalar(&mut self, a: Var, s: f64) -> Var {
        self.unary(a, |x| x + s, Op::AddScalar(a))
    }

    pub fn neg(&mut self, a: Var) -> Var {
        self.unary(a, |x| -x, Op::Neg(a))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(a, f64::exp, Op::Exp(a))
    }

    pub fn ln(&mut self, a: Var) -> Var {
        self.unary(a, f64::ln, Op::Ln(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, f64::tanh, Op::Tanh(a))
    }

    pub fn square(&mut self, a: Var) -> Var {
        self.unary(a, |x| x * x, Op::Square(a))
    }

    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Var {
        self.unary(a, |x| x.clamp(lo, hi), Op::Clamp(a, lo, hi))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s: f64 = self.nodes[a.0].values.iter().sum();
        self.push(1, 1, vec![s], Op::Sum(a))
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let n = self.nodes[a.0].values.len() as f64;
        let s: f64 = self.nodes[a.0].values.iter().sum();
        self.push(1, 1, vec![s / n], Op::Mean(a))
    }

    pub fn row_sum(&mut self, a: Var) -> Var {
        let (r, c) = self.shape(a);
        let av = &self.nodes[a.0].values;
        let out: Vec<f64> = (0..r).map(|i| av[i * c..(i + 1) * c].iter().sum()).collect();
        self.push(r, 1, out, Op::RowSum(a))
    }

    /// Reverse pass seeding `d loss / d loss = 1`.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        let (r, c) = self.shape(loss);
        if r != 1 || c != 1 {
            return Err(TensorError::NonScalarLoss { shape: vec![r, c] });
        }
        for node in &mut self.nodes {
            node.grad.iter_mut().for_each(|g| *g = 0.0);
        }
        self.nodes[loss.0].grad[0] = 1.0;

        for idx in (0..=loss.0).rev() {
            let op = self.nodes[idx].op.clone();
            // Skip nodes with no incoming gradient.
            if self.nodes[idx].grad.iter().all(|&g| g == 0.0) {
                continue;
            }
            match op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let (m, k) = self.shape(a);
                    let (_, n) = self.shape(b);
                    let g = self.nodes[idx].grad.clone();
                    let parallel = m * k * n >= PAR_FLOPS;
                    // dA = G * B^T
                    {
                        let bv = self.nodes[b.0].values.clone();
                        let ag = &mut self.nodes[a.0].grad;
                        let row = |i: usize, arow: &mut [f64]| {
                            let grow = &g[i * n..(i + 1) * n];
                            for (kk, a) in arow.iter_mut().enumerate() {
                                let brow = &bv[kk * n..(kk + 1) * n];
                                let mut acc = 0.0;
                                for (gj, bj) in grow.iter().zip(brow) {
                                    acc += gj * bj;
                                }
                                *a += acc;
                            }
                        };
                        if parallel {
                            ag.par_chunks_mut(k).enumerate().for_each(|(i, r)| row(i, r));
                        } else {
                            for (i, r) in ag.chunks_mut(k).enumerate() {
                                row(i, r);
                            }
                        }
                    }
                    // dB = A^T * G
                    {
                        let av = self.nodes[a.0].values.clone();
                        let bg = &mut self.nodes[b.0].grad;
                        let row = |kk: usize, brow: &mut [f64]| {
                            for i in 0..m {
                                let aik = av[i * k + kk];
                                if aik == 0.0 {
                                    continue;
                                }
                                for (bj, gj) in brow.iter_mut().zip(&g[i * n..(i + 1) * n]) {
                                    *bj += aik * gj;
                                }
                            }
                        };
                        if parallel {
                            bg.par_chunks_mut(n).enumerate().for_each(|(kk, r)| row(kk, r));
                        } else {
                            for (kk, r) in bg.chunks_mut(n).enumerate() {
                                row(kk, r);
                            }
                        }
                    }
                }
                Op::Add(a, b) => {
                    let g = self.nodes[idx].grad.clone();
                    self.accumulate(a, &g, |gi, _| gi);
                    self.accumulate(b, &g, |gi, _| gi);
                }
                Op::Sub(a, b) => {
                    let g = self.nodes[idx].grad.clone();
                    self.accumulate(a, &g, |gi, _| gi);
                    self.accumulate(b, &g, |gi, _| -gi);
                }
                Op::Mul(a, b) => {
                    let g = self.nodes[idx].grad.clone();
                    let bv = self.nodes[b.0].values.clone();
                    let av = self.nodes[a.0].values.clone();
                    self.accumulate_indexed(a, |i| g[i] * bv[i]);
                    self.accumulate_indexed(b, |i| g[i] * av[i]);
                }
                Op::Min(a, b) => {
                    // Subgradient: route to the smaller operand, ties to the left.
                    let g = self.nodes[idx].grad.clone();
                    let av = self.nodes[a.0].values.clone();
                    let bv = self.nodes[b.0].values.clone();
                    self.accumulate_indexed(a, |i| if av[i] <= bv[i] { g[i] } else { 0.0 });
                    self.accumulate_indexed(b, |i| if av[i] > bv[i] { g[i] } else { 0.0 });
                }
                Op::AddRow(a, row) => {
                    let g = self.nodes[idx].grad.clone();
                    let (_, c2) = self.shape(a);
                    self.accumulate(a, &g, |gi, _| gi);
                    self.accumulate_row(row, &g, c2, |gi, _| gi);
                }
                Op::SubRow(a, row) => {
                    let g = self.nodes[idx].grad.clone();
                    let (_, c2) = self.shape(a);
                    self.accumulate(a, &g, |gi, _| gi);
                    self.accumulate_row(row, &g, c2, |gi, _| -gi);
                }
                Op::MulRow(a, row) => {
                    let g = self.nodes[idx].grad.clone();
                    let (_, c2) = self.shape(a);
                    let rv = self.nodes[row.0].values.clone();
                    let av = self.nodes[a.0].values.clone();
                    let len = g.len();
                    self.accumulate_indexed(a, |i| g[i] * rv[i % c2]);
                    self.accumulate_row_indexed(row, c2, len, |i| g[i] * av[i]);
                }
                Op::Scale(a, s) => {
                    let g = self.nodes[idx].grad.clone();
                    self.accumulate(a, &g, move |gi, _| gi * s);
                }
                Op::AddScalar(a) => {
                    let g = self.nodes[idx].grad.clone();
                    self.accumulate(a, &g, |gi, _| gi);
                }
                Op::Neg(a) => {
                    let g = self.nodes[idx].grad.clone();
                    self.accumulate(a, &g, |gi, _| -gi);
                }
                Op::Exp(a) => {
                    let g = self.nodes[idx].grad.clone();
                    let out = self.nodes[idx].values.clone();
                    self.accumulate_indexed(a, |i| g[i] * out[i]);
                }
                Op::Ln(a) => {
                    let g = self.nodes[idx].grad.clone();
                    let av = self.nodes[a.0].values.clone();
                    self.accumulate_indexed(a, |i| g[i] / av[i]);
                }
                Op::Tanh(a) => {
                    let g = self.nodes[idx].grad.clone();
                    let out = self.nodes[idx].values.clone();
                    self.accumulate_indexed(a, |i| g[i] * (1.0 - out[i] * out[i]));
                }
                Op::Square(a) => {
                    let g = self.nodes[idx].grad.clone();
                    let av = self.nodes[a.0].values.clone();
                    self.accumulate_indexed(a, |i| g[i] * 2.0 * av[i]);
                }
                Op::Clamp(a, lo, hi) => {
                    let g = self.nodes[idx].grad.clone();
                    let av = self.nodes[a.0].values.clone();
                    self.accumulate_indexed(a, |i| if av[i] >= lo && av[i] <= hi { g[i] } else { 0.0 });
                }
                Op::Sum(a) => {
                    let g = self.nodes[idx].grad[0];
                    self.accumulate_indexed(a, |_| g);
                }
                Op::Mean(a) => {
                    let n = self.nodes[a.0].values.len() as f64;
                    let g = self.nodes[idx].grad[0] / n;
                    self.accumulate_indexed(a, |_| g);
                }
                Op::RowSum(a) => {
                    let g = self.nodes[idx].grad.clone();
                    let (_, c2) = self.shape(a);
                    self.accumulate_indexed(a, |i| g[i / c2]);
                }
            }
        }
        Ok(())
    }

    fn accumulate(&mut self, target: Var, g: &[f64], f: impl Fn(f64, usize) -> f64) {
        let tg = &mut self.nodes[target.0].grad;
        for (i, gi) in g.iter().enumerate() {
            tg[i] += f(*gi, i);
        }
    }

    fn accumulate_indexed(&mut self, target: Var, f: impl Fn(usize) -> f64) {
        let tg = &mut self.nodes[target.0].grad;
        for (i, t) in tg.iter_mut().enumerate() {
            *t += f(i);
        }
    }

    fn accumulate_row(&mut self, row: Var, g: &[f64], cols: usize, f: impl Fn(f64, usize) -> f64) {
        let rg = &mut self.nodes[row.0].grad;
        for (i, gi) in g.iter().enumerate() {
            rg[i % cols] += f(*gi, i);
        }
    }

    fn accumulate_row_indexed(&mut self, row: Var, cols: usize, len: usize, f: impl Fn(usize) -> f64) {
        let rg = &mut self.nodes[row.0].grad;
        for i in 0..len {
            rg[i % cols] += f(i);
        }
    }
}
