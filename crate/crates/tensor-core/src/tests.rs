use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::mlp::mlp_forward;
use crate::*;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ── mlp_forward ──────────────────────────────────────────────────────

#[test]
fn zero_net_outputs_zero() {
    let net = Mlp::zeros(&[3, 5, 2]).unwrap();
    let out = net.infer(&[1.0, -2.0, 3.0]);
    assert_eq!(out, vec![0.0, 0.0]);
}

#[test]
fn identity_single_layer_passes_input_through() {
    let mut net = Mlp::zeros(&[3, 3]).unwrap();
    for i in 0..3 {
        net.weights[0].values[i * 3 + i] = 1.0;
    }
    let x = [0.5, -1.25, 2.0];
    assert_eq!(net.infer(&x), x.to_vec());
}

/// Independent matrix-arithmetic oracle for a 2-8-2 net.
fn oracle_forward(net: &Mlp, x: &[f64]) -> Vec<f64> {
    let mut h: Vec<f64> = x.to_vec();
    for (li, (w, b)) in net.weights.iter().zip(&net.biases).enumerate() {
        let (rows, cols) = (w.rows(), w.cols());
        let mut out = vec![0.0; cols];
        for j in 0..cols {
            let mut acc = b.values[j];
            for k in 0..rows {
                acc += h[k] * w.values[k * cols + j];
            }
            out[j] = acc;
        }
        if li + 1 != net.weights.len() {
            out.iter_mut().for_each(|v| *v = v.tanh());
        }
        h = out;
    }
    h
}

#[test]
fn random_net_matches_matrix_oracle() {
    let mut r = rng(7);
    let net = Mlp::new(&[2, 8, 2], &mut r).unwrap();
    for _ in 0..20 {
        let x = [r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)];
        let got = net.infer(&x);
        let want = oracle_forward(&net, &x);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12, "got {g}, want {w}");
        }
    }
}

#[test]
fn forward_rejects_wrong_input_width() {
    let net = Mlp::zeros(&[3, 2]).unwrap();
    let mut tape = Tape::new();
    let err = mlp_forward(&net, &mut tape, &[1.0, 2.0], 1);
    assert!(err.is_err());
}

#[test]
fn forward_is_deterministic() {
    let mut r = rng(3);
    let net = Mlp::new(&[4, 16, 16, 3], &mut r).unwrap();
    let x: Vec<f64> = (0..4).map(|_| r.gen_range(-1.0..1.0)).collect();
    let a = net.infer(&x);
    let b = net.infer(&x);
    assert_eq!(a, b, "identical inputs must give bit-identical outputs");
}

// ── backprop ─────────────────────────────────────────────────────────

#[test]
fn linear_loss_grad_is_input() {
    // loss = sum(w * x) with x fixed -> grad(w) = x
    let mut tape = Tape::new();
    let w = tape.leaf(1, 3, vec![0.3, -0.7, 2.0]);
    let x = tape.leaf(1, 3, vec![1.5, 2.5, -4.0]);
    let prod = tape.mul(w, x).unwrap();
    let loss = tape.sum(prod);
    tape.backward(loss).unwrap();
    assert_eq!(tape.grad(w), &[1.5, 2.5, -4.0]);
}

#[test]
fn tanh_squared_grad_zero_at_origin() {
    let mut tape = Tape::new();
    let w = tape.leaf_scalar(0.0);
    let t = tape.tanh(w);
    let loss = tape.square(t);
    tape.backward(loss).unwrap();
    assert_eq!(tape.grad(w), &[0.0]);
}

#[test]
fn backward_rejects_non_scalar_loss() {
    let mut tape = Tape::new();
    let v = tape.leaf(1, 2, vec![1.0, 2.0]);
    assert!(matches!(
        tape.backward(v),
        Err(TensorError::NonScalarLoss { .. })
    ));
}

#[test]
fn non_participating_leaf_gets_zero_grad() {
    let mut tape = Tape::new();
    let used = tape.leaf_scalar(2.0);
    let unused = tape.leaf(1, 4, vec![1.0; 4]);
    let loss = tape.square(used);
    tape.backward(loss).unwrap();
    assert_eq!(tape.grad(unused), &[0.0; 4]);
}

#[test]
fn backprop_matches_finite_differences_over_random_nets() {
    let mut r = rng(11);
    for trial in 0..100 {
        let widths: Vec<usize> = vec![
            r.gen_range(1..4),
            r.gen_range(2..8),
            r.gen_range(1..4),
        ];
        let net = Mlp::new(&widths, &mut r).unwrap();
        let report = grad_check(&net, 1e-4, &mut r).unwrap();
        assert!(
            report.passed(),
            "trial {trial}: max rel err {} over {} params",
            report.max_relative_error,
            report.checked_parameters
        );
    }
}

// ── adam_step ────────────────────────────────────────────────────────

#[test]
fn adam_zero_grad_is_exact_noop() {
    let mut p = Tensor::new(vec![1, 3], vec![1.0, -2.0, 0.5]);
    p.zero_grad();
    let before = p.values.clone();
    let mut adam = AdamState::new(3e-4);
    adam.step(&mut [&mut p]).unwrap();
    assert_eq!(p.values, before);
    assert_eq!(adam.step, 1);
}

#[test]
fn adam_constant_grad_moves_against_gradient() {
    let mut p = Tensor::new(vec![1, 1], vec![0.0]);
    let mut adam = AdamState::new(0.01);
    for _ in 0..50 {
        p.zero_grad();
        p.add_grad(&[2.5]);
        adam.step(&mut [&mut p]).unwrap();
    }
    assert!(p.values[0] < 0.0, "positive grad must push parameter down");
}

#[test]
fn adam_matches_hand_stepped_trace_on_quadratic() {
    // Minimize f(x) = x^2 from x = 1; grad = 2x. Hand-rolled Adam oracle.
    let (lr, b1, b2, eps) = (0.1, 0.9, 0.999, 1e-8);
    let mut x_oracle = 1.0f64;
    let (mut m, mut v) = (0.0f64, 0.0f64);
    let mut trace = Vec::new();
    for t in 1..=3 {
        let g = 2.0 * x_oracle;
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        let m_hat = m / (1.0 - b1.powi(t));
        let v_hat = v / (1.0 - b2.powi(t));
        x_oracle -= lr * m_hat / (v_hat.sqrt() + eps);
        trace.push(x_oracle);
    }

    let mut p = Tensor::new(vec![1, 1], vec![1.0]);
    let mut adam = AdamState::new(lr);
    for step in 0..3 {
        p.zero_grad();
        let g = 2.0 * p.values[0];
        p.add_grad(&[g]);
        adam.step(&mut [&mut p]).unwrap();
        assert!(
            (p.values[0] - trace[step]).abs() < 1e-12,
            "step {step}: {} vs oracle {}",
            p.values[0],
            trace[step]
        );
    }
}

#[test]
fn adam_rejects_nan_gradient() {
    let mut p = Tensor::new(vec![1, 1], vec![0.0]);
    p.zero_grad();
    p.add_grad(&[f64::NAN]);
    let mut adam = AdamState::new(0.01);
    assert!(matches!(
        adam.step(&mut [&mut p]),
        Err(TensorError::NonFiniteGradient)
    ));
}

// ── gaussian_log_prob ────────────────────────────────────────────────

#[test]
fn standard_normal_log_prob_at_mode() {
    let head = GaussianHead::new(vec![0.0; 3], vec![0.0; 3]).unwrap();
    let lp = gaussian_log_prob(&head, &[0.0; 3]).unwrap();
    let want = 3.0 * (-0.5 * LN_2PI);
    assert!((lp - want).abs() < 1e-12);
}

#[test]
fn log_prob_one_sigma_from_mean() {
    let head = GaussianHead::new(vec![0.7, -0.2], vec![0.3, -0.5]).unwrap();
    let std = head.std();
    let a = [0.7 + std[0], -0.2 + std[1]];
    let lp = gaussian_log_prob(&head, &a).unwrap();
    let want: f64 = std.iter().map(|s| -0.5 * LN_2PI - s.ln() - 0.5).sum();
    assert!((lp - want).abs() < 1e-12);
}

#[test]
fn log_prob_matches_density_formula_oracle() {
    let mut r = rng(23);
    for _ in 0..50 {
        let dim = r.gen_range(1..5);
        let mean: Vec<f64> = (0..dim).map(|_| r.gen_range(-2.0..2.0)).collect();
        let log_std: Vec<f64> = (0..dim).map(|_| r.gen_range(-1.5..1.0)).collect();
        let action: Vec<f64> = (0..dim).map(|_| r.gen_range(-3.0..3.0)).collect();
        let head = GaussianHead::new(mean.clone(), log_std.clone()).unwrap();
        let lp = gaussian_log_prob(&head, &action).unwrap();
        let oracle: f64 = (0..dim)
            .map(|i| {
                let sd = log_std[i].exp();
                let density = (-((action[i] - mean[i]).powi(2)) / (2.0 * sd * sd)).exp()
                    / (sd * (2.0 * std::f64::consts::PI).sqrt());
                density.ln()
            })
            .sum();
        assert!((lp - oracle).abs() < 1e-10, "lp {lp} vs oracle {oracle}");
    }
}

#[test]
fn tape_log_prob_matches_plain_log_prob() {
    let mut r = rng(31);
    let mean: Vec<f64> = (0..4).map(|_| r.gen_range(-1.0..1.0)).collect();
    let log_std: Vec<f64> = (0..4).map(|_| r.gen_range(-1.0..0.5)).collect();
    let action: Vec<f64> = (0..4).map(|_| r.gen_range(-2.0..2.0)).collect();
    let head = GaussianHead::new(mean.clone(), log_std.clone()).unwrap();
    let want = gaussian_log_prob(&head, &action).unwrap();

    let mut tape = Tape::new();
    let m = tape.leaf(1, 4, mean);
    let ls = tape.leaf(1, 4, log_std);
    let a = tape.leaf(1, 4, action);
    let lp = gaussian_log_prob_var(&mut tape, m, ls, a).unwrap();
    assert!((tape.scalar_value(lp) - want).abs() < 1e-12);
}

// ── gaussian_kl ──────────────────────────────────────────────────────

#[test]
fn kl_of_identical_heads_is_zero() {
    let head = GaussianHead::new(vec![0.4, -1.0], vec![0.2, -0.3]).unwrap();
    let kl = gaussian_kl(&head, &head).unwrap();
    assert!(kl.abs() < 1e-12);
}

#[test]
fn kl_unit_mean_shift_is_half_per_dim() {
    let p = GaussianHead::new(vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
    let q = GaussianHead::new(vec![1.0, 1.0], vec![0.0, 0.0]).unwrap();
    let kl = gaussian_kl(&p, &q).unwrap();
    assert!((kl - 1.0).abs() < 1e-12, "0.5 per dim over 2 dims");
}

#[test]
fn kl_is_nonnegative_on_random_heads() {
    let mut r = rng(41);
    for _ in 0..200 {
        let dim = r.gen_range(1..5);
        let p = GaussianHead::new(
            (0..dim).map(|_| r.gen_range(-2.0..2.0)).collect(),
            (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let q = GaussianHead::new(
            (0..dim).map(|_| r.gen_range(-2.0..2.0)).collect(),
            (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        assert!(gaussian_kl(&p, &q).unwrap() >= 0.0);
    }
}

#[test]
fn kl_matches_monte_carlo_estimate() {
    let mut r = rng(43);
    for trial in 0..3 {
        let dim = 2;
        let p = GaussianHead::new(
            (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect(),
            (0..dim).map(|_| r.gen_range(-0.5..0.5)).collect(),
        )
        .unwrap();
        let q = GaussianHead::new(
            (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect(),
            (0..dim).map(|_| r.gen_range(-0.5..0.5)).collect(),
        )
        .unwrap();
        let closed = gaussian_kl(&p, &q).unwrap();

        // Monte-Carlo estimate of E_p[log p - log q] with 10^6 samples.
        let n = 1_000_000usize;
        let std_p = p.std();
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let sample: Vec<f64> = (0..dim)
                .map(|d| {
                    let u1: f64 = r.gen_range(f64::EPSILON..1.0);
                    let u2: f64 = r.gen_range(0.0..1.0);
                    let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
                    p.mean.values[d] + std_p[d] * z
                })
                .collect();
            let diff = gaussian_log_prob(&p, &sample).unwrap() - gaussian_log_prob(&q, &sample).unwrap();
            sum += diff;
            sum_sq += diff * diff;
        }
        let mc = sum / n as f64;
        let var = (sum_sq / n as f64 - mc * mc).max(0.0);
        let se = (var / n as f64).sqrt();
        assert!(
            (closed - mc).abs() <= 3.0 * se.max(1e-6),
            "trial {trial}: closed {closed} vs MC {mc} (se {se})"
        );
    }
}

// ── grad_check ───────────────────────────────────────────────────────

#[test]
fn fresh_net_passes_grad_check() {
    let mut r = rng(53);
    let net = Mlp::new(&[4, 8, 4], &mut r).unwrap();
    let report = grad_check(&net, 1e-4, &mut r).unwrap();
    assert!(report.passed(), "max rel err {}", report.max_relative_error);
}

#[test]
fn zero_net_passes_grad_check() {
    let net = Mlp::zeros(&[3, 6, 2]).unwrap();
    let mut r = rng(59);
    let report = grad_check(&net, 1e-4, &mut r).unwrap();
    assert!(report.passed());
}

#[test]
fn corrupted_gradient_path_fails_grad_check() {
    // Negative control: evaluate the finite-difference loss on a perturbed
    // copy so analytic and numeric gradients disagree.
    let mut r = rng(61);
    let net = Mlp::new(&[2, 4, 1], &mut r).unwrap();
    let mut tape = Tape::new();
    let x = vec![0.3, -0.8];
    let (out, vars) = mlp_forward(&net, &mut tape, &x, 1).unwrap();
    let sq = tape.square(out);
    let loss = tape.mean(sq);
    tape.backward(loss).unwrap();
    let analytic = tape.grad(vars.weights[0])[0];

    let mut corrupted = net.clone();
    corrupted.weights[0].values[0] += 0.5; // corrupt before numeric probe
    let h = 1e-5;
    let probe = |p: &Mlp, delta: f64| {
        let mut p = p.clone();
        p.weights[0].values[0] += delta;
        let o = p.infer(&x);
        o.iter().map(|v| v * v).sum::<f64>() / o.len() as f64
    };
    let numeric = (probe(&corrupted, h) - probe(&corrupted, -h)) / (2.0 * h);
    let denom = analytic.abs().max(numeric.abs()).max(1e-8);
    assert!(
        (analytic - numeric).abs() / denom > 1e-4,
        "corruption must be detected"
    );
}

// ── tape invariants ──────────────────────────────────────────────────

#[test]
fn clip_gradient_is_zero_outside_range() {
    let mut tape = Tape::new();
    let x = tape.leaf(1, 3, vec![0.5, 1.8, -0.4]);
    let c = tape.clamp(x, 0.8, 1.2);
    let s = tape.sum(c);
    tape.backward(s).unwrap();
    assert_eq!(tape.grad(x), &[0.0, 0.0, 0.0]);

    let mut tape = Tape::new();
    let x = tape.leaf(1, 1, vec![1.0]);
    let c = tape.clamp(x, 0.8, 1.2);
    let s = tape.sum(c);
    tape.backward(s).unwrap();
    assert_eq!(tape.grad(x), &[1.0]);
}

#[test]
fn detach_cuts_gradient_flow() {
    let mut tape = Tape::new();
    let x = tape.leaf_scalar(3.0);
    let d = tape.detach(x);
    let loss = tape.square(d);
    tape.backward(loss).unwrap();
    assert_eq!(tape.grad(x), &[0.0]);
    assert_eq!(tape.grad(d), &[6.0]);
}

#[test]
fn matmul_row_broadcast_and_rowsum_grads_match_finite_difference() {
    let mut r = rng(67);
    let a_vals: Vec<f64> = (0..6).map(|_| r.gen_range(-1.0..1.0)).collect();
    let b_vals: Vec<f64> = (0..6).map(|_| r.gen_range(-1.0..1.0)).collect();
    let row_vals: Vec<f64> = (0..2).map(|_| r.gen_range(-1.0..1.0)).collect();

    let eval = |a_vals: &[f64], b_vals: &[f64], row_vals: &[f64]| -> f64 {
        let mut tape = Tape::new();
        let a = tape.leaf(3, 2, a_vals.to_vec());
        let b = tape.leaf(2, 3, b_vals.to_vec());
        let row = tape.leaf(1, 3, vec![row_vals[0], row_vals[1], 0.25]);
        let mm = tape.matmul(a, b).unwrap();
        let shifted = tape.add_row(mm, row).unwrap();
        let scaled = tape.mul_row(shifted, row).unwrap();
        let rs = tape.row_sum(scaled);
        let m = tape.mean(rs);
        tape.scalar_value(m)
    };

    let mut tape = Tape::new();
    let a = tape.leaf(3, 2, a_vals.clone());
    let b = tape.leaf(2, 3, b_vals.clone());
    let row = tape.leaf(1, 3, vec![row_vals[0], row_vals[1], 0.25]);
    let mm = tape.matmul(a, b).unwrap();
    let shifted = tape.add_row(mm, row).unwrap();
    let scaled = tape.mul_row(shifted, row).unwrap();
    let rs = tape.row_sum(scaled);
    let m = tape.mean(rs);
    tape.backward(m).unwrap();

    let h = 1e-6;
    for i in 0..a_vals.len() {
        let mut up = a_vals.clone();
        up[i] += h;
        let mut dn = a_vals.clone();
        dn[i] -= h;
        let numeric = (eval(&up, &b_vals, &row_vals) - eval(&dn, &b_vals, &row_vals)) / (2.0 * h);
        assert!((tape.grad(a)[i] - numeric).abs() < 1e-6);
    }
    for i in 0..2 {
        let mut up = row_vals.clone();
        up[i] += h;
        let mut dn = row_vals.clone();
        dn[i] -= h;
        let numeric = (eval(&a_vals, &b_vals, &up) - eval(&a_vals, &b_vals, &dn)) / (2.0 * h);
        assert!((tape.grad(row)[i] - numeric).abs() < 1e-6);
    }
}
