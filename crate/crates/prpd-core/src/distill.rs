//! Conservative distillation: KL from the student to the student/teacher
//! mixture, estimated with reparameterized student samples.

use rand_chacha::ChaCha8Rng;
use rl_core::{standard_normal, ActorCritic, ACTION_DIM, OBS_DIM};
use tensor_core::{
    gaussian_log_prob_var, MlpVars, Tape, Var, LN_2PI, LOG_STD_MAX, LOG_STD_MIN,
};

use crate::teacher::TeacherSnapshot;
use crate::Result;

/// Pointwise mixture density `(1-alpha) N(a; mu_s, sigma_s) + alpha N(a;
/// mu_t, sigma_t)` for diagonal Gaussians of any dimension.
pub fn mixture_density(
    student_mean: &[f64],
    student_std: &[f64],
    teacher_mean: &[f64],
    teacher_std: &[f64],
    alpha: f64,
    action: &[f64],
) -> f64 {
    let gauss = |mean: &[f64], std: &[f64]| {
        let mut lp = 0.0;
        for d in 0..action.len() {
            let z = (action[d] - mean[d]) / std[d];
            lp += -0.5 * LN_2PI - std[d].ln() - 0.5 * z * z;
        }
        lp.exp()
    };
    (1.0 - alpha) * gauss(student_mean, student_std) + alpha * gauss(teacher_mean, teacher_std)
}

/// Graph handles for one distillation term.
pub struct DistillGraph {
    pub loss: Var,
    pub policy_vars: MlpVars,
    pub log_std_var: Var,
    pub value: f64,
}

/// Builds `E_s E_{a~student}[log student(a|s) - log mixture(a|s)]` on the
/// tape, with `samples` reparameterized draws per state. The teacher enters
/// as constant leaves, so its parameters never move; its density still
/// shapes the student gradient through the mixture.
///
/// `alpha = 0` (or no teacher) short-circuits to `None`: the KL of a
/// distribution with itself is identically zero.
pub fn distill_loss(
    tape: &mut Tape,
    nets: &ActorCritic,
    teacher: Option<&TeacherSnapshot>,
    alpha: f64,
    obs: &[f64],
    rows: usize,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Option<DistillGraph>> {
    let teacher = match teacher {
        Some(t) if alpha > 0.0 => t,
        _ => return Ok(None),
    };
    debug_assert_eq!(obs.len(), rows * OBS_DIM);

    // Stack each state `samples` times so one forward pass serves every
    // draw.
    let total = rows * samples;
    let mut stacked = Vec::with_capacity(total * OBS_DIM);
    for row in obs.chunks(OBS_DIM) {
        for _ in 0..samples {
            stacked.extend_from_slice(row);
        }
    }
    let x = tape.leaf(total, OBS_DIM, stacked.clone());
    let policy_vars = nets.policy.push_vars(tape);
    let mean = nets.policy.forward(tape, &policy_vars, x)?;
    let log_std_var = tape.leaf(1, ACTION_DIM, nets.log_std.values.clone());

    // a = mu + sigma * eps, differentiable through both mu and sigma.
    let eps: Vec<f64> = (0..total * ACTION_DIM)
        .map(|_| standard_normal(rng))
        .collect();
    let eps_var = tape.leaf(total, ACTION_DIM, eps);
    let ls = tape.clamp(log_std_var, LOG_STD_MIN, LOG_STD_MAX);
    let std = tape.exp(ls);
    let noise = tape.mul_row(eps_var, std)?;
    let actions = tape.add(mean, noise)?;

    let lp_student = gaussian_log_prob_var(tape, mean, log_std_var, actions)?;

    // Teacher branch: the frozen mean is computed graph-free and enters as
    // a constant leaf, so the teacher density is differentiable in
    // `actions` only and the backward pass never walks teacher weights.
    let teacher_mean = tape.leaf(total, ACTION_DIM, teacher.mean_batch(&stacked, total));
    let teacher_ls = tape.leaf(1, ACTION_DIM, teacher.log_std().values.clone());
    let lp_teacher = gaussian_log_prob_var(tape, teacher_mean, teacher_ls, actions)?;

    // log mixture via log-sum-exp with a detached per-row pivot.
    let neg_s = tape.neg(lp_student);
    let neg_t = tape.neg(lp_teacher);
    let neg_max = tape.min(neg_s, neg_t)?;
    let max = tape.neg(neg_max);
    let pivot = tape.detach(max);
    let ds = tape.sub(lp_student, pivot)?;
    let dt = tape.sub(lp_teacher, pivot)?;
    let es = tape.exp(ds);
    let et = tape.exp(dt);
    let ws = tape.scale(es, 1.0 - alpha);
    let wt = tape.scale(et, alpha);
    let mix_rel = tape.add(ws, wt)?;
    let log_rel = tape.ln(mix_rel);
    let lp_mixture = tape.add(log_rel, pivot)?;

    let diff = tape.sub(lp_student, lp_mixture)?;
    let loss = tape.mean(diff);
    Ok(Some(DistillGraph {
        loss,
        policy_vars,
        log_std_var,
        value: tape.scalar_value(loss),
    }))
}
