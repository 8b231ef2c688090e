//! Mixture-rate estimation: how much the frozen teacher still outperforms
//! the student according to the auxiliary Q function.

use rand_chacha::ChaCha8Rng;
use rl_core::{standard_normal, ActorCritic, RolloutBuffer, ACTION_DIM, OBS_DIM};

use crate::teacher::TeacherSnapshot;

/// Core estimator over an arbitrary Q function:
/// `clip(alpha0 * E_s[E_{a~teacher}Q(s,a) - E_{a~student}Q(s,a)], 0, 1)`.
///
/// Inner expectations use `samples` common-random-number draws: teacher and
/// student actions share the same standard-normal noise, so identical
/// heads yield a difference of exactly zero.
pub fn estimate_alpha_with<Q>(
    q_fn: Q,
    obs: &[[f64; OBS_DIM]],
    student: &ActorCritic,
    teacher: Option<&TeacherSnapshot>,
    alpha0: f64,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> f64
where
    Q: Fn(&[f64; OBS_DIM], &[f64; ACTION_DIM]) -> f64,
{
    let teacher = match teacher {
        Some(t) => t,
        None => return 0.0,
    };
    if obs.is_empty() || samples == 0 {
        return 0.0;
    }
    let n = obs.len();
    let obs_flat: Vec<f64> = obs.iter().flatten().copied().collect();
    let student_means = student.policy.infer_batch(&obs_flat, n);
    let teacher_means = teacher.mean_batch(&obs_flat, n);
    let student_std = student.std();
    let teacher_std = teacher.std();

    let mut gap_sum = 0.0;
    for (i, s) in obs.iter().enumerate() {
        for _ in 0..samples {
            let mut a_student = [0.0; ACTION_DIM];
            let mut a_teacher = [0.0; ACTION_DIM];
            for d in 0..ACTION_DIM {
                let eps = standard_normal(rng);
                a_student[d] = student_means[i * ACTION_DIM + d] + student_std[d] * eps;
                a_teacher[d] = teacher_means[i * ACTION_DIM + d] + teacher_std[d] * eps;
            }
            gap_sum += q_fn(s, &a_teacher) - q_fn(s, &a_student);
        }
    }
    let gap = gap_sum / (n * samples) as f64;
    (alpha0 * gap).clamp(0.0, 1.0)
}

/// Estimator over the learner's own Q network and rollout states. Same
/// draw and accumulation order as [`estimate_alpha_with`] over
/// `nets.q.infer`, but with the Q evaluations batched into two passes.
pub fn estimate_alpha(
    buffer: &RolloutBuffer,
    nets: &ActorCritic,
    teacher: Option<&TeacherSnapshot>,
    alpha0: f64,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let teacher = match teacher {
        Some(t) => t,
        None => return 0.0,
    };
    if buffer.obs.is_empty() || samples == 0 {
        return 0.0;
    }
    let n = buffer.obs.len();
    let obs_flat: Vec<f64> = buffer.obs.iter().flatten().copied().collect();
    let student_means = nets.policy.infer_batch(&obs_flat, n);
    let teacher_means = teacher.mean_batch(&obs_flat, n);
    let student_std = nets.std();
    let teacher_std = teacher.std();

    let rows = n * samples;
    let mut student_in = Vec::with_capacity(rows * (OBS_DIM + ACTION_DIM));
    let mut teacher_in = Vec::with_capacity(rows * (OBS_DIM + ACTION_DIM));
    for (i, s) in buffer.obs.iter().enumerate() {
        for _ in 0..samples {
            student_in.extend_from_slice(s);
            teacher_in.extend_from_slice(s);
            for d in 0..ACTION_DIM {
                let eps = standard_normal(rng);
                student_in.push(student_means[i * ACTION_DIM + d] + student_std[d] * eps);
                teacher_in.push(teacher_means[i * ACTION_DIM + d] + teacher_std[d] * eps);
            }
        }
    }
    let student_q = nets.q.infer_batch(&student_in, rows);
    let teacher_q = nets.q.infer_batch(&teacher_in, rows);
    let mut gap_sum = 0.0;
    for (tq, sq) in teacher_q.iter().zip(&student_q) {
        gap_sum += tq - sq;
    }
    let gap = gap_sum / rows as f64;
    (alpha0 * gap).clamp(0.0, 1.0)
}
