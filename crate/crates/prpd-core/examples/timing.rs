//! Throwaway probe: wall time of each update component.

use std::time::Instant;

use prpd_core::{
    distill_loss, estimate_alpha, prpd_update_iteration, q_td_loss, transfer_policy, PrpdConfig,
    QBatch,
};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rl_core::{compute_gae, normalize_advantages, ActorCritic, Minibatch, PpoConfig, RolloutBuffer, ACTION_DIM, OBS_DIM};
use rl_core::ppo_loss;
use tensor_core::{AdamState, Tape};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut nets = ActorCritic::new(&mut rng).unwrap();
    let mut opt_rng = ChaCha8Rng::seed_from_u64(1);

    let envs = 16usize;
    let horizon = 64usize;
    let n = envs * horizon;
    let mut buffer = RolloutBuffer::with_layout(envs, horizon);
    for i in 0..n {
        buffer.obs.push([0.1; OBS_DIM].map(|v: f64| v * rng.gen_range(-1.0..1.0)));
        buffer.actions.push([0.0; ACTION_DIM].map(|_| rng.gen_range(-1.0..1.0)));
        buffer.rewards.push(rng.gen_range(-1.0..1.0));
        buffer.next_obs.push([0.1; OBS_DIM].map(|v: f64| v * rng.gen_range(-1.0..1.0)));
        buffer.log_probs.push(rng.gen_range(-3.0..0.0));
        let done = (i + 1) % horizon == 0;
        buffer.dones.push(done);
        buffer.truncateds.push(done);
    }
    compute_gae(&mut buffer, 0.99, 0.95, &nets).unwrap();
    normalize_advantages(&mut buffer);

    let teacher = {
        let mut a = AdamState::new(3e-4);
        transfer_policy(&nets, &mut [&mut a]).unwrap()
    };

    let mb: Vec<usize> = (0..256).collect();
    let m = Minibatch::gather(&buffer, &mb);
    let qb = QBatch::gather(&buffer, &mb);

    let time = |label: &str, f: &mut dyn FnMut()| {
        let t = Instant::now();
        for _ in 0..32 {
            f();
        }
        println!("{label}: {:.1} ms per call", t.elapsed().as_secs_f64() * 1000.0 / 32.0);
    };

    time("ppo_loss build", &mut || {
        let mut tape = Tape::new();
        let g = ppo_loss(&mut tape, &nets, &m, 0.2, 0.5, 0.01).unwrap();
        tape.backward(g.loss).unwrap();
    });
    time("q_td_loss build", &mut || {
        let mut tape = Tape::new();
        let g = q_td_loss(&mut tape, &nets.q, &nets.policy, &nets.log_std, &qb, 0.99, 4, &mut opt_rng).unwrap();
        tape.backward(g.loss).unwrap();
    });
    time("distill build", &mut || {
        let mut tape = Tape::new();
        let g = distill_loss(&mut tape, &nets, Some(&teacher), 0.5, &m.obs, 256, 4, &mut opt_rng)
            .unwrap()
            .unwrap();
        tape.backward(g.loss).unwrap();
    });
    time("estimate_alpha", &mut || {
        estimate_alpha(&buffer, &nets, Some(&teacher), 2.0, 4, &mut opt_rng);
    });

    let config = PrpdConfig { ppo: PpoConfig::default(), ..PrpdConfig::default() };
    let mut actor_opt = AdamState::new(3e-4);
    let mut q_opt = AdamState::new(3e-4);
    let t = Instant::now();
    prpd_update_iteration(
        &mut nets,
        Some(&teacher),
        &buffer,
        &config,
        &mut actor_opt,
        &mut q_opt,
        &mut opt_rng,
    )
    .unwrap();
    println!("full prpd iteration: {:.1} ms", t.elapsed().as_secs_f64() * 1000.0);
}
