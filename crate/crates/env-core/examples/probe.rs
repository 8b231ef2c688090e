//! Throwaway probe: random-policy success statistics.

use env_core::{Action, EnvConfig, ExcavationEnv, Resolution};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let delta = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(70.0);
    let episodes = 2000;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut successes = 0u32;
    let mut catches = 0u32;
    for ep in 0..episodes {
        let cfg = EnvConfig::new(Resolution::new(delta).unwrap(), 64, true, ep as u64).unwrap();
        let mut env = ExcavationEnv::new(cfg);
        env.reset().unwrap();
        let mut caught = false;
        for _ in 0..64 {
            let a = Action::from_normalized(&[
                rng.gen_range(-1.0f64..1.0),
                rng.gen_range(-1.0f64..1.0),
                rng.gen_range(-1.0f64..1.0),
                rng.gen_range(-1.0f64..1.0),
            ]);
            let r = env.step(&a).unwrap();
            caught |= env.state().map_or(false, |s| s.rock.held);
            if r.done {
                if r.success {
                    successes += 1;
                }
                break;
            }
        }
        if caught {
            catches += 1;
        }
    }
    println!(
        "delta={delta} catch_rate={} success_rate={}",
        catches as f64 / episodes as f64,
        successes as f64 / episodes as f64
    );
}
