// The exact residual recursion along a recorded self-distillation trajectory.

use std::error::Error;

use aird::dataset::{corrupt_labels, generate_clusterable, ClusterSpec, Corruption};
use aird::network::{init_network, Activation};
use aird::numerics::Rng;
use aird::selfdistill::{self_distill_train, DistillConfig, LabelFunction, ScheduleKind};
use aird::theorem::{verify_residual_recursion, DEFAULT_SIMPSON_INTERVALS};

pub fn run() -> Result<(), Box<dyn Error>> {
    let spec = ClusterSpec { clusters: 2, n: 30, d: 8, epsilon: 0.1, min_center_gap: 1.0 };
    let mut rng = Rng::new(6);
    let clean = generate_clusterable(&spec, &mut rng)?;
    let ds = corrupt_labels(&clean, &Corruption::Uniform(0.2), &mut rng)?;

    for act in [Activation::tanh(), Activation::identity()] {
        let net = init_network(256, ds.d(), act, &mut rng.fork(1))?;
        let eta = 1.0 / (2.0 * ds.n() as f64);
        let mut cfg = DistillConfig::plain(eta, 50, 10);
        cfg.schedule = ScheduleKind::Linear { start: 1.0, decrement: 0.01 };
        cfg.h = LabelFunction::Clipped { rho: 0.2 };
        cfg.record_trajectory = true;
        let out = self_distill_train(&net, &ds, &cfg, &mut rng.fork(2))?;
        let exact = verify_residual_recursion(&out.trajectory, &net, &ds.x, eta, DEFAULT_SIMPSON_INTERVALS)?;
        let wrong = verify_residual_recursion(&out.trajectory, &net, &ds.x, 2.0 * eta, DEFAULT_SIMPSON_INTERVALS)?;
        println!(
            "{:<9} max deviation {:.2e}   with doubled eta {:.2e}",
            act.kind.name(),
            exact.max_deviation,
            wrong.max_deviation
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
