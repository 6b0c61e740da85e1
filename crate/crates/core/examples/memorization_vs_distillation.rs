// Plain gradient descent memorizes flipped labels; self-distillation does not.

use std::error::Error;

use aird::dataset::{corrupt_labels, generate_clusterable, ClusterSpec, Corruption};
use aird::network::{init_network, Activation};
use aird::numerics::Rng;
use aird::selfdistill::{
    plain_gd_train, self_distill_train, AccuracyReference, DistillConfig, LabelFunction, ScheduleKind,
};

pub fn run() -> Result<(), Box<dyn Error>> {
    let rho = 0.3;
    // a wide radius and a narrow net make memorization fast
    let spec = ClusterSpec { clusters: 4, n: 80, d: 20, epsilon: 0.2, min_center_gap: 1.0 };
    let mut rng = Rng::new(1);
    let clean = generate_clusterable(&spec, &mut rng)?;
    let ds = corrupt_labels(&clean, &Corruption::Uniform(rho), &mut rng)?;
    let net = init_network(128, ds.d(), Activation::tanh(), &mut rng)?;

    let steps = 8000;
    let plain_cfg = DistillConfig::plain(0.1, steps, 1000);
    let mut sd_cfg = plain_cfg.clone();
    sd_cfg.schedule = ScheduleKind::Adaptive { lambda: 1.0, warmup: 50, reference: AccuracyReference::DistilledTargets };
    sd_cfg.h = LabelFunction::Clipped { rho };

    let plain = plain_gd_train(&net, &ds, &plain_cfg, &mut rng.fork(0))?;
    let sd = self_distill_train(&net, &ds, &sd_cfg, &mut rng.fork(0))?;

    println!("step   plain err_obs  plain err_true   distill err_true");
    for (p, s) in plain.log.rows.iter().zip(&sd.log.rows) {
        println!(
            "{:>5}  {:>13.3}  {:>14.3}  {:>17.3}",
            p.step, p.zero_one_err_obs, p.zero_one_err_true, s.zero_one_err_true
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
