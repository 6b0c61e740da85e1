// Self-distillation with the adaptive schedule on a small noisy dataset.

use std::error::Error;

use aird::dataset::{corrupt_labels, generate_clusterable, ClusterSpec, Corruption};
use aird::network::{init_network, Activation};
use aird::numerics::Rng;
use aird::selfdistill::{
    default_eta, self_distill_train, AccuracyReference, DistillConfig, LabelFunction, ScheduleKind,
};

pub fn run() -> Result<(), Box<dyn Error>> {
    let rho = 0.3;
    let spec = ClusterSpec { clusters: 4, n: 80, d: 20, epsilon: 0.05, min_center_gap: 1.0 };
    let mut rng = Rng::new(5);
    let clean = generate_clusterable(&spec, &mut rng)?;
    let ds = corrupt_labels(&clean, &Corruption::Uniform(rho), &mut rng)?;
    let net = init_network(1024, ds.d(), Activation::tanh(), &mut rng)?;

    let mut cfg = DistillConfig::plain(default_eta(1.0, ds.n()), 4000, 500);
    cfg.schedule = ScheduleKind::Adaptive { lambda: 1.0, warmup: 500, reference: AccuracyReference::DistilledTargets };
    cfg.h = LabelFunction::Clipped { rho };
    cfg.ntk_metrics_every = Some(1000);
    let out = self_distill_train(&net, &ds, &cfg, &mut rng)?;

    println!("step    alpha  err_true  l2_true/sqrt(n)  info_gain");
    let sqrt_n = (ds.n() as f64).sqrt();
    for r in &out.log.rows {
        let gain = r.info_gain.map_or_else(String::new, |g| format!("{g:+.4}"));
        println!(
            "{:>5}  {:>6.3}  {:>8.3}  {:>15.4}  {gain}",
            r.step, r.alpha, r.zero_one_err_true, r.l2_res_true / sqrt_n
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
