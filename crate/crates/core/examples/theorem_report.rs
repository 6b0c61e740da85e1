// Theorem constants for a dataset, a schedule built from them, and its audit.

use std::error::Error;

use aird::dataset::{corrupt_labels, generate_clusterable, ClusterSpec, Corruption};
use aird::network::Activation;
use aird::numerics::Rng;
use aird::selfdistill::{make_theoretical_schedule, AlphaSchedule};
use aird::theorem::{check_schedule, compute_constants};

pub fn run() -> Result<(), Box<dyn Error>> {
    let spec = ClusterSpec { clusters: 4, n: 60, d: 20, epsilon: 0.05, min_center_gap: 1.0 };
    let mut rng = Rng::new(4);
    let clean = generate_clusterable(&spec, &mut rng)?;
    let ds = corrupt_labels(&clean, &Corruption::Uniform(0.2), &mut rng)?;
    let act = Activation::tanh();

    let report = compute_constants(&ds, 4096, act, 0.05, 5000, &rng.fork(1), None)?;
    let schedule = make_theoretical_schedule(&ds, act.gamma, report.lambda_c, report.lambda, report.rho, 0.05, 1.0)?;
    println!("{}", report.render_table());

    let prefix = AlphaSchedule::prefix(&schedule.kind, schedule.t1 + 200_000)?;
    let check = check_schedule(&prefix, &report.bounds());
    println!("alpha after {} steps: {:.6}", prefix.len() - 1, prefix[prefix.len() - 1]);
    println!("violations: {}", check.violations.len());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
