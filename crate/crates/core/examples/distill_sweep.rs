// Students distilled from teachers stopped at different epochs.

use std::error::Error;

use aird::dataset::{corrupt_labels, generate_clusterable, ClusterSpec, Corruption};
use aird::network::Activation;
use aird::numerics::Rng;
use aird::selfdistill::{distill_sweep, DistillConfig, LabelFunction};

pub fn run() -> Result<(), Box<dyn Error>> {
    let rho = 0.3;
    let spec = ClusterSpec { clusters: 4, n: 80, d: 20, epsilon: 0.2, min_center_gap: 1.0 };
    let mut rng = Rng::new(2);
    let clean = generate_clusterable(&spec, &mut rng)?;
    let ds = corrupt_labels(&clean, &Corruption::Uniform(rho), &mut rng)?;

    let teacher = DistillConfig::plain(0.1, 4000, 1000);
    let mut student = DistillConfig::plain(0.1, 4000, 1000);
    student.h = LabelFunction::Clipped { rho };
    let stops = [0, 25, 50, 100, 500, 1000, 4000];
    let rows = distill_sweep(128, Activation::tanh(), &teacher, &student, &stops, &ds, &rng.fork(9))?;

    println!("stop  teacher err_true  student err_true");
    for r in rows {
        println!("{:>4}  {:>16.3}  {:>16.3}", r.stop_epoch, r.teacher_err_true, r.student_err_true);
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
