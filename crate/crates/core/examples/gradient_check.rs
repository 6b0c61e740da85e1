// Compare the analytic loss gradient and Jacobian against central differences.

use std::error::Error;

use aird::network::{init_network, Activation};
use aird::numerics::{unit_sphere_sample, Mat, Rng};

pub fn run() -> Result<(), Box<dyn Error>> {
    let mut rng = Rng::new(3);
    let (n, d, k) = (10, 5, 16);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| unit_sphere_sample(d, &mut rng)).collect::<Result<_, _>>()?;
    let x = Mat::from_rows(&rows)?;
    let y: Vec<f64> = (0..n).map(|i| if i % 3 == 0 { -1.0 } else { 1.0 }).collect();
    let net = init_network(k, d, Activation::tanh(), &mut rng)?;

    let (loss, grad) = net.loss_and_gradient(&x, &y)?;
    let mut worst = 0.0_f64;
    for m in 0..k {
        for j in 0..d {
            let h = 1e-5 * net.w[(m, j)].abs().max(1.0);
            let mut plus = net.clone();
            plus.w[(m, j)] += h;
            let mut minus = net.clone();
            minus.w[(m, j)] -= h;
            let fd = (plus.loss_and_gradient(&x, &y)?.0 - minus.loss_and_gradient(&x, &y)?.0) / (2.0 * h);
            worst = worst.max((fd - grad[(m, j)]).abs());
        }
    }
    println!("loss {loss:.6}");
    println!("max |analytic - fd| / max |grad| = {:.2e}", worst / grad.max_abs());

    let j = net.jacobian(&x)?;
    let gap = net.gram(&x)?.sub(&j.gram_rows())?.frobenius_norm();
    println!("|| gram - J J^T ||_F = {gap:.2e}");
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
