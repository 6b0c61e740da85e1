// Wide network residuals against the closed-form kernel dynamics, mode by mode.

use std::error::Error;

use aird::network::{init_network, Activation};
use aird::ntk::linearized_modes;
use aird::numerics::{sym_eig, unit_sphere_sample, Mat, Rng};

pub fn run() -> Result<(), Box<dyn Error>> {
    let mut rng = Rng::new(11);
    let (n, d, k, steps) = (12, 6, 2048, 100);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| unit_sphere_sample(d, &mut rng)).collect::<Result<_, _>>()?;
    let x = Mat::from_rows(&rows)?;
    let y: Vec<f64> = (0..n).map(|_| if rng.uniform() < 0.5 { -1.0 } else { 1.0 }).collect();
    let mut net = init_network(k, d, Activation::tanh(), &mut rng)?;
    let eta = 1.0 / (2.0 * n as f64);

    let spec = sym_eig(&net.gram(&x)?)?;
    let residual = |f: Vec<f64>| -> Vec<f64> { f.iter().zip(&y).map(|(f, y)| f - y).collect() };
    let r0 = residual(net.forward(&x)?);
    let predicted = linearized_modes(&spec, &r0, eta, steps)?;
    for _ in 0..steps {
        let (_, g) = net.loss_and_gradient(&x, &y)?;
        net = net.stepped(&g, eta);
    }
    let actual = spec.coordinates(&residual(net.forward(&x)?))?;
    println!("mode  eigenvalue   predicted     actual");
    for i in 0..5 {
        println!(
            "{i:>4}  {:>10.4}  {:>+10.6}  {:>+10.6}",
            spec.eigenvalues[i], predicted[steps][i], actual[i]
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
