#![allow(dead_code)]

use aird::network::{init_network, Activation, TwoLayerNet};
use aird::numerics::{unit_sphere_sample, Mat, Rng};

pub fn unit_rows(n: usize, d: usize, rng: &mut Rng) -> Mat {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| unit_sphere_sample(d, rng).unwrap()).collect();
    Mat::from_rows(&rows).unwrap()
}

/// Random tanh instance with k ≤ 64 (even), d ≤ 16, n ≤ 32.
pub fn random_instance(seed: u64) -> (TwoLayerNet, Mat, Vec<f64>) {
    let mut rng = Rng::new(seed);
    let k = 2 * (1 + rng.below(32));
    let d = 1 + rng.below(16);
    let n = 1 + rng.below(32);
    let x = unit_rows(n, d, &mut rng);
    let net = init_network(k, d, Activation::tanh(), &mut rng).unwrap();
    let y: Vec<f64> = (0..n).map(|_| if rng.uniform() < 0.5 { -1.0 } else { 1.0 }).collect();
    (net, x, y)
}

fn fd_step(w: f64) -> f64 {
    1e-5 * w.abs().max(1.0)
}

/// Central differences of the loss with respect to every entry of `W`.
pub fn fd_gradient(net: &TwoLayerNet, x: &Mat, y: &[f64]) -> Mat {
    let (k, d) = net.w.shape();
    let mut g = Mat::zeros(k, d);
    let loss = |n: &TwoLayerNet| n.loss_and_gradient(x, y).unwrap().0;
    for m in 0..k {
        for j in 0..d {
            let h = fd_step(net.w[(m, j)]);
            let mut plus = net.clone();
            plus.w[(m, j)] += h;
            let mut minus = net.clone();
            minus.w[(m, j)] -= h;
            g[(m, j)] = (loss(&plus) - loss(&minus)) / (2.0 * h);
        }
    }
    g
}

/// Central differences of the outputs: n×(k·d), row-major over `W`.
pub fn fd_jacobian(net: &TwoLayerNet, x: &Mat) -> Mat {
    let (k, d) = net.w.shape();
    let mut j = Mat::zeros(x.rows(), k * d);
    for m in 0..k {
        for q in 0..d {
            let h = fd_step(net.w[(m, q)]);
            let mut plus = net.clone();
            plus.w[(m, q)] += h;
            let mut minus = net.clone();
            minus.w[(m, q)] -= h;
            let fp = plus.forward(x).unwrap();
            let fm = minus.forward(x).unwrap();
            for i in 0..x.rows() {
                j[(i, m * d + q)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
    }
    j
}

/// `max |a − b| / max |b|`, the error relative to the scale of the reference.
pub fn scaled_error(a: &Mat, b: &Mat) -> f64 {
    let scale = b.max_abs().max(a.max_abs());
    if scale == 0.0 {
        return 0.0;
    }
    a.sub(b).unwrap().max_abs() / scale
}
