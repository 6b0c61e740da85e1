mod common;

use aird::network::{init_network, Activation, ActivationKind, TwoLayerNet};
use aird::ntk::lambda_min;
use aird::numerics::{sym_eig, Mat, Rng};
use aird::theorem::{jacobian_spectral_norm, sigma_min_from_gram};
use common::{fd_gradient, fd_jacobian, random_instance, scaled_error, unit_rows};
use proptest::prelude::*;

#[test]
fn gradient_matches_finite_differences() {
    for seed in 0..10 {
        let (net, x, y) = random_instance(seed);
        let (_, grad) = net.loss_and_gradient(&x, &y).unwrap();
        let err = scaled_error(&grad, &fd_gradient(&net, &x, &y));
        assert!(err <= 1e-5, "seed {seed}: {err}");
    }
}

#[test]
fn jacobian_matches_finite_differences() {
    for seed in 20..26 {
        let (net, x, _) = random_instance(seed);
        let err = scaled_error(&net.jacobian(&x).unwrap(), &fd_jacobian(&net, &x));
        assert!(err <= 1e-5, "seed {seed}: {err}");
    }
}

#[test]
fn softplus_gradient_matches_finite_differences() {
    let (net, x, y) = random_instance(40);
    let net = TwoLayerNet { act: Activation::new(ActivationKind::Softplus), ..net };
    let (_, grad) = net.loss_and_gradient(&x, &y).unwrap();
    assert!(scaled_error(&grad, &fd_gradient(&net, &x, &y)) <= 1e-5);
}

fn difference_norm(a: &TwoLayerNet, b: &TwoLayerNet, x: &Mat) -> f64 {
    let d = a.jacobian(x).unwrap().sub(&b.jacobian(x).unwrap()).unwrap();
    sym_eig(&d.gram_rows()).unwrap().max_eigenvalue().max(0.0).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gram_is_jacobian_outer_product(seed in any::<u64>()) {
        let (net, x, _) = random_instance(seed);
        let j = net.jacobian(&x).unwrap();
        let g = net.gram(&x).unwrap();
        prop_assert!(g.sub(&j.gram_rows()).unwrap().frobenius_norm() <= 1e-10);
    }

    #[test]
    fn spectral_norm_bound(seed in any::<u64>()) {
        let (net, x, _) = random_instance(seed);
        let bound = net.act.gamma * (x.rows() as f64).sqrt();
        prop_assert!(jacobian_spectral_norm(&net, &x).unwrap() <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn jacobian_is_lipschitz_in_w(seed in any::<u64>(), scale in 1e-3f64..1.0) {
        let (net, x, _) = random_instance(seed);
        let mut rng = Rng::new(seed ^ 0xABCD);
        let w2 = Mat::from_fn(net.w.rows(), net.w.cols(), |m, j| net.w[(m, j)] + scale * rng.normal());
        let other = net.with_weights(w2);
        let k = net.width() as f64;
        let rhs = net.act.gamma * (x.rows() as f64).sqrt() / k.sqrt()
            * net.w.sub(&other.w).unwrap().frobenius_norm();
        prop_assert!(difference_norm(&net, &other, &x) <= rhs * (1.0 + 1e-9));
    }
}

#[test]
fn initialization_singular_value_bound() {
    let mut rng = Rng::new(77);
    let (n, d) = (8, 10);
    let x = unit_rows(n, d, &mut rng);
    let lam = lambda_min(&x, ActivationKind::Tanh, 20_000, &Rng::new(5)).unwrap();
    assert!(lam > 0.0);
    let k = (20.0 * n as f64 * (n as f64 / 0.05).ln() / lam).ceil() as usize;
    let k = k + k % 2;
    let mut hits = 0;
    for seed in 0..20 {
        let net = init_network(k, d, Activation::tanh(), &mut Rng::new(1000 + seed)).unwrap();
        let s = sigma_min_from_gram(&net.gram(&x).unwrap()).unwrap();
        if s >= (lam / 2.0).sqrt() {
            hits += 1;
        }
    }
    assert!(hits >= 19, "{hits}/20 seeds met the bound at k = {k}");
}

#[test]
fn row_evaluation_order_is_fixed() {
    let (net, x, _) = random_instance(3);
    let full = net.forward(&x).unwrap();
    for i in 0..x.rows() {
        let single = net.forward(&x.select_rows(&[i])).unwrap();
        assert_eq!(single[0].to_bits(), full[i].to_bits());
    }
}
