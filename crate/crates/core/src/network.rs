//! Two-layer network `f(W, x) = vᵀ φ(W x)` with a fixed ±1/√k output layer.
//!
//! Jacobians are flattened row-major over `W`: column `m·d + j` of row `i`
//! holds `∂f(W, x_i)/∂W_{mj} = v_m φ′(w_mᵀ x_i) x_{ij}`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{gemm, Mat, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Tanh,
    Softplus,
    Identity,
    Relu,
}

impl ActivationKind {
    #[inline]
    pub fn value(self, x: f64) -> f64 {
        match self {
            ActivationKind::Tanh => tanh(x),
            ActivationKind::Softplus => x.max(0.0) + (-x.abs()).exp().ln_1p(),
            ActivationKind::Identity => x,
            ActivationKind::Relu => x.max(0.0),
        }
    }

    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            ActivationKind::Tanh => {
                let t = tanh(x);
                1.0 - t * t
            }
            ActivationKind::Softplus => logistic(x),
            ActivationKind::Identity => 1.0,
            ActivationKind::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    #[inline]
    pub fn second_derivative(self, x: f64) -> f64 {
        match self {
            ActivationKind::Tanh => {
                let t = tanh(x);
                -2.0 * t * (1.0 - t * t)
            }
            ActivationKind::Softplus => {
                let s = logistic(x);
                s * (1.0 - s)
            }
            ActivationKind::Identity | ActivationKind::Relu => 0.0,
        }
    }

    /// `(φ(x), φ′(x))` sharing work where possible.
    #[inline]
    pub fn value_and_derivative(self, x: f64) -> (f64, f64) {
        match self {
            ActivationKind::Tanh => {
                let t = tanh(x);
                (t, 1.0 - t * t)
            }
            _ => (self.value(x), self.derivative(x)),
        }
    }

    pub fn is_smooth(self) -> bool {
        !matches!(self, ActivationKind::Relu)
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Tanh => "tanh",
            ActivationKind::Softplus => "softplus",
            ActivationKind::Identity => "identity",
            ActivationKind::Relu => "relu",
        }
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tanh" => Ok(ActivationKind::Tanh),
            "softplus" => Ok(ActivationKind::Softplus),
            "identity" | "linear" => Ok(ActivationKind::Identity),
            "relu" => Ok(ActivationKind::Relu),
            other => Err(Error::InvalidArgument(format!("unknown activation '{other}'"))),
        }
    }
}

/// `tanh` through a single `exp`; several times faster than libm's `tanh`
/// and within a few ulps of it.
#[inline]
pub fn tanh(x: f64) -> f64 {
    let a = x.abs();
    let t = if a < 0.25 {
        let e = (-2.0 * a).exp_m1();
        -e / (2.0 + e)
    } else if a < 20.0 {
        let e = (-2.0 * a).exp();
        (1.0 - e) / (1.0 + e)
    } else if a >= 20.0 {
        1.0
    } else {
        return x;
    };
    t.copysign(x)
}

#[inline]
fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Half-width of the grid used to bound `|φ(0)|, |φ′|, |φ″|`.
pub const GAMMA_GRID_HALF_WIDTH: f64 = 10.0;
pub const GAMMA_GRID_POINTS: usize = 20_001;

/// Activation together with its bound `Γ ≥ 1` on `|φ(0)|`, `|φ′|` and `|φ″|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Activation {
    pub kind: ActivationKind,
    pub gamma: f64,
}

impl Activation {
    /// Build the activation, measuring `Γ` on a grid over `[-10, 10]`.
    ///
    /// The stored bound is `max(1, sampled max)`. ReLU gets the bound of its
    /// first derivative, but it is not smooth and is flagged as such.
    pub fn new(kind: ActivationKind) -> Self {
        Activation {
            kind,
            gamma: sampled_bound(kind).max(1.0),
        }
    }

    pub fn tanh() -> Self {
        Self::new(ActivationKind::Tanh)
    }

    pub fn identity() -> Self {
        Self::new(ActivationKind::Identity)
    }

    pub fn is_smooth(&self) -> bool {
        self.kind.is_smooth()
    }
}

/// Largest of `|φ(0)|`, `max|φ′|`, `max|φ″|` over the sampling grid.
pub fn sampled_bound(kind: ActivationKind) -> f64 {
    let mut m = kind.value(0.0).abs();
    let step = 2.0 * GAMMA_GRID_HALF_WIDTH / (GAMMA_GRID_POINTS - 1) as f64;
    for i in 0..GAMMA_GRID_POINTS {
        let x = -GAMMA_GRID_HALF_WIDTH + step * i as f64;
        m = m.max(kind.derivative(x).abs()).max(kind.second_derivative(x).abs());
    }
    m
}

/// Two-layer network with trainable `W` (k×d) and fixed output vector `v`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoLayerNet {
    pub w: Mat,
    pub v: Vec<f64>,
    pub act: Activation,
}

/// `v` with the first half `+1/√k` and the second half `-1/√k`.
pub fn output_layer(k: usize) -> Result<Vec<f64>> {
    if k < 2 || k % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "hidden width k must be even and >= 2, got {k}"
        )));
    }
    let s = 1.0 / (k as f64).sqrt();
    Ok((0..k).map(|m| if m < k / 2 { s } else { -s }).collect())
}

/// Random initialization: `W_{mj} ~ N(0, 1)` i.i.d., drawn row-major from `rng`.
pub fn init_network(k: usize, d: usize, act: Activation, rng: &mut Rng) -> Result<TwoLayerNet> {
    if d == 0 {
        return Err(Error::InvalidArgument("input dimension d must be >= 1".into()));
    }
    let v = output_layer(k)?;
    let w = Mat::from_vec(k, d, rng.normals(k * d))?;
    Ok(TwoLayerNet { w, v, act })
}

impl TwoLayerNet {
    pub fn from_weights(w: Mat, act: Activation) -> Result<Self> {
        if !w.is_finite() {
            return Err(Error::InvalidArgument("weights must be finite".into()));
        }
        let v = output_layer(w.rows())?;
        Ok(TwoLayerNet { w, v, act })
    }

    pub fn width(&self) -> usize {
        self.w.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.w.cols()
    }

    pub fn param_count(&self) -> usize {
        self.w.rows() * self.w.cols()
    }

    fn check_input(&self, op: &'static str, x: &Mat) -> Result<()> {
        if x.cols() != self.input_dim() {
            return Err(Error::dim(op, format!("{} input columns", self.input_dim()), x.cols()));
        }
        Ok(())
    }

    /// Pre-activations `X Wᵀ` (n×k).
    pub fn preactivations(&self, x: &Mat) -> Result<Mat> {
        self.check_input("preactivations", x)?;
        let (n, k, d) = (x.rows(), self.width(), self.input_dim());
        let mut z = Mat::zeros(n, k);
        gemm(
            n,
            d,
            k,
            1.0,
            (x.as_slice(), d as isize, 1),
            (self.w.as_slice(), 1, d as isize),
            0.0,
            z.as_mut_slice(),
        );
        Ok(z)
    }

    /// Outputs `f(W, x_i)` for every row.
    pub fn forward(&self, x: &Mat) -> Result<Vec<f64>> {
        let z = self.preactivations(x)?;
        let kind = self.act.kind;
        Ok((0..z.rows())
            .map(|i| {
                z.row(i)
                    .iter()
                    .zip(&self.v)
                    .map(|(&zi, &vm)| vm * kind.value(zi))
                    .sum()
            })
            .collect())
    }

    /// Outputs and the matrix `φ′(X Wᵀ)` in one pass.
    pub fn forward_with_slopes(&self, x: &Mat) -> Result<(Vec<f64>, Mat)> {
        let mut z = self.preactivations(x)?;
        let kind = self.act.kind;
        let k = self.width();
        let mut out = Vec::with_capacity(z.rows());
        for i in 0..z.rows() {
            let row = z.row_mut(i);
            let mut acc = 0.0;
            for m in 0..k {
                let (phi, dphi) = kind.value_and_derivative(row[m]);
                acc += self.v[m] * phi;
                row[m] = dphi;
            }
            out.push(acc);
        }
        Ok((out, z))
    }

    /// Slopes `φ′(X Wᵀ)` (n×k).
    pub fn slopes(&self, x: &Mat) -> Result<Mat> {
        let kind = self.act.kind;
        Ok(self.preactivations(x)?.map(|z| kind.derivative(z)))
    }

    /// Jacobian of the outputs with respect to `W`, n×(k·d), row-major over `W`.
    pub fn jacobian(&self, x: &Mat) -> Result<Mat> {
        let p = self.slopes(x)?;
        Ok(jacobian_from_slopes(&p, &self.v, x))
    }

    /// `J Jᵀ = (φ′ diag(v)² φ′ᵀ) ⊙ (X Xᵀ)` without materializing `J`.
    pub fn gram(&self, x: &Mat) -> Result<Mat> {
        let p = self.slopes(x)?;
        Ok(gram_from_slopes(&p, &self.v, x))
    }

    /// `½‖f(W,X) − y‖²` and its gradient with respect to `W`.
    pub fn loss_and_gradient(&self, x: &Mat, y: &[f64]) -> Result<(f64, Mat)> {
        if y.len() != x.rows() {
            return Err(Error::dim("loss_and_gradient", x.rows(), y.len()));
        }
        let (out, slopes) = self.forward_with_slopes(x)?;
        let residual: Vec<f64> = out.iter().zip(y).map(|(f, t)| f - t).collect();
        let loss = 0.5 * residual.iter().map(|r| r * r).sum::<f64>();
        Ok((loss, self.gradient_from_slopes(x, &slopes, &residual)))
    }

    /// `unflatten(Jᵀ r)` given the slopes at the current `W`.
    pub fn gradient_from_slopes(&self, x: &Mat, slopes: &Mat, residual: &[f64]) -> Mat {
        let (n, k, d) = (x.rows(), self.width(), self.input_dim());
        let mut g = Mat::zeros(n, k);
        for i in 0..n {
            let r = residual[i];
            let src = slopes.row(i);
            for ((gm, &pm), &vm) in g.row_mut(i).iter_mut().zip(src).zip(&self.v) {
                *gm = r * vm * pm;
            }
        }
        let mut grad = Mat::zeros(k, d);
        gemm(
            k,
            n,
            d,
            1.0,
            (g.as_slice(), 1, k as isize),
            (x.as_slice(), d as isize, 1),
            0.0,
            grad.as_mut_slice(),
        );
        grad
    }

    /// `W` shifted by `-step · direction`.
    pub fn stepped(&self, direction: &Mat, step: f64) -> TwoLayerNet {
        let mut next = self.clone();
        for (w, &g) in next.w.as_mut_slice().iter_mut().zip(direction.as_slice()) {
            *w -= step * g;
        }
        next
    }

    pub fn with_weights(&self, w: Mat) -> TwoLayerNet {
        TwoLayerNet {
            w,
            v: self.v.clone(),
            act: self.act,
        }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            k: self.width(),
            d: self.input_dim(),
            activation: self.act.kind,
            gamma: self.act.gamma,
            w: self.w.to_rows(),
        }
    }
}

pub fn jacobian_from_slopes(p: &Mat, v: &[f64], x: &Mat) -> Mat {
    let (n, k, d) = (x.rows(), p.cols(), x.cols());
    let mut j = Mat::zeros(n, k * d);
    for i in 0..n {
        let xi = x.row(i);
        let pi = p.row(i);
        let row = j.row_mut(i);
        for m in 0..k {
            let s = v[m] * pi[m];
            for (dst, &xv) in row[m * d..(m + 1) * d].iter_mut().zip(xi) {
                *dst = s * xv;
            }
        }
    }
    j
}

/// `J_a J_bᵀ = (P_a diag(v)² P_bᵀ) ⊙ (X_a X_bᵀ)` for two slope matrices sharing `v`.
pub fn cross_gram_from_slopes(pa: &Mat, xa: &Mat, pb: &Mat, xb: &Mat, v: &[f64]) -> Mat {
    let scaled = Mat::from_fn(pa.rows(), pa.cols(), |i, m| pa[(i, m)] * v[m] * v[m]);
    let left = scaled.matmul_t(pb).expect("slope widths agree");
    let inner = xa.matmul_t(xb).expect("input dims agree");
    left.hadamard(&inner).expect("same shape")
}

pub fn gram_from_slopes(p: &Mat, v: &[f64], x: &Mat) -> Mat {
    let scaled = Mat::from_fn(p.rows(), p.cols(), |i, m| p[(i, m)] * v[m].abs());
    let left = scaled.gram_rows();
    let inner = x.gram_rows();
    left.hadamard(&inner).expect("same shape")
}

/// Serialized network: `v` is rebuilt from `k`, never stored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub k: usize,
    pub d: usize,
    pub activation: ActivationKind,
    pub gamma: f64,
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
}

impl Checkpoint {
    pub fn into_net(self) -> Result<TwoLayerNet> {
        let w = Mat::from_rows(&self.w)?;
        if w.rows() != self.k || w.cols() != self.d {
            return Err(Error::dim(
                "checkpoint",
                format!("{}x{}", self.k, self.d),
                format!("{}x{}", w.rows(), w.cols()),
            ));
        }
        let act = Activation {
            kind: self.activation,
            gamma: self.gamma,
        };
        TwoLayerNet::from_weights(w, act)
    }
}

pub fn save_checkpoint(net: &TwoLayerNet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string(&net.to_checkpoint())?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<TwoLayerNet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ck: Checkpoint = serde_json::from_str(&text)?;
    ck.into_net()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{sym_eig, unit_sphere_sample};

    fn unit_rows(n: usize, d: usize, rng: &mut Rng) -> Mat {
        let rows: Vec<Vec<f64>> = (0..n).map(|_| unit_sphere_sample(d, rng).unwrap()).collect();
        Mat::from_rows(&rows).unwrap()
    }

    #[test]
    fn gamma_bounds() {
        for kind in [ActivationKind::Tanh, ActivationKind::Softplus, ActivationKind::Identity] {
            let a = Activation::new(kind);
            assert_eq!(a.gamma, 1.0, "{kind}");
            assert!(a.is_smooth());
        }
        assert!(!Activation::new(ActivationKind::Relu).is_smooth());
        // |tanh''| peaks at 4/(3√3)
        let peak = sampled_bound(ActivationKind::Tanh);
        assert_eq!(peak, 1.0);
    }

    #[test]
    fn derivatives_match_central_differences() {
        let h = 1e-5;
        for kind in [ActivationKind::Tanh, ActivationKind::Softplus, ActivationKind::Identity] {
            for i in 0..=2000 {
                let x = -10.0 + 0.01 * i as f64;
                let fd = (kind.value(x + h) - kind.value(x - h)) / (2.0 * h);
                assert!((fd - kind.derivative(x)).abs() <= 1e-6, "{kind} at {x}");
                let fd2 = (kind.derivative(x + h) - kind.derivative(x - h)) / (2.0 * h);
                assert!((fd2 - kind.second_derivative(x)).abs() <= 1e-6, "{kind}'' at {x}");
            }
        }
    }

    #[test]
    fn fast_tanh_matches_libm() {
        let mut worst = 0.0_f64;
        for i in 0..=400_000 {
            let x = -40.0 + 2e-4 * i as f64;
            worst = worst.max((tanh(x) - x.tanh()).abs());
        }
        assert!(worst <= 4.0 * f64::EPSILON, "{worst}");
        assert_eq!(tanh(0.0), 0.0);
        assert!(tanh(f64::NAN).is_nan());
        assert_eq!(tanh(-1e300), -1.0);
    }

    #[test]
    fn output_layer_values() {
        assert_eq!(output_layer(4).unwrap(), vec![0.5, 0.5, -0.5, -0.5]);
        assert!(output_layer(3).is_err());
        assert!(output_layer(0).is_err());
        let mut rng = Rng::new(1);
        let net = init_network(2, 1, Activation::tanh(), &mut rng).unwrap();
        assert_eq!(net.w.shape(), (2, 1));
        let norm: f64 = net.v.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        assert!(init_network(3, 2, Activation::tanh(), &mut rng).is_err());
    }

    #[test]
    fn forward_examples() {
        let mut rng = Rng::new(2);
        let x = unit_rows(5, 3, &mut rng);
        let lin = init_network(6, 3, Activation::identity(), &mut rng).unwrap();
        let f = lin.forward(&x).unwrap();
        let vw = lin.w.t_mat_vec(&lin.v).unwrap();
        for i in 0..5 {
            let direct: f64 = x.row(i).iter().zip(&vw).map(|(a, b)| a * b).sum();
            assert!((f[i] - direct).abs() < 1e-12);
        }

        let zero = TwoLayerNet::from_weights(Mat::zeros(4, 3), Activation::tanh()).unwrap();
        assert_eq!(zero.forward(&x).unwrap(), vec![0.0; 5]);

        let hand = TwoLayerNet::from_weights(Mat::from_rows(&[vec![1.0], vec![1.0]]).unwrap(), Activation::tanh()).unwrap();
        let out = hand.forward(&Mat::from_rows(&[vec![1.0]]).unwrap()).unwrap();
        assert_eq!(out, vec![0.0]);
        assert!(hand.forward(&Mat::zeros(1, 2)).is_err());
    }

    #[test]
    fn identity_jacobian_and_gram() {
        let mut rng = Rng::new(3);
        let x = unit_rows(4, 3, &mut rng);
        let net = init_network(4, 3, Activation::identity(), &mut rng).unwrap();
        let j = net.jacobian(&x).unwrap();
        for i in 0..4 {
            for m in 0..4 {
                for q in 0..3 {
                    assert_eq!(j[(i, m * 3 + q)], net.v[m] * x[(i, q)]);
                }
            }
        }
        let g = net.gram(&x).unwrap();
        assert!(g.sub(&x.gram_rows()).unwrap().frobenius_norm() < 1e-14);
    }

    #[test]
    fn gram_matches_explicit_jacobian() {
        let mut rng = Rng::new(4);
        let x = unit_rows(7, 5, &mut rng);
        let net = init_network(16, 5, Activation::tanh(), &mut rng).unwrap();
        let j = net.jacobian(&x).unwrap();
        let g = net.gram(&x).unwrap();
        assert!(g.sub(&j.gram_rows()).unwrap().frobenius_norm() <= 1e-10);
        assert_eq!(g.relative_asymmetry(), 0.0);
        assert!(sym_eig(&g).unwrap().min_eigenvalue() >= -1e-10);
    }

    #[test]
    fn single_point_gram_formula() {
        let mut rng = Rng::new(5);
        let x = unit_rows(1, 4, &mut rng);
        let net = init_network(10, 4, Activation::tanh(), &mut rng).unwrap();
        let z = net.preactivations(&x).unwrap();
        let expected: f64 = z.row(0).iter().map(|&zm| ActivationKind::Tanh.derivative(zm).powi(2)).sum::<f64>() / 10.0;
        let g = net.gram(&x).unwrap();
        assert!((g[(0, 0)] - expected).abs() < 1e-14);
        assert!(g[(0, 0)] <= 1.0);
    }

    #[test]
    fn zero_residual_loss() {
        let mut rng = Rng::new(6);
        let x = unit_rows(5, 3, &mut rng);
        let net = init_network(8, 3, Activation::tanh(), &mut rng).unwrap();
        let y = net.forward(&x).unwrap();
        let (loss, grad) = net.loss_and_gradient(&x, &y).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(grad.max_abs(), 0.0);
        assert!(net.loss_and_gradient(&x, &y[..3]).is_err());
    }

    #[test]
    fn single_point_identity_gradient() {
        let mut rng = Rng::new(7);
        let x = unit_rows(1, 3, &mut rng);
        let net = init_network(4, 3, Activation::identity(), &mut rng).unwrap();
        let y = [0.3];
        let (_, grad) = net.loss_and_gradient(&x, &y).unwrap();
        let f = net.forward(&x).unwrap()[0];
        for m in 0..4 {
            for q in 0..3 {
                let expected = (f - y[0]) * net.v[m] * x[(0, q)];
                assert!((grad[(m, q)] - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn forward_is_linear_in_v() {
        let mut rng = Rng::new(8);
        let x = unit_rows(6, 4, &mut rng);
        let net = init_network(8, 4, Activation::tanh(), &mut rng).unwrap();
        let f = net.forward(&x).unwrap();
        let mut scaled = net.clone();
        for v in &mut scaled.v {
            *v *= 2.5;
        }
        let g = scaled.forward(&x).unwrap();
        for (a, b) in f.iter().zip(&g) {
            assert!((2.5 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut rng = Rng::new(9);
        let net = init_network(6, 3, Activation::tanh(), &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.json");
        save_checkpoint(&net, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(!text.contains("\"v\""));
        assert_eq!(load_checkpoint(&path).unwrap(), net);
    }
}
