//! Convergence-theorem constants, schedule checks, and numerical oracles for
//! the supporting lemmas (support subspace, average Jacobian, residual
//! recursion, Jacobian perturbation bounds).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::{dataset_stats, NoisyClusterableDataset};
use crate::error::{Error, Result};
use crate::network::{cross_gram_from_slopes, gram_from_slopes, init_network, Activation, TwoLayerNet};
use crate::ntk::lambda_pair;
use crate::numerics::{norm2, sym_eig, Mat, Rng};
use crate::selfdistill::TrajectoryPoint;

/// `λ(C)` at or below this is treated as degenerate.
pub const DEGENERATE_LAMBDA: f64 = 1e-10;
pub const DEFAULT_SIMPSON_INTERVALS: usize = 16;
pub const DEFAULT_DELTA: f64 = 0.05;

/// `T₁ = ⌈(80Γ²K / (c_low λ(C))) · ln(Γ √(32 n ln(8/δ)) / (1 − 2ρ))⌉`, at least 1.
pub fn t1_steps(
    gamma: f64,
    clusters: usize,
    c_low: f64,
    lambda_c: f64,
    n: usize,
    delta: f64,
    rho: f64,
) -> Result<usize> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")));
    }
    let prefactor = 80.0 * gamma * gamma * clusters as f64 / (c_low * lambda_c);
    let inner = gamma * (32.0 * n as f64 * (8.0 / delta).ln()).sqrt() / (1.0 - 2.0 * rho);
    let t1 = (prefactor * inner.ln()).ceil();
    if !t1.is_finite() || t1 > usize::MAX as f64 {
        return Err(Error::DegenerateGeometry(format!("T1 is not finite ({t1})")));
    }
    Ok((t1 as usize).max(1))
}

/// `c_low λ (1 − 2ρ) / (512 Γ² K)`, the bound on `2√n (α_t − α_{t+1})`.
pub fn decrement_bound(c_low: f64, lambda: f64, rho: f64, gamma: f64, clusters: usize) -> f64 {
    c_low * lambda * (1.0 - 2.0 * rho) / (512.0 * gamma * gamma * clusters as f64)
}

/// `max(1 − c_low λ(C)(1 − 2ρ)/(128Γ²K), (7/4 − 3ρ/2)/(2 − 2ρ))`.
pub fn alpha_t1_lower_bound(c_low: f64, lambda_c: f64, rho: f64, gamma: f64, clusters: usize) -> f64 {
    let a = 1.0 - c_low * lambda_c * (1.0 - 2.0 * rho) / (128.0 * gamma * gamma * clusters as f64);
    let b = (1.75 - 1.5 * rho) / (2.0 - 2.0 * rho);
    a.max(b)
}

/// `1/(24√n)`: the second phase starts once `α_t` drops below this.
pub fn t2_threshold(n: usize) -> f64 {
    1.0 / (24.0 * (n as f64).sqrt())
}

/// First `t` with `α_t < 1/(24√n)`, if the prefix reaches it.
pub fn t2_from_prefix(prefix: &[f64], n: usize) -> Option<usize> {
    let thr = t2_threshold(n);
    prefix.iter().position(|&a| a < thr)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    Pass,
    Fail,
    /// Order-of-magnitude only; never a hard verdict.
    Diagnostic,
}

impl Flag {
    fn label(self) -> &'static str {
        match self {
            Flag::Pass => "PASS",
            Flag::Fail => "FAIL",
            Flag::Diagnostic => "DIAG",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub name: String,
    pub flag: Flag,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthDiagnostic {
    pub term: String,
    /// Required width with constant 1; `None` when it depends on an unknown `T₂`.
    pub required: Option<f64>,
    /// `k / required`.
    pub ratio: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Stage1Decrement,
    Stage2Decrement,
    NonMonotone,
    OutOfRange,
    AlphaT1BelowBound,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub t: usize,
    pub kind: ViolationKind,
    /// Left-hand side minus the bound.
    pub amount: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScheduleCheck {
    pub violations: Vec<Violation>,
    pub reaches_zero: bool,
    pub t2: Option<usize>,
}

/// Constants `check_schedule` needs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleBounds {
    pub n: usize,
    pub t1: usize,
    pub stage1_bound: f64,
    pub stage2_bound: f64,
    pub alpha_t1_lower_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    #[serde(rename = "K")]
    pub clusters: usize,
    pub activation: String,
    pub gamma: f64,
    pub delta: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub c_low: f64,
    pub c_up: f64,
    pub cov_samples: usize,
    pub lambda_c: f64,
    pub lambda_x: f64,
    #[serde(rename = "Lambda")]
    pub lambda: f64,
    pub alpha_lb: f64,
    pub alpha_lb_lambda: f64,
    pub beta_ub: f64,
    pub lipschitz_l: f64,
    pub t1: usize,
    pub t2: Option<usize>,
    pub t2_threshold: f64,
    pub decrement_bound_stage1: f64,
    pub decrement_bound_stage2: f64,
    pub per_step_decrement_stage1: f64,
    pub per_step_decrement_stage2: f64,
    pub alpha_t1_lower_bound: f64,
    pub epsilon_diagnostic: Option<f64>,
    pub k_diagnostics: Vec<WidthDiagnostic>,
    pub schedule_violations: Vec<Violation>,
    pub schedule_reaches_zero: Option<bool>,
    pub hypothesis_flags: Vec<Hypothesis>,
}

impl TheoremReport {
    pub fn bounds(&self) -> ScheduleBounds {
        ScheduleBounds {
            n: self.n,
            t1: self.t1,
            stage1_bound: self.decrement_bound_stage1,
            stage2_bound: self.decrement_bound_stage2,
            alpha_t1_lower_bound: self.alpha_t1_lower_bound,
        }
    }

    /// Human-readable table with PASS/FAIL/DIAG per condition.
    pub fn render_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<28} {:>16}", "quantity", "value");
        let rows: [(&str, String); 14] = [
            ("n / d / k / K", format!("{} / {} / {} / {}", self.n, self.d, self.k, self.clusters)),
            ("gamma", self.gamma.to_string()),
            ("rho", self.rho.to_string()),
            ("c_low", format!("{:.4}", self.c_low)),
            ("lambda(C)", format!("{:.6e}", self.lambda_c)),
            ("lambda(X)", format!("{:.6e}", self.lambda_x)),
            ("Lambda", format!("{:.6e}", self.lambda)),
            ("T1", self.t1.to_string()),
            ("T2", self.t2.map_or_else(|| "not reached".into(), |t| t.to_string())),
            ("T2 threshold", format!("{:.6e}", self.t2_threshold)),
            ("stage-1 decrement bound", format!("{:.6e}", self.decrement_bound_stage1)),
            ("stage-2 decrement bound", format!("{:.6e}", self.decrement_bound_stage2)),
            ("alpha_T1 lower bound", format!("{:.6}", self.alpha_t1_lower_bound)),
            ("schedule violations", self.schedule_violations.len().to_string()),
        ];
        for (name, value) in rows {
            let _ = writeln!(s, "{name:<28} {value:>16}");
        }
        let _ = writeln!(s);
        for h in &self.hypothesis_flags {
            let _ = writeln!(s, "[{}] {:<26} {}", h.flag.label(), h.name, h.detail);
        }
        s
    }
}

/// Flag decrement, monotonicity, range and `α_{T₁}` violations in `prefix`.
pub fn check_schedule(prefix: &[f64], bounds: &ScheduleBounds) -> ScheduleCheck {
    let n = bounds.n;
    let scale = 2.0 * (n as f64).sqrt();
    let t2 = t2_from_prefix(prefix, n);
    let tol = |b: f64| b * (1.0 + 1e-9) + 1e-15;
    let mut violations = Vec::new();
    for (t, &a) in prefix.iter().enumerate() {
        if !(0.0..=1.0).contains(&a) {
            violations.push(Violation {
                t,
                kind: ViolationKind::OutOfRange,
                amount: if a > 1.0 { a - 1.0 } else { -a },
            });
        }
    }
    for (t, w) in prefix.windows(2).enumerate() {
        let drop = scale * (w[0] - w[1]);
        let (bound, kind) = match t2 {
            Some(t2) if t >= t2 => (bounds.stage2_bound, ViolationKind::Stage2Decrement),
            _ => (bounds.stage1_bound, ViolationKind::Stage1Decrement),
        };
        if drop > tol(bound) {
            violations.push(Violation {
                t,
                kind,
                amount: drop - bound,
            });
        }
        if w[1] > w[0] {
            violations.push(Violation {
                t,
                kind: ViolationKind::NonMonotone,
                amount: w[1] - w[0],
            });
        }
    }
    if let Some(&a) = prefix.get(bounds.t1) {
        if a < bounds.alpha_t1_lower_bound {
            violations.push(Violation {
                t: bounds.t1,
                kind: ViolationKind::AlphaT1BelowBound,
                amount: bounds.alpha_t1_lower_bound - a,
            });
        }
    }
    ScheduleCheck {
        violations,
        reaches_zero: prefix.last().is_some_and(|&a| a == 0.0),
        t2,
    }
}

/// Theorem constants for `dataset` and a width-`k` network.
///
/// `λ(C)` and `λ(X)` are Monte-Carlo estimates with `cov_samples` draws; the
/// achieved `c_low` of the dataset is used throughout. When a schedule
/// prefix is given, `T₂` and the schedule violations are filled in.
pub fn compute_constants(
    ds: &NoisyClusterableDataset,
    k: usize,
    act: Activation,
    delta: f64,
    cov_samples: usize,
    rng: &Rng,
    schedule_prefix: Option<&[f64]>,
) -> Result<TheoremReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")));
    }
    ds.validate()?;
    let stats = dataset_stats(ds);
    let (n, d, kc) = (ds.n(), ds.d(), ds.clusters());
    let nf = n as f64;
    let gamma = act.gamma;
    let rho = stats.max_rho;
    let pair = lambda_pair(&ds.centers, &ds.x, act.kind, cov_samples, rng)?;
    if pair.lambda_c <= DEGENERATE_LAMBDA {
        return Err(Error::DegenerateGeometry(format!(
            "lambda(C) = {:e} <= {DEGENERATE_LAMBDA:e}; theorem constants are unbounded",
            pair.lambda_c
        )));
    }
    let c_low = stats.c_low;
    let t1 = t1_steps(gamma, kc, c_low, pair.lambda_c, n, delta, rho)?;
    let b1 = decrement_bound(c_low, pair.lambda_c, rho, gamma, kc);
    let b2 = decrement_bound(c_low, pair.lambda, rho, gamma, kc);
    let lb = alpha_t1_lower_bound(c_low, pair.lambda_c, rho, gamma, kc);
    let scale = 2.0 * nf.sqrt();

    let (t2, violations, reaches_zero) = match schedule_prefix {
        Some(p) => {
            let bounds = ScheduleBounds {
                n,
                t1,
                stage1_bound: b1,
                stage2_bound: b2,
                alpha_t1_lower_bound: lb,
            };
            let check = check_schedule(p, &bounds);
            (check.t2, check.violations, Some(check.reaches_zero))
        }
        None => (None, Vec::new(), None),
    };

    let log_inv_delta = (1.0 / delta).ln();
    let one_m = 1.0 - 2.0 * rho;
    let epsilon_diagnostic =
        t2.map(|t2| ds.epsilon * (nf * d as f64).sqrt() * t2 as f64 * log_inv_delta / (one_m * one_m));
    let lam = pair.lambda;
    let kf = kc as f64;
    let width_terms: [(&str, Option<f64>); 4] = [
        ("K^3 log(1/delta) / (c_low Lambda)^3", Some(kf.powi(3) / (c_low * lam).powi(3) * log_inv_delta)),
        ("n T2 K / (c_low Lambda)", t2.map(|t2| nf * t2 as f64 * kf / (c_low * lam))),
        (
            "n^3 T2^4 log(1/delta) / (1-2rho)^2",
            t2.map(|t2| nf.powi(3) * (t2 as f64).powi(4) * log_inv_delta / (one_m * one_m)),
        ),
        ("n log(n/delta) / Lambda", Some(nf * (nf / delta).ln() / lam)),
    ];
    let k_diagnostics: Vec<WidthDiagnostic> = width_terms
        .iter()
        .map(|(term, req)| WidthDiagnostic {
            term: (*term).into(),
            required: *req,
            ratio: req.map(|r| k as f64 / r),
        })
        .collect();

    let mut flags = vec![
        Hypothesis {
            name: "activation_smooth".into(),
            flag: if act.is_smooth() { Flag::Pass } else { Flag::Fail },
            detail: format!("{} with gamma = {}", act.kind, gamma),
        },
        Hypothesis {
            name: "rho_below_half".into(),
            flag: if rho < 0.5 { Flag::Pass } else { Flag::Fail },
            detail: format!("max per-cluster rho = {rho}"),
        },
        Hypothesis {
            name: "lambda_c_positive".into(),
            flag: Flag::Pass,
            detail: format!("lambda(C) = {:.3e} from {cov_samples} samples", pair.lambda_c),
        },
        Hypothesis {
            name: "lambda_x_positive".into(),
            flag: if pair.lambda_x > DEGENERATE_LAMBDA { Flag::Pass } else { Flag::Fail },
            detail: format!("lambda(X) = {:.3e}", pair.lambda_x),
        },
    ];
    match (schedule_prefix, reaches_zero) {
        (Some(p), Some(zero)) => {
            flags.push(Hypothesis {
                name: "schedule_slow_decay".into(),
                flag: if violations.is_empty() { Flag::Pass } else { Flag::Fail },
                detail: format!("{} violations over {} steps", violations.len(), p.len()),
            });
            flags.push(Hypothesis {
                name: "schedule_decreases_to_zero".into(),
                flag: if zero { Flag::Pass } else { Flag::Fail },
                detail: format!("final alpha = {}", p.last().copied().unwrap_or(f64::NAN)),
            });
        }
        _ => flags.push(Hypothesis {
            name: "schedule_slow_decay".into(),
            flag: Flag::Diagnostic,
            detail: "no schedule supplied".into(),
        }),
    }
    flags.push(Hypothesis {
        name: "epsilon_condition".into(),
        flag: Flag::Diagnostic,
        detail: match epsilon_diagnostic {
            Some(v) => format!("eps*sqrt(nd)*T2*log(1/delta)/(1-2rho)^2 = {v:.3e} (order-of-magnitude only)"),
            None => "T2 not reached".into(),
        },
    });
    let min_ratio = k_diagnostics
        .iter()
        .filter_map(|w| w.ratio)
        .fold(f64::INFINITY, f64::min);
    flags.push(Hypothesis {
        name: "width_condition".into(),
        flag: Flag::Diagnostic,
        detail: format!("min k/term over known terms = {min_ratio:.3e} (order-of-magnitude only)"),
    });

    Ok(TheoremReport {
        n,
        d,
        k,
        clusters: kc,
        activation: act.kind.to_string(),
        gamma,
        delta,
        rho,
        epsilon: ds.epsilon,
        c_low,
        c_up: stats.c_up,
        cov_samples,
        lambda_c: pair.lambda_c,
        lambda_x: pair.lambda_x,
        lambda: pair.lambda,
        alpha_lb: (c_low * nf * pair.lambda_c / (8.0 * kf)).sqrt(),
        alpha_lb_lambda: (c_low * nf * pair.lambda / (8.0 * kf)).sqrt(),
        beta_ub: gamma * nf.sqrt(),
        lipschitz_l: gamma * nf.sqrt() / (k as f64).sqrt(),
        t1,
        t2,
        t2_threshold: t2_threshold(n),
        decrement_bound_stage1: b1,
        decrement_bound_stage2: b2,
        per_step_decrement_stage1: b1 / scale,
        per_step_decrement_stage2: b2 / scale,
        alpha_t1_lower_bound: lb,
        epsilon_diagnostic,
        k_diagnostics,
        schedule_violations: violations,
        schedule_reaches_zero: reaches_zero,
        hypothesis_flags: flags,
    })
}

fn cluster_sizes(cluster_id: &[usize], clusters: usize) -> Result<Vec<usize>> {
    let mut sizes = vec![0usize; clusters];
    for &c in cluster_id {
        if c >= clusters {
            return Err(Error::InvalidArgument(format!("cluster id {c} out of range 0..{clusters}")));
        }
        sizes[c] += 1;
    }
    if let Some(l) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::InvalidArgument(format!("cluster {l} has no members")));
    }
    Ok(sizes)
}

/// Orthogonal projection onto the span of cluster indicators: per-cluster means.
pub fn support_subspace_projection(cluster_id: &[usize], clusters: usize, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != cluster_id.len() {
        return Err(Error::dim("support_subspace_projection", cluster_id.len(), v.len()));
    }
    let sizes = cluster_sizes(cluster_id, clusters)?;
    let mut sums = vec![0.0; clusters];
    for (&c, &x) in cluster_id.iter().zip(v) {
        sums[c] += x;
    }
    Ok(cluster_id.iter().map(|&c| sums[c] / sizes[c] as f64).collect())
}

/// `Uᵀ M` for the normalized indicator basis `U` (n×K) and any `M` with n rows.
fn restrict_rows(m: &Mat, cluster_id: &[usize], sizes: &[usize]) -> Mat {
    let mut out = Mat::zeros(sizes.len(), m.cols());
    for (i, &c) in cluster_id.iter().enumerate() {
        let w = 1.0 / (sizes[c] as f64).sqrt();
        for (o, &x) in out.row_mut(c).iter_mut().zip(m.row(i)) {
            *o += w * x;
        }
    }
    out
}

/// `min_{u ∈ S₊, ‖u‖=1} ‖uᵀ J‖₂` via the K×K Gram of the restricted matrix.
pub fn sigma_min_on_subspace(j: &Mat, cluster_id: &[usize], clusters: usize) -> Result<f64> {
    if j.rows() != cluster_id.len() {
        return Err(Error::dim("sigma_min_on_subspace", cluster_id.len(), j.rows()));
    }
    let sizes = cluster_sizes(cluster_id, clusters)?;
    let b = restrict_rows(j, cluster_id, &sizes);
    Ok(sym_eig(&b.gram_rows())?.min_eigenvalue().max(0.0).sqrt())
}

/// Same quantity from the Gram `G = J Jᵀ`, using `Uᵀ G U`.
pub fn sigma_min_on_subspace_gram(g: &Mat, cluster_id: &[usize], clusters: usize) -> Result<f64> {
    if g.rows() != cluster_id.len() || !g.is_square() {
        return Err(Error::dim("sigma_min_on_subspace_gram", cluster_id.len(), g.rows()));
    }
    let sizes = cluster_sizes(cluster_id, clusters)?;
    let left = restrict_rows(g, cluster_id, &sizes);
    let mut m = restrict_rows(&left.transpose(), cluster_id, &sizes);
    m.mirror_upper();
    Ok(sym_eig(&m)?.min_eigenvalue().max(0.0).sqrt())
}

/// `σ_min(J)` for a wide `J` (rows ≤ columns) from its Gram.
pub fn sigma_min_from_gram(g: &Mat) -> Result<f64> {
    Ok(sym_eig(g)?.min_eigenvalue().max(0.0).sqrt())
}

/// `‖J(W, X)‖₂` from the Gram.
pub fn jacobian_spectral_norm(net: &TwoLayerNet, x: &Mat) -> Result<f64> {
    Ok(sym_eig(&net.gram(x)?)?.max_eigenvalue().max(0.0).sqrt())
}

fn check_pair(net1: &TwoLayerNet, net2: &TwoLayerNet) -> Result<()> {
    if net1.w.shape() != net2.w.shape() || net1.act.kind != net2.act.kind || net1.v != net2.v {
        return Err(Error::InvalidArgument("networks must share shape, output layer and activation".into()));
    }
    Ok(())
}

fn simpson_weights(intervals: usize) -> Result<Vec<f64>> {
    if intervals < 2 || intervals % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "Simpson quadrature needs an even number of intervals >= 2, got {intervals}"
        )));
    }
    let h = 1.0 / intervals as f64;
    Ok((0..=intervals)
        .map(|j| {
            let c = if j == 0 || j == intervals {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect())
}

/// `∫₀¹ φ′(X (W₂ + a(W₁ − W₂))ᵀ) da` by composite Simpson (n×k).
pub fn average_slopes(net1: &TwoLayerNet, net2: &TwoLayerNet, x: &Mat, intervals: usize) -> Result<Mat> {
    check_pair(net1, net2)?;
    let weights = simpson_weights(intervals)?;
    if net1.w == net2.w {
        return net1.slopes(x);
    }
    let diff = net1.w.sub(&net2.w)?;
    let mut acc = Mat::zeros(x.rows(), net1.width());
    for (j, &wt) in weights.iter().enumerate() {
        let a = j as f64 / intervals as f64;
        let mut w = net2.w.clone();
        for (wi, &di) in w.as_mut_slice().iter_mut().zip(diff.as_slice()) {
            *wi += a * di;
        }
        let p = net2.with_weights(w).slopes(x)?;
        for (s, &pv) in acc.as_mut_slice().iter_mut().zip(p.as_slice()) {
            *s += wt * pv;
        }
    }
    Ok(acc)
}

/// Average Jacobian `∫₀¹ J(W₂ + a(W₁ − W₂), X) da` (n×k·d).
pub fn average_jacobian(net1: &TwoLayerNet, net2: &TwoLayerNet, x: &Mat, intervals: usize) -> Result<Mat> {
    check_pair(net1, net2)?;
    simpson_weights(intervals)?;
    if net1.w == net2.w {
        return net1.jacobian(x);
    }
    let p = average_slopes(net1, net2, x, intervals)?;
    Ok(crate::network::jacobian_from_slopes(&p, &net1.v, x))
}

/// `J̄(W₁, W₂) J(W₂)ᵀ` without materializing either Jacobian.
pub fn average_gram(net1: &TwoLayerNet, net2: &TwoLayerNet, x: &Mat, intervals: usize) -> Result<Mat> {
    let pbar = average_slopes(net1, net2, x, intervals)?;
    let p = net2.slopes(x)?;
    Ok(cross_gram_from_slopes(&pbar, x, &p, x, &net1.v))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecursionCheck {
    pub max_deviation: f64,
    pub per_step: Vec<f64>,
}

/// Max over steps of `‖r_{t+1} − [(I − ηG_t) r_t + y_t − y_{t+1}]‖₂`.
pub fn verify_residual_recursion(
    trajectory: &[TrajectoryPoint],
    template: &TwoLayerNet,
    x: &Mat,
    eta: f64,
    intervals: usize,
) -> Result<RecursionCheck> {
    if trajectory.len() < 2 {
        return Err(Error::InvalidArgument("residual recursion needs at least two checkpoints".into()));
    }
    let nets: Vec<TwoLayerNet> = trajectory.iter().map(|p| template.with_weights(p.w.clone())).collect();
    let residuals: Vec<Vec<f64>> = nets
        .iter()
        .zip(trajectory)
        .map(|(net, p)| Ok(net.forward(x)?.iter().zip(&p.targets).map(|(f, y)| f - y).collect()))
        .collect::<Result<_>>()?;
    let mut per_step = Vec::with_capacity(trajectory.len() - 1);
    for t in 0..trajectory.len() - 1 {
        let g = average_gram(&nets[t + 1], &nets[t], x, intervals)?;
        let gr = g.mat_vec(&residuals[t])?;
        let (yt, yn) = (&trajectory[t].targets, &trajectory[t + 1].targets);
        let dev: Vec<f64> = (0..x.rows())
            .map(|i| residuals[t + 1][i] - (residuals[t][i] - eta * gr[i] + yt[i] - yn[i]))
            .collect();
        per_step.push(norm2(&dev));
    }
    Ok(RecursionCheck {
        max_deviation: per_step.iter().copied().fold(0.0, f64::max),
        per_step,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    /// Largest observed `LHS / RHS`.
    pub max_ratio: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub trials: usize,
    pub checks: Vec<BoundCheck>,
}

impl PerturbationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Largest eigenvalue of the Gram of `J(W_a, X_a) − J(W_b, X_b)`, as a norm.
fn difference_norm(a: &TwoLayerNet, xa: &Mat, b: &TwoLayerNet, xb: &Mat) -> Result<f64> {
    let pa = a.slopes(xa)?;
    let pb = b.slopes(xb)?;
    let v = &a.v;
    let gaa = gram_from_slopes(&pa, v, xa);
    let gbb = gram_from_slopes(&pb, v, xb);
    let gab = cross_gram_from_slopes(&pa, xa, &pb, xb, v);
    let mut dd = gaa.sub(&gab)?.sub(&gab.transpose())?.add(&gbb)?;
    dd.mirror_upper();
    Ok(sym_eig(&dd)?.max_eigenvalue().max(0.0).sqrt())
}

/// Sample random parameter pairs and check the Jacobian bounds one-sidedly.
///
/// Pairs are `W ~ N(0,1)` and `W̃ = W + s·Z` with `s` log-uniform in
/// `[1e-3, 1]` (per-trial streams `rng.fork(trial)`). `X̃` holds the cluster
/// center of each row. Every LHS is multiplied by `lhs_inflation` before the
/// comparison, which lets a negative control force a failure.
pub fn verify_perturbation_bounds(
    ds: &NoisyClusterableDataset,
    k: usize,
    act: Activation,
    trials: usize,
    rng: &Rng,
    lhs_inflation: f64,
) -> Result<PerturbationReport> {
    let x = &ds.x;
    let xt = ds.center_per_row();
    let n = ds.n() as f64;
    let g = act.gamma;
    let eps = ds.epsilon;
    let names = [
        "lipschitz_data (J(W,X) - J(W~,X))",
        "lipschitz_centers (J(W,X~) - J(W~,X~))",
        "spectral_norm (J(W,X))",
        "perturbation (J(W,X) - J(W~,X~))",
        "range_in_support (J(W,X~) off S+)",
    ];
    let mut worst = [0.0_f64; 5];
    let sizes = cluster_sizes(&ds.cluster_id, ds.clusters())?;
    for trial in 0..trials {
        let mut r = rng.fork(trial as u64);
        let net = init_network(k, ds.d(), act, &mut r)?;
        let scale = 10f64.powf(-3.0 * r.uniform());
        let mut w2 = net.w.clone();
        for w in w2.as_mut_slice() {
            *w += scale * r.normal();
        }
        let tilde = net.with_weights(w2);
        let dw = net.w.sub(&tilde.w)?.frobenius_norm();
        let lip = g * n.sqrt() / (k as f64).sqrt();

        let ratio = |lhs: f64, rhs: f64| {
            let lhs = lhs * lhs_inflation;
            if rhs > 0.0 {
                lhs / rhs
            } else if lhs > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        };
        let l1 = difference_norm(&net, x, &tilde, x)?;
        worst[0] = worst[0].max(ratio(l1, lip * dw));
        let l2 = difference_norm(&net, &xt, &tilde, &xt)?;
        worst[1] = worst[1].max(ratio(l2, lip * dw));
        let jn = jacobian_spectral_norm(&net, x)?;
        worst[2] = worst[2].max(ratio(jn, g * n.sqrt()));
        let l4 = difference_norm(&net, x, &tilde, &xt)?;
        let rhs4 = lip * (dw + tilde.w.spectral_norm()? * eps + (k as f64).sqrt() * eps);
        worst[3] = worst[3].max(ratio(l4, rhs4));
        // J(W, X~) has identical rows within a cluster, so (I - P) J = 0.
        let jt = net.jacobian(&xt)?;
        let back = restrict_rows(&jt, &ds.cluster_id, &sizes);
        let mut off = 0.0_f64;
        for (i, &c) in ds.cluster_id.iter().enumerate() {
            let w = 1.0 / (sizes[c] as f64).sqrt();
            for (a, b) in jt.row(i).iter().zip(back.row(c)) {
                off = off.max((a - w * b).abs());
            }
        }
        worst[4] = worst[4].max(ratio(off, 1e-12 * jt.max_abs().max(1.0)));
    }
    Ok(PerturbationReport {
        trials,
        checks: names
            .iter()
            .zip(worst)
            .map(|(name, r)| BoundCheck {
                name: (*name).into(),
                max_ratio: r,
                pass: r <= 1.0,
            })
            .collect(),
    })
}
