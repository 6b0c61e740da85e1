//! Self-distillation training: targets `ŷ_t = α_t y + (1 − α_t) h(f(W_t, X))`
//! refreshed every step, plus the plain gradient-descent baseline.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::NoisyClusterableDataset;
use crate::error::{Error, Result};
use crate::network::{gram_from_slopes, init_network, Activation, TwoLayerNet};
use crate::ntk::{spectrum_ratio, RatioNorm, DEFAULT_TOP_M};
use crate::numerics::{norm2, sign, sym_eig, Mat, Rng};
use crate::theorem;

/// Loss above which a run is treated as diverged.
pub const DIVERGENCE_LOSS: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LabelFunction {
    /// Linear with slope `4/(1−2ρ)` on `|x| ≤ (1−2ρ)/4`, `sgn x` beyond.
    Clipped { rho: f64 },
    Sign,
    Identity,
}

impl LabelFunction {
    pub fn validate(&self) -> Result<()> {
        if let LabelFunction::Clipped { rho } = *self {
            if !(0.0..0.5).contains(&rho) {
                return Err(Error::Assumption(format!(
                    "clipped label function needs 0 <= rho < 1/2, got {rho}"
                )));
            }
        }
        Ok(())
    }
}

#[inline]
pub fn apply_label_function(h: LabelFunction, x: f64) -> f64 {
    match h {
        LabelFunction::Clipped { rho } => {
            let width = 1.0 - 2.0 * rho;
            if x.abs() <= width / 4.0 {
                4.0 * x / width
            } else {
                sign(x)
            }
        }
        LabelFunction::Sign => sign(x),
        LabelFunction::Identity => x,
    }
}

/// `η = 1/(2Γ²n)`.
pub fn default_eta(gamma: f64, n: usize) -> f64 {
    1.0 / (2.0 * gamma * gamma * n as f64)
}

/// What the adaptive rule measures accuracy against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccuracyReference {
    /// Sign agreement of `f(W_t, X)` with the observed labels.
    #[default]
    ObservedLabels,
    /// Sign agreement of `f(W_t, X)` with the previous step's targets.
    DistilledTargets,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ScheduleKind {
    Constant {
        alpha: f64,
    },
    Linear {
        #[serde(default = "one")]
        start: f64,
        decrement: f64,
    },
    /// `α_t = 1` for `t ≤ hold`, then linear decay with `stage1` per step while
    /// `α ≥ threshold` and `stage2` per step afterwards.
    Theoretical {
        hold: usize,
        stage1: f64,
        stage2: f64,
        threshold: f64,
    },
    /// `α_t = clamp(1 − λ·accuracy, 0, 1)` after `warmup` steps at `α = 1`.
    Adaptive {
        lambda: f64,
        #[serde(default)]
        warmup: usize,
        #[serde(default)]
        reference: AccuracyReference,
    },
}

fn one() -> f64 {
    1.0
}

impl ScheduleKind {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        match *self {
            ScheduleKind::Constant { alpha } if !(0.0..=1.0).contains(&alpha) => {
                bad(format!("constant alpha {alpha} outside [0, 1]"))
            }
            ScheduleKind::Linear { start, decrement }
                if !(0.0..=1.0).contains(&start) || !(decrement >= 0.0) || !decrement.is_finite() =>
            {
                bad(format!("linear schedule needs start in [0,1] and decrement >= 0, got {start}, {decrement}"))
            }
            ScheduleKind::Theoretical { stage1, stage2, .. } if !(stage1 >= 0.0 && stage2 >= 0.0) => {
                bad("theoretical decrements must be >= 0".into())
            }
            ScheduleKind::Adaptive { lambda, .. } if !(lambda >= 0.0) || !lambda.is_finite() => {
                bad(format!("adaptive lambda must be >= 0, got {lambda}"))
            }
            _ => Ok(()),
        }
    }

    pub fn needs_accuracy(&self) -> bool {
        matches!(self, ScheduleKind::Adaptive { .. })
    }
}

/// Stateful emitter of `α_0, α_1, …`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaSchedule {
    pub kind: ScheduleKind,
    /// Skip the running-min clamp on the adaptive rule.
    pub exploratory: bool,
    alpha: f64,
    t: usize,
}

impl AlphaSchedule {
    pub fn new(kind: ScheduleKind) -> Result<Self> {
        kind.validate()?;
        Ok(AlphaSchedule {
            kind,
            exploratory: false,
            alpha: 1.0,
            t: 0,
        })
    }

    pub fn exploratory(mut self, on: bool) -> Self {
        self.exploratory = on;
        self
    }

    pub fn current(&self) -> f64 {
        self.alpha
    }

    /// `α_t`. Steps must be requested in order starting at 0.
    pub fn next_alpha(&mut self, t: usize, batch_accuracy: Option<f64>) -> Result<f64> {
        if t != self.t {
            return Err(Error::InvalidArgument(format!(
                "schedule expected step {}, got {t}",
                self.t
            )));
        }
        let prev = self.alpha;
        let alpha = match self.kind {
            ScheduleKind::Constant { alpha } => alpha,
            ScheduleKind::Linear { start, decrement } => (start - decrement * t as f64).clamp(0.0, 1.0),
            ScheduleKind::Theoretical {
                hold,
                stage1,
                stage2,
                threshold,
            } => {
                if t <= hold {
                    1.0
                } else {
                    let dec = if prev >= threshold { stage1 } else { stage2 };
                    (prev - dec).max(0.0)
                }
            }
            ScheduleKind::Adaptive { lambda, warmup, .. } => {
                let acc = batch_accuracy.ok_or_else(|| {
                    Error::InvalidArgument("adaptive schedule needs a batch accuracy".into())
                })?;
                if !(0.0..=1.0).contains(&acc) {
                    return Err(Error::InvalidArgument(format!("accuracy {acc} outside [0, 1]")));
                }
                if t < warmup {
                    1.0
                } else {
                    let raw = (1.0 - lambda * acc).clamp(0.0, 1.0);
                    if self.exploratory || t == 0 {
                        raw
                    } else {
                        raw.min(prev)
                    }
                }
            }
        };
        self.alpha = alpha;
        self.t += 1;
        Ok(alpha)
    }

    /// First `len` values for schedules that need no accuracy signal.
    pub fn prefix(kind: &ScheduleKind, len: usize) -> Result<Vec<f64>> {
        let mut s = AlphaSchedule::new(kind.clone())?;
        (0..len).map(|t| s.next_alpha(t, None)).collect()
    }
}

/// Theorem-aligned schedule together with the constants it was built from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoreticalSchedule {
    pub kind: ScheduleKind,
    pub t1: usize,
    pub stage1_bound: f64,
    pub stage2_bound: f64,
    pub alpha_t1_lower_bound: f64,
    pub threshold: f64,
    pub safety: f64,
}

/// Hold `α = 1` through `T₁`, then decay at `bound/(2√n·safety)` per step,
/// switching to the `Λ` bound once `α < 1/(24√n)`.
pub fn make_theoretical_schedule(
    ds: &NoisyClusterableDataset,
    gamma: f64,
    lambda_c: f64,
    lambda: f64,
    rho: f64,
    delta: f64,
    safety: f64,
) -> Result<TheoreticalSchedule> {
    let stats = crate::dataset::dataset_stats(ds);
    theoretical_schedule_from_constants(
        ds.n(),
        ds.clusters(),
        stats.c_low,
        gamma,
        lambda_c,
        lambda,
        rho,
        delta,
        safety,
    )
}

#[allow(clippy::too_many_arguments)]
pub fn theoretical_schedule_from_constants(
    n: usize,
    clusters: usize,
    c_low: f64,
    gamma: f64,
    lambda_c: f64,
    lambda: f64,
    rho: f64,
    delta: f64,
    safety: f64,
) -> Result<TheoreticalSchedule> {
    if !(0.0..0.5).contains(&rho) {
        return Err(Error::Assumption(format!("rho must satisfy 0 <= rho < 1/2, got {rho}")));
    }
    if !(lambda_c > 0.0) || !(lambda > 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "lambda(C) = {lambda_c}, Lambda = {lambda} must be positive"
        )));
    }
    if !(safety >= 1.0) {
        return Err(Error::InvalidArgument(format!("safety factor must be >= 1, got {safety}")));
    }
    let t1 = theorem::t1_steps(gamma, clusters, c_low, lambda_c, n, delta, rho)?;
    let stage1_bound = theorem::decrement_bound(c_low, lambda_c, rho, gamma, clusters);
    let stage2_bound = theorem::decrement_bound(c_low, lambda, rho, gamma, clusters);
    let lb = theorem::alpha_t1_lower_bound(c_low, lambda_c, rho, gamma, clusters);
    if !(lb < 1.0) {
        return Err(Error::InfeasibleSchedule(format!(
            "alpha_T1 lower bound {lb} >= 1 (c_low = {c_low}, lambda(C) = {lambda_c}, rho = {rho}, gamma = {gamma}, K = {clusters})"
        )));
    }
    let scale = 2.0 * (n as f64).sqrt() * safety;
    let threshold = theorem::t2_threshold(n);
    Ok(TheoreticalSchedule {
        kind: ScheduleKind::Theoretical {
            hold: t1,
            stage1: stage1_bound / scale,
            stage2: stage2_bound / scale,
            threshold,
        },
        t1,
        stage1_bound,
        stage2_bound,
        alpha_t1_lower_bound: lb,
        threshold,
        safety,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BatchMode {
    #[default]
    Full,
    /// Fixed batches from one shuffle, visited cyclically.
    Minibatch { size: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistillConfig {
    pub eta: f64,
    pub steps: usize,
    pub schedule: ScheduleKind,
    pub h: LabelFunction,
    pub log_every: usize,
    #[serde(default)]
    pub ntk_metrics_every: Option<usize>,
    #[serde(default = "default_top_m")]
    pub top_m: usize,
    #[serde(default)]
    pub batch: BatchMode,
    #[serde(default)]
    pub exploratory: bool,
    #[serde(default)]
    pub record_trajectory: bool,
}

fn default_top_m() -> usize {
    DEFAULT_TOP_M
}

impl DistillConfig {
    pub fn plain(eta: f64, steps: usize, log_every: usize) -> Self {
        DistillConfig {
            eta,
            steps,
            schedule: ScheduleKind::Constant { alpha: 1.0 },
            h: LabelFunction::Identity,
            log_every,
            ntk_metrics_every: None,
            top_m: DEFAULT_TOP_M,
            batch: BatchMode::Full,
            exploratory: false,
            record_trajectory: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::InvalidArgument(format!("eta must be positive, got {}", self.eta)));
        }
        if self.log_every == 0 {
            return Err(Error::InvalidArgument("log_every must be >= 1".into()));
        }
        if self.ntk_metrics_every == Some(0) {
            return Err(Error::InvalidArgument("ntk_metrics_every must be >= 1".into()));
        }
        if self.top_m == 0 {
            return Err(Error::InvalidArgument("top_m must be >= 1".into()));
        }
        if let BatchMode::Minibatch { size: 0 } = self.batch {
            return Err(Error::InvalidArgument("minibatch size must be >= 1".into()));
        }
        self.schedule.validate()?;
        self.h.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub step: usize,
    pub alpha: f64,
    pub l2_res_obs: f64,
    pub l2_res_true: f64,
    pub zero_one_err_true: f64,
    pub margin_true: f64,
    pub top_m_ratio: Option<f64>,
    pub info_gain: Option<f64>,
    /// Not part of the CSV.
    pub zero_one_err_obs: f64,
}

pub const METRICS_HEADER: &str =
    "step,alpha,l2_res_obs,l2_res_true,zero_one_err_true,margin_true,top_m_ratio,info_gain";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsLog {
    pub rows: Vec<MetricsRow>,
}

impl MetricsLog {
    pub fn last(&self) -> Option<&MetricsRow> {
        self.rows.last()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(METRICS_HEADER);
        out.push('\n');
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.step,
                r.alpha,
                r.l2_res_obs,
                r.l2_res_true,
                r.zero_one_err_true,
                r.margin_true,
                opt(r.top_m_ratio),
                opt(r.info_gain)
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// `(W_t, ŷ_t)` at one step.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryPoint {
    pub w: Mat,
    pub targets: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub net: TwoLayerNet,
    pub log: MetricsLog,
    /// `steps + 1` points when `record_trajectory` is set.
    pub trajectory: Vec<TrajectoryPoint>,
}

enum Targets<'a> {
    Fixed(&'a [f64]),
    Distilled(&'a [f64]),
}

fn check_data(net: &TwoLayerNet, x: &Mat, n: usize) -> Result<()> {
    if x.cols() != net.input_dim() {
        return Err(Error::dim("train", format!("{} input columns", net.input_dim()), x.cols()));
    }
    if x.rows() != n {
        return Err(Error::dim("train", x.rows(), n));
    }
    Ok(())
}

/// Algorithm-1 training with the configured schedule and label function.
pub fn self_distill_train(
    net: &TwoLayerNet,
    ds: &NoisyClusterableDataset,
    config: &DistillConfig,
    rng: &mut Rng,
) -> Result<TrainOutcome> {
    run(net, &ds.x, Targets::Distilled(&ds.y_obs), &ds.y_true, config, rng)
}

/// Gradient descent on `y_obs` alone. Only `eta`, `steps`, logging, batching
/// and trajectory settings of `config` are used.
pub fn plain_gd_train(
    net: &TwoLayerNet,
    ds: &NoisyClusterableDataset,
    config: &DistillConfig,
    rng: &mut Rng,
) -> Result<TrainOutcome> {
    run(net, &ds.x, Targets::Fixed(&ds.y_obs), &ds.y_true, config, rng)
}

/// Plain gradient descent on arbitrary real targets.
pub fn regress(
    net: &TwoLayerNet,
    x: &Mat,
    targets: &[f64],
    y_true: &[f64],
    config: &DistillConfig,
    rng: &mut Rng,
) -> Result<TrainOutcome> {
    run(net, x, Targets::Fixed(targets), y_true, config, rng)
}

fn run(
    net: &TwoLayerNet,
    x: &Mat,
    labels: Targets<'_>,
    y_true: &[f64],
    config: &DistillConfig,
    rng: &mut Rng,
) -> Result<TrainOutcome> {
    config.validate()?;
    let n = y_true.len();
    check_data(net, x, n)?;
    let (y_obs, distill) = match labels {
        Targets::Fixed(y) => (y, false),
        Targets::Distilled(y) => (y, true),
    };
    if y_obs.len() != n {
        return Err(Error::dim("train", n, y_obs.len()));
    }
    if distill && matches!(config.h, LabelFunction::Identity) && config.schedule.needs_accuracy() {
        log::warn!("adaptive schedule with identity label function");
    }

    let batches: Vec<Vec<usize>> = match config.batch {
        BatchMode::Full => vec![(0..n).collect()],
        BatchMode::Minibatch { size } => {
            let mut order: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut order);
            order.chunks(size.min(n.max(1))).map(|c| c.to_vec()).collect()
        }
    };
    let full = matches!(config.batch, BatchMode::Full);

    let mut schedule = AlphaSchedule::new(config.schedule.clone())?.exploratory(config.exploratory);
    let mut net = net.clone();
    let mut log = MetricsLog::default();
    let mut trajectory = Vec::new();
    let mut targets = y_obs.to_vec();
    let mut prev_targets: Option<Vec<f64>> = None;
    let mut residual = vec![0.0; n];
    let steps = config.steps;

    for t in 0..=steps {
        let (out, slopes) = net.forward_with_slopes(x)?;
        let batch = &batches[t % batches.len()];

        let alpha = if distill {
            let acc = if config.schedule.needs_accuracy() {
                let reference = match (&config.schedule, &prev_targets) {
                    (
                        ScheduleKind::Adaptive {
                            reference: AccuracyReference::DistilledTargets,
                            ..
                        },
                        Some(prev),
                    ) => prev.as_slice(),
                    _ => y_obs,
                };
                Some(sign_agreement(&out, reference, batch))
            } else {
                None
            };
            let alpha = schedule.next_alpha(t, acc)?;
            for i in 0..n {
                targets[i] = alpha * y_obs[i] + (1.0 - alpha) * apply_label_function(config.h, out[i]);
            }
            alpha
        } else {
            1.0
        };

        let logged = (t < steps && t % config.log_every == 0) || (t == steps && steps >= 1);
        if logged {
            if !out.iter().all(|f| f.is_finite()) {
                return Err(Error::Diverged {
                    step: t,
                    loss: f64::NAN,
                });
            }
            let mut row = metrics_row(t, alpha, &out, y_obs, y_true);
            let ntk_due = config
                .ntk_metrics_every
                .is_some_and(|every| t % every == 0 || t == steps);
            if ntk_due {
                let h = gram_from_slopes(&slopes, &net.v, x);
                let spec = sym_eig(&h)?;
                let m = config.top_m.min(n);
                let r_target = spectrum_ratio(&spec, &targets, m, RatioNorm::L2)?;
                let r_obs = spectrum_ratio(&spec, y_obs, m, RatioNorm::L2)?;
                row.top_m_ratio = Some(r_target);
                row.info_gain = Some(r_target - r_obs);
            }
            log.rows.push(row);
        }
        if config.record_trajectory {
            trajectory.push(TrajectoryPoint {
                w: net.w.clone(),
                targets: targets.clone(),
            });
        }
        if t == steps {
            break;
        }

        let mut loss = 0.0;
        if full {
            for i in 0..n {
                residual[i] = out[i] - targets[i];
                loss += residual[i] * residual[i];
            }
        } else {
            residual.iter_mut().for_each(|r| *r = 0.0);
            for &i in batch {
                residual[i] = out[i] - targets[i];
                loss += residual[i] * residual[i];
            }
        }
        loss *= 0.5;
        if !loss.is_finite() || loss > DIVERGENCE_LOSS {
            return Err(Error::Diverged { step: t, loss });
        }
        let grad = net.gradient_from_slopes(x, &slopes, &residual);
        for (w, g) in net.w.as_mut_slice().iter_mut().zip(grad.as_slice()) {
            *w -= config.eta * g;
        }
        if distill {
            prev_targets = Some(targets.clone());
        }
    }

    Ok(TrainOutcome {
        net,
        log,
        trajectory,
    })
}

fn sign_agreement(out: &[f64], reference: &[f64], batch: &[usize]) -> f64 {
    let hits = batch.iter().filter(|&&i| sign(out[i]) == sign(reference[i])).count();
    hits as f64 / batch.len() as f64
}

/// Fraction of `out` whose sign disagrees with `labels`.
pub fn zero_one_error(out: &[f64], labels: &[f64]) -> f64 {
    let wrong = out.iter().zip(labels).filter(|(f, y)| sign(**f) != sign(**y)).count();
    wrong as f64 / out.len().max(1) as f64
}

/// `minᵢ f(xᵢ)·yᵢ`.
pub fn margin(out: &[f64], labels: &[f64]) -> f64 {
    out.iter().zip(labels).map(|(f, y)| f * y).fold(f64::INFINITY, f64::min)
}

fn metrics_row(t: usize, alpha: f64, out: &[f64], y_obs: &[f64], y_true: &[f64]) -> MetricsRow {
    let res_obs: Vec<f64> = out.iter().zip(y_obs).map(|(f, y)| f - y).collect();
    let res_true: Vec<f64> = out.iter().zip(y_true).map(|(f, y)| f - y).collect();
    MetricsRow {
        step: t,
        alpha,
        l2_res_obs: norm2(&res_obs),
        l2_res_true: norm2(&res_true),
        zero_one_err_true: zero_one_error(out, y_true),
        margin_true: margin(out, y_true),
        top_m_ratio: None,
        info_gain: None,
        zero_one_err_obs: zero_one_error(out, y_obs),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub stop_epoch: usize,
    pub teacher_err_true: f64,
    pub student_err_true: f64,
}

/// Early-stopped teachers distilled into fresh students.
///
/// The teacher (init from `rng.fork(0)`) is trained incrementally with plain
/// gradient descent and snapshotted at each stop epoch. Every student starts
/// from the same init (`rng.fork(1)`) and regresses onto
/// `student_cfg.h(f_teacher(X))` for `student_cfg.steps` steps. Rows follow
/// the order of `stop_epochs`.
pub fn distill_sweep(
    k: usize,
    act: Activation,
    teacher_cfg: &DistillConfig,
    student_cfg: &DistillConfig,
    stop_epochs: &[usize],
    ds: &NoisyClusterableDataset,
    rng: &Rng,
) -> Result<Vec<SweepRow>> {
    teacher_cfg.validate()?;
    student_cfg.validate()?;
    let teacher0 = init_network(k, ds.d(), act, &mut rng.fork(0))?;
    let student0 = init_network(k, ds.d(), act, &mut rng.fork(1))?;

    let mut order: Vec<usize> = stop_epochs.to_vec();
    order.sort_unstable();
    order.dedup();
    let mut snapshots: Vec<(usize, TwoLayerNet)> = Vec::with_capacity(order.len());
    let mut teacher = teacher0;
    let mut at = 0;
    for &stop in &order {
        let mut seg = teacher_cfg.clone();
        seg.steps = stop - at;
        seg.log_every = seg.steps.max(1);
        seg.ntk_metrics_every = None;
        seg.record_trajectory = false;
        teacher = plain_gd_train(&teacher, ds, &seg, &mut rng.fork(2))?.net;
        at = stop;
        snapshots.push((stop, teacher.clone()));
    }

    let mut s_cfg = student_cfg.clone();
    s_cfg.log_every = s_cfg.steps.max(1);
    s_cfg.ntk_metrics_every = None;
    s_cfg.record_trajectory = false;
    let results: Vec<Result<SweepRow>> = stop_epochs
        .par_iter()
        .map(|&stop| {
            let (_, teacher) = snapshots.iter().find(|(s, _)| *s == stop).expect("snapshot exists");
            let f_teacher = teacher.forward(&ds.x)?;
            let soft: Vec<f64> = f_teacher.iter().map(|&f| apply_label_function(s_cfg.h, f)).collect();
            let student = regress(&student0, &ds.x, &soft, &ds.y_true, &s_cfg, &mut rng.fork(3))?.net;
            Ok(SweepRow {
                stop_epoch: stop,
                teacher_err_true: zero_one_error(&f_teacher, &ds.y_true),
                student_err_true: zero_one_error(&student.forward(&ds.x)?, &ds.y_true),
            })
        })
        .collect();
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clipped_examples() {
        let h = LabelFunction::Clipped { rho: 0.25 };
        assert_eq!(apply_label_function(h, 0.0), 0.0);
        assert!((apply_label_function(h, 0.1) - 0.8).abs() < 1e-15);
        assert_eq!(apply_label_function(h, 0.2), 1.0);
        assert_eq!(apply_label_function(h, -3.0), -1.0);
        assert_eq!(apply_label_function(h, 0.125), 1.0);
        assert!(LabelFunction::Clipped { rho: 0.5 }.validate().is_err());
        assert_eq!(apply_label_function(LabelFunction::Sign, 0.0), 1.0);
    }

    #[test]
    fn default_eta_examples() {
        assert_eq!(default_eta(1.0, 50), 0.01);
        assert_eq!(default_eta(1.0, 1), 0.5);
        assert_eq!(default_eta(2.0, 100), 0.00125);
    }

    #[test]
    fn next_alpha_examples() {
        let mut s = AlphaSchedule::new(ScheduleKind::Adaptive {
            lambda: 1.0,
            warmup: 0,
            reference: AccuracyReference::ObservedLabels,
        })
        .unwrap();
        assert_eq!(s.next_alpha(0, Some(1.0)).unwrap(), 0.0);
        let mut s = AlphaSchedule::new(ScheduleKind::Adaptive {
            lambda: 1.5,
            warmup: 0,
            reference: AccuracyReference::ObservedLabels,
        })
        .unwrap();
        assert_eq!(s.next_alpha(0, Some(0.8)).unwrap(), 0.0);
        assert!(s.next_alpha(1, None).is_err());

        let prefix = AlphaSchedule::prefix(&ScheduleKind::Constant { alpha: 0.3 }, 10).unwrap();
        assert!(prefix.iter().all(|&a| a == 0.3));
    }

    #[test]
    fn adaptive_running_min_and_warmup() {
        let mut s = AlphaSchedule::new(ScheduleKind::Adaptive {
            lambda: 1.0,
            warmup: 2,
            reference: AccuracyReference::ObservedLabels,
        })
        .unwrap();
        let seq: Vec<f64> = [0.9, 0.9, 0.5, 0.8, 0.2]
            .iter()
            .enumerate()
            .map(|(t, &a)| s.next_alpha(t, Some(a)).unwrap())
            .collect();
        assert_eq!(seq[..2], [1.0, 1.0]);
        assert_eq!(seq[2], 0.5);
        assert!((seq[3] - 0.2).abs() < 1e-15);
        assert!((seq[4] - 0.2).abs() < 1e-15);
        s.exploratory = true;
        let mut raw = AlphaSchedule::new(s.kind.clone()).unwrap().exploratory(true);
        let seq: Vec<f64> = [0.0, 0.0, 0.8, 0.2]
            .iter()
            .enumerate()
            .map(|(t, &a)| raw.next_alpha(t, Some(a)).unwrap())
            .collect();
        assert!(seq[3] > seq[2]);
    }

    #[test]
    fn theoretical_hold_then_decay() {
        let kind = ScheduleKind::Theoretical {
            hold: 3,
            stage1: 0.25,
            stage2: 0.125,
            threshold: 0.5,
        };
        let p = AlphaSchedule::prefix(&kind, 9).unwrap();
        assert_eq!(p, vec![1.0, 1.0, 1.0, 1.0, 0.75, 0.5, 0.25, 0.125, 0.0]);
    }

    #[test]
    fn metrics_csv_header() {
        assert_eq!(MetricsLog::default().to_csv(), format!("{METRICS_HEADER}\n"));
    }
}
