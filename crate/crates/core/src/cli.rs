//! Command-line experiments: JSON configs merged with flag overrides, outputs
//! written as CSV and JSON under one directory.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 infeasible input,
//! 4 numerical divergence.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    corrupt_labels, dataset_stats, generate_clusterable, load_dataset, save_dataset, ClusterSpec, Corruption,
    NoisyClusterableDataset,
};
use crate::error::{Error, Result};
use crate::network::{init_network, load_checkpoint, save_checkpoint, Activation, ActivationKind, TwoLayerNet};
use crate::ntk::{
    noise_ratio_sweep, AnalysisReport, RatioNorm, SpectrumAnalysis, SpectrumSource, StepValue, DEFAULT_COV_SAMPLES,
    DEFAULT_TOP_M, NOISE_LEVELS,
};
use crate::numerics::Rng;
use crate::selfdistill::{
    default_eta, distill_sweep, margin, plain_gd_train, self_distill_train, zero_one_error, AccuracyReference,
    AlphaSchedule, BatchMode, DistillConfig, LabelFunction, ScheduleKind, SweepRow,
};
use crate::theorem::{compute_constants, DEFAULT_DELTA};

pub const THREADS_ENV: &str = "AIRD_THREADS";

// Rng forks of the master seed.
const STREAM_DATA: u64 = 0;
const STREAM_INIT: u64 = 1;
const STREAM_TRAIN: u64 = 2;
const STREAM_COV: u64 = 3;
const STREAM_NOISE: u64 = 4;
const STREAM_SWEEP: u64 = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    Generate(GenerateSpec),
    Path(PathBuf),
}

impl Default for DatasetSource {
    fn default() -> Self {
        DatasetSource::Generate(GenerateSpec::default())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerateSpec {
    #[serde(rename = "K")]
    pub clusters: usize,
    pub n: usize,
    pub d: usize,
    pub epsilon: f64,
    #[serde(default = "default_gap")]
    pub min_center_gap: f64,
    /// Flip fraction, one value or one per cluster.
    pub rho: Corruption,
}

fn default_gap() -> f64 {
    1.0
}

impl Default for GenerateSpec {
    fn default() -> Self {
        GenerateSpec {
            clusters: 4,
            n: 200,
            d: 20,
            epsilon: 0.05,
            min_center_gap: 1.0,
            rho: Corruption::Uniform(0.3),
        }
    }
}

impl GenerateSpec {
    fn cluster_spec(&self) -> ClusterSpec {
        ClusterSpec {
            clusters: self.clusters,
            n: self.n,
            d: self.d,
            epsilon: self.epsilon,
            min_center_gap: self.min_center_gap,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub k: usize,
    /// Checked against the dataset when given.
    #[serde(default)]
    pub d: Option<usize>,
    pub activation: ActivationKind,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        NetworkSpec {
            k: 4096,
            d: None,
            activation: ActivationKind::Tanh,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Mode {
    Plain,
    #[default]
    Selfdistill,
    DistillSweep,
}

/// A learning rate or the keyword `"paper-default"` for `1/(2Γ²n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EtaSpec {
    Value(f64),
    Keyword(String),
}

impl Default for EtaSpec {
    fn default() -> Self {
        EtaSpec::Keyword(PAPER_DEFAULT.into())
    }
}

const PAPER_DEFAULT: &str = "paper-default";

impl EtaSpec {
    fn resolve(&self, gamma: f64, n: usize) -> Result<f64> {
        match self {
            EtaSpec::Value(v) if *v > 0.0 && v.is_finite() => Ok(*v),
            EtaSpec::Value(v) => Err(Error::InvalidArgument(format!("eta must be positive, got {v}"))),
            EtaSpec::Keyword(k) if k == PAPER_DEFAULT => Ok(default_eta(gamma, n)),
            EtaSpec::Keyword(k) => Err(Error::InvalidArgument(format!(
                "eta must be a number or \"{PAPER_DEFAULT}\", got \"{k}\""
            ))),
        }
    }

    fn parse(s: &str) -> EtaSpec {
        s.parse::<f64>().map(EtaSpec::Value).unwrap_or_else(|_| EtaSpec::Keyword(s.into()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum ScheduleSpec {
    Constant {
        alpha: f64,
    },
    Linear {
        #[serde(default = "one")]
        start: f64,
        decrement: f64,
    },
    Adaptive {
        lambda: f64,
        #[serde(default)]
        warmup: usize,
        #[serde(default)]
        reference: AccuracyReference,
    },
    /// Built from the theorem constants of the dataset.
    Theoretical {
        #[serde(default = "one")]
        safety: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        ScheduleSpec::Adaptive {
            lambda: 1.0,
            warmup: 2000,
            reference: AccuracyReference::DistilledTargets,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    #[default]
    Clipped,
    Sign,
    Identity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSpec {
    pub mode: Mode,
    pub steps: usize,
    pub eta: EtaSpec,
    pub schedule: ScheduleSpec,
    pub h: LabelKind,
    /// `ρ` used inside the clipped label function. Defaults to the
    /// generator's requested maximum, else the dataset's recorded value.
    #[serde(default)]
    pub rho_estimate: Option<f64>,
    pub log_every: usize,
    #[serde(default)]
    pub batch: BatchMode,
    #[serde(default)]
    pub exploratory: bool,
    /// Teacher stop epochs for distillation sweeps.
    #[serde(default)]
    pub stop_epochs: Vec<usize>,
    #[serde(default = "default_student_steps")]
    pub student_steps: usize,
    #[serde(default = "one_usize")]
    pub runs: usize,
}

fn default_student_steps() -> usize {
    5000
}

fn one_usize() -> usize {
    1
}

impl Default for TrainingSpec {
    fn default() -> Self {
        TrainingSpec {
            mode: Mode::Selfdistill,
            steps: 20_000,
            eta: EtaSpec::default(),
            schedule: ScheduleSpec::default(),
            h: LabelKind::Clipped,
            rho_estimate: None,
            log_every: 100,
            batch: BatchMode::Full,
            exploratory: false,
            stop_epochs: Vec::new(),
            student_steps: default_student_steps(),
            runs: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    pub top_m: usize,
    pub cov_samples: usize,
    #[serde(default)]
    pub ntk_metrics_every: Option<usize>,
    pub delta: f64,
    #[serde(default)]
    pub ratio_norm: RatioNorm,
    #[serde(default = "default_levels")]
    pub noise_levels: Vec<f64>,
}

fn default_levels() -> Vec<f64> {
    NOISE_LEVELS.to_vec()
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        AnalysisSpec {
            top_m: DEFAULT_TOP_M,
            cov_samples: DEFAULT_COV_SAMPLES,
            ntk_metrics_every: None,
            delta: DEFAULT_DELTA,
            ratio_norm: RatioNorm::L2,
            noise_levels: default_levels(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub dataset: DatasetSource,
    pub network: NetworkSpec,
    pub training: TrainingSpec,
    pub analysis: AnalysisSpec,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            dataset: DatasetSource::default(),
            network: NetworkSpec::default(),
            training: TrainingSpec::default(),
            analysis: AnalysisSpec::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Range checks; referenced files must exist.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        match &self.dataset {
            DatasetSource::Generate(g) => {
                let rho = g.rho.max();
                let rhos = match &g.rho {
                    Corruption::Uniform(r) => vec![*r],
                    Corruption::PerCluster(v) => v.clone(),
                };
                if rhos.iter().any(|r| !(0.0..0.5).contains(r)) {
                    return Err(Error::Assumption(format!(
                        "corruption fraction must satisfy 0 <= ρ < 1/2, got {rho}"
                    )));
                }
            }
            DatasetSource::Path(p) if !p.exists() => {
                return bad(format!("dataset file {} does not exist", p.display()));
            }
            DatasetSource::Path(_) => {}
        }
        if self.network.k < 2 || self.network.k % 2 != 0 {
            return bad(format!("network.k must be even and >= 2, got {}", self.network.k));
        }
        let t = &self.training;
        if t.log_every == 0 {
            return bad("training.log_every must be >= 1".into());
        }
        if let Some(r) = t.rho_estimate {
            if !(0.0..0.5).contains(&r) {
                return Err(Error::Assumption(format!("rho_estimate must satisfy 0 <= ρ < 1/2, got {r}")));
            }
        }
        if t.runs == 0 {
            return bad("training.runs must be >= 1".into());
        }
        let a = &self.analysis;
        if a.top_m == 0 {
            return bad("analysis.top_m must be >= 1".into());
        }
        if a.cov_samples == 0 {
            return bad("analysis.cov_samples must be >= 1".into());
        }
        if !(a.delta > 0.0 && a.delta < 1.0) {
            return bad(format!("analysis.delta must lie in (0, 1), got {}", a.delta));
        }
        if a.ntk_metrics_every == Some(0) {
            return bad("analysis.ntk_metrics_every must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Parser, Debug)]
#[command(name = "aird", version, about = "Self-distillation and NTK experiments on clusterable data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a noisy clusterable dataset and its statistics.
    GenData(CommonArgs),
    /// Train with plain gradient descent or self-distillation.
    Train(CommonArgs),
    /// NTK spectrum, noise-level ratio sweep and information-gain series.
    Analyze(AnalyzeArgs),
    /// Compute theorem constants and check a schedule against them.
    CheckTheorem(CommonArgs),
    /// Teacher stop-epoch distillation sweep over independent runs.
    Sweep(SweepArgs),
}

/// Flags shared by every subcommand; each overrides the matching config field.
#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// JSON experiment config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Load the dataset from a JSONL file instead of generating it.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Number of clusters K.
    #[arg(long = "clusters")]
    pub clusters: Option<usize>,
    /// Number of points.
    #[arg(long)]
    pub n: Option<usize>,
    /// Input dimension.
    #[arg(long)]
    pub d: Option<usize>,
    /// Cluster radius.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Per-cluster label flip fraction.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Hidden width (even).
    #[arg(long)]
    pub k: Option<usize>,
    /// Activation: tanh, softplus, identity or relu.
    #[arg(long)]
    pub activation: Option<ActivationKind>,
    /// Training mode.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Gradient steps.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Learning rate, or "paper-default".
    #[arg(long)]
    pub eta: Option<String>,
    /// Metrics row cadence.
    #[arg(long)]
    pub log_every: Option<usize>,
    /// Compute NTK ratio and information gain every this many steps.
    #[arg(long)]
    pub ntk_every: Option<usize>,
    /// Monte-Carlo samples for covariance matrices.
    #[arg(long)]
    pub cov_samples: Option<usize>,
    /// Size of the leading eigenspace.
    #[arg(long)]
    pub top_m: Option<usize>,
    /// Failure probability in the theorem constants.
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Network checkpoint to analyze; a fresh initialization otherwise.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// metrics.csv of a previous run supplying the information-gain series.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated teacher stop epochs.
    #[arg(long, value_delimiter = ',')]
    pub stop_epochs: Option<Vec<usize>>,
    /// Student training steps.
    #[arg(long)]
    pub student_steps: Option<usize>,
    /// Independent runs, seeded from (seed, run index).
    #[arg(long)]
    pub runs: Option<usize>,
}

impl CommonArgs {
    /// Load the config (or defaults) and apply every flag given.
    pub fn effective_config(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(o) = &self.out {
            c.output_dir = o.clone();
        }
        if let Some(p) = &self.dataset {
            c.dataset = DatasetSource::Path(p.clone());
        }
        let wants_gen = self.clusters.is_some()
            || self.n.is_some()
            || self.d.is_some()
            || self.epsilon.is_some()
            || self.rho.is_some();
        if wants_gen {
            match &mut c.dataset {
                DatasetSource::Generate(g) => {
                    if let Some(v) = self.clusters {
                        g.clusters = v;
                    }
                    if let Some(v) = self.n {
                        g.n = v;
                    }
                    if let Some(v) = self.d {
                        g.d = v;
                    }
                    if let Some(v) = self.epsilon {
                        g.epsilon = v;
                    }
                    if let Some(v) = self.rho {
                        g.rho = Corruption::Uniform(v);
                    }
                }
                DatasetSource::Path(_) => {
                    return Err(Error::InvalidArgument(
                        "generation flags cannot be combined with a dataset file".into(),
                    ));
                }
            }
        }
        if let Some(k) = self.k {
            c.network.k = k;
        }
        if let Some(a) = self.activation {
            c.network.activation = a;
        }
        if let Some(m) = self.mode {
            c.training.mode = m;
        }
        if let Some(s) = self.steps {
            c.training.steps = s;
        }
        if let Some(e) = &self.eta {
            c.training.eta = EtaSpec::parse(e);
        }
        if let Some(l) = self.log_every {
            c.training.log_every = l;
        }
        if let Some(e) = self.ntk_every {
            c.analysis.ntk_metrics_every = Some(e);
        }
        if let Some(s) = self.cov_samples {
            c.analysis.cov_samples = s;
        }
        if let Some(m) = self.top_m {
            c.analysis.top_m = m;
        }
        if let Some(d) = self.delta {
            c.analysis.delta = d;
        }
        c.validate()?;
        Ok(c)
    }
}

/// Map an error to the documented exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Infeasible(_) | Error::DegenerateGeometry(_) | Error::InfeasibleSchedule(_) => 3,
        Error::NotSymmetric { .. } | Error::NotOrthonormal { .. } => 3,
        Error::Diverged { .. } => 4,
        Error::Dimension { .. }
        | Error::InvalidArgument(_)
        | Error::Assumption(_)
        | Error::Parse { .. }
        | Error::Io { .. }
        | Error::Json(_) => 2,
    }
}

/// Parse `std::env::args`, run, and return the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    configure_threads();
    match run(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

pub fn run(cmd: &Command) -> Result<()> {
    match cmd {
        Command::GenData(a) => cmd_gen_data(&a.effective_config()?).map(|_| ()),
        Command::Train(a) => {
            let c = a.effective_config()?;
            match c.training.mode {
                Mode::DistillSweep => cmd_sweep(&c).map(|_| ()),
                _ => cmd_train(&c).map(|_| ()),
            }
        }
        Command::Analyze(a) => {
            let c = a.common.effective_config()?;
            cmd_analyze(&c, a.checkpoint.as_deref(), a.metrics.as_deref()).map(|_| ())
        }
        Command::CheckTheorem(a) => {
            let c = a.effective_config()?;
            let report = cmd_check_theorem(&c)?;
            print!("{}", report.render_table());
            Ok(())
        }
        Command::Sweep(a) => {
            let mut c = a.common.effective_config()?;
            if let Some(s) = &a.stop_epochs {
                c.training.stop_epochs = s.clone();
            }
            if let Some(s) = a.student_steps {
                c.training.student_steps = s;
            }
            if let Some(r) = a.runs {
                c.training.runs = r;
            }
            c.validate()?;
            cmd_sweep(&c).map(|_| ())
        }
    }
}

fn prepare_output(config: &ExperimentConfig) -> Result<PathBuf> {
    let dir = config.output_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_json(&dir.join("config.json"), config)?;
    Ok(dir)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Dataset for the config: loaded from file or generated from `seed`.
pub fn resolve_dataset(config: &ExperimentConfig) -> Result<NoisyClusterableDataset> {
    match &config.dataset {
        DatasetSource::Path(p) => {
            let ds = load_dataset(p)?;
            ds.validate()?;
            Ok(ds)
        }
        DatasetSource::Generate(g) => {
            let mut rng = Rng::new(config.seed).fork(STREAM_DATA);
            let clean = generate_clusterable(&g.cluster_spec(), &mut rng)?;
            corrupt_labels(&clean, &g.rho, &mut rng)
        }
    }
}

fn activation(config: &ExperimentConfig) -> Activation {
    let act = Activation::new(config.network.activation);
    if !act.is_smooth() {
        log::warn!("{} is not smooth; theorem guarantees do not apply", act.kind);
    }
    act
}

fn initial_net(config: &ExperimentConfig, ds: &NoisyClusterableDataset) -> Result<TwoLayerNet> {
    if let Some(d) = config.network.d {
        if d != ds.d() {
            return Err(Error::dim("network.d", ds.d(), d));
        }
    }
    let mut rng = Rng::new(config.seed).fork(STREAM_INIT);
    init_network(config.network.k, ds.d(), activation(config), &mut rng)
}

fn rho_for_h(config: &ExperimentConfig, ds: &NoisyClusterableDataset) -> f64 {
    config.training.rho_estimate.unwrap_or_else(|| match &config.dataset {
        DatasetSource::Generate(g) => g.rho.max(),
        DatasetSource::Path(_) => ds.max_rho(),
    })
}

fn label_function(config: &ExperimentConfig, ds: &NoisyClusterableDataset) -> LabelFunction {
    match config.training.h {
        LabelKind::Clipped => LabelFunction::Clipped {
            rho: rho_for_h(config, ds),
        },
        LabelKind::Sign => LabelFunction::Sign,
        LabelKind::Identity => LabelFunction::Identity,
    }
}

fn schedule_kind(config: &ExperimentConfig, ds: &NoisyClusterableDataset) -> Result<ScheduleKind> {
    Ok(match &config.training.schedule {
        ScheduleSpec::Constant { alpha } => ScheduleKind::Constant { alpha: *alpha },
        ScheduleSpec::Linear { start, decrement } => ScheduleKind::Linear {
            start: *start,
            decrement: *decrement,
        },
        ScheduleSpec::Adaptive {
            lambda,
            warmup,
            reference,
        } => ScheduleKind::Adaptive {
            lambda: *lambda,
            warmup: *warmup,
            reference: *reference,
        },
        ScheduleSpec::Theoretical { safety } => {
            let act = activation(config);
            let report = compute_constants(
                ds,
                config.network.k,
                act,
                config.analysis.delta,
                config.analysis.cov_samples,
                &Rng::new(config.seed).fork(STREAM_COV),
                None,
            )?;
            crate::selfdistill::make_theoretical_schedule(
                ds,
                act.gamma,
                report.lambda_c,
                report.lambda,
                rho_for_h(config, ds),
                config.analysis.delta,
                *safety,
            )?
            .kind
        }
    })
}

/// Training configuration for the library loop.
pub fn distill_config(config: &ExperimentConfig, ds: &NoisyClusterableDataset) -> Result<DistillConfig> {
    let act = activation(config);
    let t = &config.training;
    Ok(DistillConfig {
        eta: t.eta.resolve(act.gamma, ds.n())?,
        steps: t.steps,
        schedule: match t.mode {
            Mode::Plain => ScheduleKind::Constant { alpha: 1.0 },
            _ => schedule_kind(config, ds)?,
        },
        h: label_function(config, ds),
        log_every: t.log_every,
        ntk_metrics_every: config.analysis.ntk_metrics_every,
        top_m: config.analysis.top_m,
        batch: t.batch,
        exploratory: t.exploratory,
        record_trajectory: false,
    })
}

pub fn cmd_gen_data(config: &ExperimentConfig) -> Result<NoisyClusterableDataset> {
    let dir = prepare_output(config)?;
    let ds = resolve_dataset(config)?;
    save_dataset(&ds, dir.join("dataset.jsonl"))?;
    write_json(&dir.join("stats.json"), &dataset_stats(&ds))?;
    Ok(ds)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub mode: Mode,
    pub steps: usize,
    pub eta: f64,
    pub final_alpha: f64,
    pub l2_res_true: f64,
    pub l2_res_true_per_sqrt_n: f64,
    pub l2_res_obs: f64,
    pub zero_one_err_true: f64,
    pub zero_one_err_obs: f64,
    pub margin_true: f64,
}

pub fn cmd_train(config: &ExperimentConfig) -> Result<TrainSummary> {
    let dir = prepare_output(config)?;
    let ds = resolve_dataset(config)?;
    let net = initial_net(config, &ds)?;
    let cfg = distill_config(config, &ds)?;
    let mut rng = Rng::new(config.seed).fork(STREAM_TRAIN);
    let started = Instant::now();
    let outcome = match config.training.mode {
        Mode::Plain => plain_gd_train(&net, &ds, &cfg, &mut rng)?,
        _ => self_distill_train(&net, &ds, &cfg, &mut rng)?,
    };
    let elapsed = started.elapsed().as_secs_f64();
    outcome.log.write_csv(dir.join("metrics.csv"))?;
    save_checkpoint(&outcome.net, dir.join("checkpoint.json"))?;
    let out = outcome.net.forward(&ds.x)?;
    let l2 = |y: &[f64]| out.iter().zip(y).map(|(f, t)| (f - t) * (f - t)).sum::<f64>().sqrt();
    let summary = TrainSummary {
        mode: config.training.mode,
        steps: cfg.steps,
        eta: cfg.eta,
        final_alpha: outcome.log.last().map_or(1.0, |r| r.alpha),
        l2_res_true: l2(&ds.y_true),
        l2_res_true_per_sqrt_n: l2(&ds.y_true) / (ds.n() as f64).sqrt(),
        l2_res_obs: l2(&ds.y_obs),
        zero_one_err_true: zero_one_error(&out, &ds.y_true),
        zero_one_err_obs: zero_one_error(&out, &ds.y_obs),
        margin_true: margin(&out, &ds.y_true),
    };
    write_json(&dir.join("summary.json"), &summary)?;
    // the only file that varies between identical invocations
    write_json(&dir.join("timing.json"), &serde_json::json!({ "wall_clock_seconds": elapsed }))?;
    Ok(summary)
}

/// Read `(step, info_gain)` pairs from a metrics CSV, skipping empty cells.
pub fn read_info_gain(path: &Path) -> Result<Vec<StepValue>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let header = lines.next().map(|(_, l)| l).unwrap_or_default();
    let cols: Vec<&str> = header.split(',').collect();
    let step_col = cols.iter().position(|c| *c == "step");
    let gain_col = cols.iter().position(|c| *c == "info_gain");
    let (Some(sc), Some(gc)) = (step_col, gain_col) else {
        return Err(parse_err(1, "expected step and info_gain columns".into()));
    };
    let mut out = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        let cell = |c: usize| fields.get(c).copied().unwrap_or("");
        if cell(gc).is_empty() {
            continue;
        }
        let step = cell(sc).parse().map_err(|e| parse_err(i + 1, format!("bad step: {e}")))?;
        let value = cell(gc).parse().map_err(|e| parse_err(i + 1, format!("bad info_gain: {e}")))?;
        out.push(StepValue { step, value });
    }
    Ok(out)
}

pub fn cmd_analyze(config: &ExperimentConfig, checkpoint: Option<&Path>, metrics: Option<&Path>) -> Result<AnalysisReport> {
    for p in checkpoint.iter().chain(metrics.iter()) {
        if !p.exists() {
            return Err(Error::InvalidArgument(format!("input file {} does not exist", p.display())));
        }
    }
    let dir = prepare_output(config)?;
    let ds = resolve_dataset(config)?;
    let net = match checkpoint {
        Some(p) => load_checkpoint(p)?,
        None => initial_net(config, &ds)?,
    };
    if net.input_dim() != ds.d() {
        return Err(Error::dim("analyze", ds.d(), net.input_dim()));
    }
    let m = config.analysis.top_m.min(ds.n());
    let analysis = SpectrumAnalysis::new(SpectrumSource::GramAt { step: 0 }, &net.gram(&ds.x)?, m)?;
    let mut noise_rng = Rng::new(config.seed).fork(STREAM_NOISE);
    let noise_ratios = noise_ratio_sweep(
        &analysis,
        &ds.y_true,
        &ds.cluster_id,
        &config.analysis.noise_levels,
        config.analysis.ratio_norm,
        &mut noise_rng,
    )?;
    let information_gain = match metrics {
        Some(p) => read_info_gain(p)?,
        None => {
            let mut cfg = distill_config(config, &ds)?;
            cfg.ntk_metrics_every = Some(config.analysis.ntk_metrics_every.unwrap_or(cfg.log_every));
            let fresh = initial_net(config, &ds)?;
            let log = self_distill_train(&fresh, &ds, &cfg, &mut Rng::new(config.seed).fork(STREAM_TRAIN))?.log;
            log.rows
                .iter()
                .filter_map(|r| r.info_gain.map(|value| StepValue { step: r.step, value }))
                .collect()
        }
    };
    let report = AnalysisReport {
        eigenvalues: analysis.spectrum.eigenvalues.clone(),
        top_m: m,
        ratio_norm: config.analysis.ratio_norm,
        noise_ratios,
        information_gain,
    };
    report.write(&dir)?;
    Ok(report)
}

pub fn cmd_check_theorem(config: &ExperimentConfig) -> Result<crate::theorem::TheoremReport> {
    let dir = prepare_output(config)?;
    let ds = resolve_dataset(config)?;
    let act = activation(config);
    let prefix = match config.training.schedule {
        ScheduleSpec::Adaptive { .. } => None,
        _ => {
            let kind = schedule_kind(config, &ds)?;
            Some(AlphaSchedule::prefix(&kind, config.training.steps + 1)?)
        }
    };
    let report = compute_constants(
        &ds,
        config.network.k,
        act,
        config.analysis.delta,
        config.analysis.cov_samples,
        &Rng::new(config.seed).fork(STREAM_COV),
        prefix.as_deref(),
    )?;
    write_json(&dir.join("theorem.json"), &report)?;
    write_text(&dir.join("theorem.txt"), &report.render_table())?;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub run: usize,
    #[serde(flatten)]
    pub row: SweepRow,
}

fn default_stops(steps: usize) -> Vec<usize> {
    let mut stops: Vec<usize> = [0, 250, 500, 1000, 2000, 4000, 8000, 16000]
        .into_iter()
        .filter(|&s| s < steps)
        .collect();
    stops.push(steps);
    stops
}

pub fn cmd_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    let dir = prepare_output(config)?;
    let ds = resolve_dataset(config)?;
    let act = activation(config);
    let t = &config.training;
    let eta = t.eta.resolve(act.gamma, ds.n())?;
    let teacher = DistillConfig::plain(eta, t.steps, t.log_every);
    let mut student = DistillConfig::plain(eta, t.student_steps, t.log_every);
    student.h = label_function(config, &ds);
    let stops = if t.stop_epochs.is_empty() {
        default_stops(t.steps)
    } else {
        t.stop_epochs.clone()
    };
    let root = Rng::new(config.seed).fork(STREAM_SWEEP);
    let runs: Vec<Result<Vec<SweepRecord>>> = (0..t.runs)
        .into_par_iter()
        .map(|run| {
            let rows = distill_sweep(config.network.k, act, &teacher, &student, &stops, &ds, &root.fork(run as u64))?;
            Ok(rows.into_iter().map(|row| SweepRecord { run, row }).collect())
        })
        .collect();
    let mut records = Vec::new();
    for r in runs {
        records.extend(r?);
    }
    let mut csv = String::from("run,stop_epoch,teacher_err_true,student_err_true\n");
    for r in &records {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            r.run, r.row.stop_epoch, r.row.teacher_err_true, r.row.student_err_true
        );
    }
    write_text(&dir.join("sweep.csv"), &csv)?;
    write_json(&dir.join("sweep.json"), &records)?;
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips() {
        let c = ExperimentConfig::default();
        let text = serde_json::to_string(&c).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(c, back);
        c.validate().unwrap();
    }

    #[test]
    fn partial_config_fills_defaults() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"seed": 3, "network": {"k": 64, "activation": "tanh"}}"#).unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.network.k, 64);
        assert_eq!(c.training, TrainingSpec::default());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"sed": 3}"#).is_err());
    }

    #[test]
    fn rho_above_half_is_a_config_error() {
        let mut c = ExperimentConfig::default();
        c.dataset = DatasetSource::Generate(GenerateSpec {
            rho: Corruption::Uniform(0.6),
            ..GenerateSpec::default()
        });
        let e = c.validate().unwrap_err();
        assert_eq!(exit_code(&e), 2);
        assert!(e.to_string().contains("ρ < 1/2"));
    }

    #[test]
    fn eta_spec_parsing() {
        assert_eq!(EtaSpec::parse("0.1").resolve(1.0, 10).unwrap(), 0.1);
        assert_eq!(EtaSpec::parse("paper-default").resolve(1.0, 50).unwrap(), 0.01);
        assert!(EtaSpec::parse("fast").resolve(1.0, 50).is_err());
        assert!(EtaSpec::Value(-1.0).resolve(1.0, 50).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Diverged { step: 3, loss: 1e13 }), 4);
        assert_eq!(exit_code(&Error::DegenerateGeometry("x".into())), 3);
        assert_eq!(exit_code(&Error::Infeasible("x".into())), 3);
        assert_eq!(exit_code(&Error::InvalidArgument("x".into())), 2);
    }

    #[test]
    fn flags_override_config() {
        let args = CommonArgs {
            seed: Some(9),
            k: Some(16),
            n: Some(40),
            steps: Some(5),
            eta: Some("0.2".into()),
            ..CommonArgs::default()
        };
        let c = args.effective_config().unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.network.k, 16);
        assert_eq!(c.training.steps, 5);
        assert_eq!(c.training.eta, EtaSpec::Value(0.2));
        match c.dataset {
            DatasetSource::Generate(g) => assert_eq!(g.n, 40),
            _ => panic!("expected generated dataset"),
        }
    }
}
