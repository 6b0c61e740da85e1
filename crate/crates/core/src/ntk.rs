//! Covariance matrices and Gram spectra: `Σ(D)`, `λ(D)`, top-eigenspace
//! ratios, information gain and the linearized residual dynamics.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::flip_count;
use crate::error::{Error, Result};
use crate::network::ActivationKind;
use crate::numerics::{gemm, sym_eig, Mat, Rng, Spectrum};

pub const DEFAULT_COV_SAMPLES: usize = 10_000;
pub const DEFAULT_TOP_M: usize = 5;
pub const NOISE_LEVELS: [f64; 6] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];

/// Monte-Carlo samples per partial sum. Partial sums are added in chunk
/// order so the estimate does not depend on the worker count.
const CHUNK: usize = 256;

/// Monte-Carlo estimate of `Σ(D) = (D Dᵀ) ⊙ E_g[φ′(Dg) φ′(Dg)ᵀ]`, `g ~ N(0, I_d)`.
///
/// Sample `s` draws its Gaussian from `rng.fork(s)`.
pub fn covariance_matrix(d_mat: &Mat, act: ActivationKind, samples: usize, rng: &Rng) -> Result<Mat> {
    if samples == 0 {
        return Err(Error::InvalidArgument("covariance_matrix: samples must be >= 1".into()));
    }
    if !d_mat.is_finite() {
        return Err(Error::InvalidArgument("covariance_matrix: non-finite row".into()));
    }
    let (m, d) = d_mat.shape();
    let chunks = samples.div_ceil(CHUNK);
    let partials: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(samples);
            let b = hi - lo;
            let mut g = Vec::with_capacity(b * d);
            for s in lo..hi {
                let mut r = rng.fork(s as u64);
                g.extend((0..d).map(|_| r.normal()));
            }
            // z = G Dᵀ : b×m
            let mut z = vec![0.0; b * m];
            gemm(b, d, m, 1.0, (&g, d as isize, 1), (d_mat.as_slice(), 1, d as isize), 0.0, &mut z);
            for x in &mut z {
                *x = act.derivative(*x);
            }
            // Zᵀ Z : m×m
            let mut acc = vec![0.0; m * m];
            gemm(m, b, m, 1.0, (&z, 1, m as isize), (&z, m as isize, 1), 0.0, &mut acc);
            acc
        })
        .collect();
    let mut sum = vec![0.0; m * m];
    for p in &partials {
        for (s, x) in sum.iter_mut().zip(p) {
            *s += x;
        }
    }
    let mut expectation = Mat::from_vec(m, m, sum)?.scale(1.0 / samples as f64);
    expectation.mirror_upper();
    let mut sigma = expectation.hadamard(&d_mat.gram_rows())?;
    sigma.mirror_upper();
    Ok(sigma)
}

/// Smallest eigenvalue of the estimated `Σ(D)`.
pub fn lambda_min(d_mat: &Mat, act: ActivationKind, samples: usize, rng: &Rng) -> Result<f64> {
    let sigma = covariance_matrix(d_mat, act, samples, rng)?;
    Ok(sym_eig(&sigma)?.min_eigenvalue())
}

/// `λ(C)`, `λ(X)` and `Λ = min(λ(C), λ(X))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaPair {
    pub lambda_c: f64,
    pub lambda_x: f64,
    pub lambda: f64,
}

pub fn lambda_pair(
    centers: &Mat,
    x: &Mat,
    act: ActivationKind,
    samples: usize,
    rng: &Rng,
) -> Result<LambdaPair> {
    let lambda_c = lambda_min(centers, act, samples, &rng.fork(0))?;
    let lambda_x = lambda_min(x, act, samples, &rng.fork(1))?;
    Ok(LambdaPair {
        lambda_c,
        lambda_x,
        lambda: lambda_c.min(lambda_x),
    })
}

/// How the projected norm is compared with the full norm.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioNorm {
    /// `‖P_m y‖ / ‖y‖`
    #[default]
    L2,
    /// `‖P_m y‖² / ‖y‖²`
    Squared,
}

/// `‖P_m y‖ / ‖y‖` with `P_m` the projector onto the `m` leading eigenvectors of `h`.
pub fn top_eigenspace_ratio(h: &Mat, label: &[f64], m: usize) -> Result<f64> {
    let spec = sym_eig(h)?;
    spectrum_ratio(&spec, label, m, RatioNorm::L2)
}

/// Same as [`top_eigenspace_ratio`] with a precomputed spectrum.
pub fn spectrum_ratio(spec: &Spectrum, label: &[f64], m: usize, norm: RatioNorm) -> Result<f64> {
    let n = spec.dim();
    if label.len() != n {
        return Err(Error::dim("top_eigenspace_ratio", n, label.len()));
    }
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!("top_m must be in 1..={n}, got {m}")));
    }
    let total: f64 = label.iter().map(|x| x * x).sum();
    if total == 0.0 || !total.is_finite() {
        return Err(Error::InvalidArgument("top_eigenspace_ratio: label vector must be nonzero".into()));
    }
    let coords = spec.coordinates(label)?;
    let top: f64 = coords[..m].iter().map(|c| c * c).sum();
    let sq = (top / total).min(1.0);
    Ok(match norm {
        RatioNorm::L2 => sq.sqrt(),
        RatioNorm::Squared => sq,
    })
}

/// Ratio of the distilled label minus ratio of the raw label.
pub fn information_gain(h: &Mat, distill_label: &[f64], raw_label: &[f64], m: usize) -> Result<f64> {
    let spec = sym_eig(h)?;
    spectrum_information_gain(&spec, distill_label, raw_label, m, RatioNorm::L2)
}

pub fn spectrum_information_gain(
    spec: &Spectrum,
    distill_label: &[f64],
    raw_label: &[f64],
    m: usize,
    norm: RatioNorm,
) -> Result<f64> {
    Ok(spectrum_ratio(spec, distill_label, m, norm)? - spectrum_ratio(spec, raw_label, m, norm)?)
}

/// Per-mode residual coordinates `(1 − ηλᵢ)ᵗ ⟨r₀, eᵢ⟩` for `t = 0..=steps`.
pub fn linearized_modes(spec: &Spectrum, r0: &[f64], eta: f64, steps: usize) -> Result<Vec<Vec<f64>>> {
    if eta <= 0.0 || !eta.is_finite() {
        return Err(Error::InvalidArgument(format!("eta must be positive, got {eta}")));
    }
    let c0 = spec.coordinates(r0)?;
    Ok((0..=steps)
        .map(|t| {
            c0.iter()
                .zip(&spec.eigenvalues)
                .map(|(c, lam)| c * (1.0 - eta * lam).powi(t as i32))
                .collect()
        })
        .collect())
}

/// Residuals `Q (I − ηΛ)ᵗ Qᵀ r₀` for `t = 0..=steps`, in closed form.
pub fn linearized_trajectory(h: &Mat, r0: &[f64], eta: f64, steps: usize) -> Result<Vec<Vec<f64>>> {
    let spec = sym_eig(h)?;
    linearized_modes(&spec, r0, eta, steps)?
        .iter()
        .map(|c| spec.eigenvectors.mat_vec(c))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SpectrumSource {
    GramAt { step: usize },
    Covariance { samples: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumAnalysis {
    pub source: SpectrumSource,
    pub spectrum: Spectrum,
    pub top_m: usize,
}

impl SpectrumAnalysis {
    pub fn new(source: SpectrumSource, h: &Mat, top_m: usize) -> Result<Self> {
        let spectrum = sym_eig(h)?;
        if top_m == 0 || top_m > spectrum.dim() {
            return Err(Error::InvalidArgument(format!(
                "top_m must be in 1..={}, got {top_m}",
                spectrum.dim()
            )));
        }
        Ok(SpectrumAnalysis {
            source,
            spectrum,
            top_m,
        })
    }

    pub fn ratio(&self, label: &[f64], norm: RatioNorm) -> Result<f64> {
        spectrum_ratio(&self.spectrum, label, self.top_m, norm)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRatio {
    pub level: f64,
    pub ratio: f64,
}

/// Top-`m` ratio of a label vector corrupted at each level in `levels`.
///
/// Corruption is nested: each cluster is shuffled once and the first
/// `round(level·n_l)` members of that order are flipped, so a higher level
/// flips a superset of the labels flipped at a lower one.
pub fn noise_ratio_sweep(
    analysis: &SpectrumAnalysis,
    clean: &[f64],
    cluster_id: &[usize],
    levels: &[f64],
    norm: RatioNorm,
    rng: &mut Rng,
) -> Result<Vec<LevelRatio>> {
    if clean.len() != cluster_id.len() {
        return Err(Error::dim("noise_ratio_sweep", clean.len(), cluster_id.len()));
    }
    let k = cluster_id.iter().copied().max().map_or(0, |c| c + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &c) in cluster_id.iter().enumerate() {
        members[c].push(i);
    }
    for m in &mut members {
        rng.shuffle(m);
    }
    levels
        .iter()
        .map(|&level| {
            if !(0.0..=1.0).contains(&level) {
                return Err(Error::InvalidArgument(format!("noise level {level} outside [0, 1]")));
            }
            let mut y = clean.to_vec();
            for m in &members {
                for &i in &m[..flip_count(level, m.len())] {
                    y[i] = -y[i];
                }
            }
            Ok(LevelRatio {
                level,
                ratio: analysis.ratio(&y, norm)?,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepValue {
    pub step: usize,
    pub value: f64,
}

/// Spectrum, noise-level ratios and an information-gain series.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub eigenvalues: Vec<f64>,
    pub top_m: usize,
    pub ratio_norm: RatioNorm,
    pub noise_ratios: Vec<LevelRatio>,
    pub information_gain: Vec<StepValue>,
}

impl AnalysisReport {
    /// Rows `step_or_level,value`: noise levels first, then the gain series.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step_or_level,value\n");
        for r in &self.noise_ratios {
            let _ = writeln!(out, "{},{}", r.level, r.ratio);
        }
        for s in &self.information_gain {
            let _ = writeln!(out, "{},{}", s.step, s.value);
        }
        out
    }

    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let json = dir.join("analysis.json");
        std::fs::write(&json, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(&json, e))?;
        let ratios = dir.join("noise_ratios.csv");
        let mut csv = String::from("step_or_level,value\n");
        for r in &self.noise_ratios {
            let _ = writeln!(csv, "{},{}", r.level, r.ratio);
        }
        std::fs::write(&ratios, csv).map_err(|e| Error::io(&ratios, e))?;
        let gain = dir.join("information_gain.csv");
        let mut csv = String::from("step_or_level,value\n");
        for s in &self.information_gain {
            let _ = writeln!(csv, "{},{}", s.step, s.value);
        }
        std::fs::write(&gain, csv).map_err(|e| Error::io(&gain, e))
    }
}
