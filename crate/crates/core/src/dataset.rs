//! Noisy clusterable binary datasets on the unit sphere.
//!
//! Points of cluster `l` lie on the spherical cap of radius `epsilon` around a
//! unit-norm center `c_l` and share one ground-truth label. Observed labels are
//! the true labels with an exact per-cluster fraction flipped.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{dot, norm2, Mat, Rng};

/// Maximum number of center proposals before generation gives up.
pub const MAX_CENTER_TRIES: usize = 1_000_000;
/// Row-norm tolerance accepted when loading a file.
pub const LOAD_NORM_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct NoisyClusterableDataset {
    pub x: Mat,
    /// Ground-truth labels (±1).
    pub y_true: Vec<f64>,
    /// Observed, possibly corrupted labels (±1).
    pub y_obs: Vec<f64>,
    pub cluster_id: Vec<usize>,
    pub centers: Mat,
    pub epsilon: f64,
    /// Requested corruption fraction per cluster.
    pub rho_per_cluster: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    #[serde(rename = "K")]
    pub clusters: usize,
    pub n: usize,
    pub d: usize,
    pub epsilon: f64,
    #[serde(default = "default_gap")]
    pub min_center_gap: f64,
}

fn default_gap() -> f64 {
    1.0
}

/// Corruption request: one fraction for every cluster or one per cluster.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Corruption {
    Uniform(f64),
    PerCluster(Vec<f64>),
}

impl Corruption {
    fn per_cluster(&self, clusters: usize) -> Result<Vec<f64>> {
        match self {
            Corruption::Uniform(r) => Ok(vec![*r; clusters]),
            Corruption::PerCluster(v) if v.len() == clusters => Ok(v.clone()),
            Corruption::PerCluster(v) => Err(Error::dim("corrupt_labels", clusters, v.len())),
        }
    }

    pub fn max(&self) -> f64 {
        match self {
            Corruption::Uniform(r) => *r,
            Corruption::PerCluster(v) => v.iter().copied().fold(0.0, f64::max),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n: usize,
    pub d: usize,
    #[serde(rename = "K")]
    pub clusters: usize,
    pub cluster_sizes: Vec<usize>,
    pub achieved_rho: Vec<f64>,
    pub max_rho: f64,
    pub min_cluster_size: usize,
    pub max_within_cluster_radius: f64,
    pub min_center_gap: f64,
    /// `min_l n_l · K / n`.
    pub c_low: f64,
    /// `max_l n_l · K / n`.
    pub c_up: f64,
}

impl NoisyClusterableDataset {
    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn d(&self) -> usize {
        self.x.cols()
    }

    pub fn clusters(&self) -> usize {
        self.centers.rows()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.clusters()];
        for &c in &self.cluster_id {
            sizes[c] += 1;
        }
        sizes
    }

    /// Indices of the rows belonging to each cluster.
    pub fn cluster_members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.clusters()];
        for (i, &c) in self.cluster_id.iter().enumerate() {
            members[c].push(i);
        }
        members
    }

    /// Matrix whose row `i` is the center of the cluster of `x_i`.
    pub fn center_per_row(&self) -> Mat {
        self.centers.select_rows(&self.cluster_id)
    }

    pub fn max_rho(&self) -> f64 {
        self.rho_per_cluster.iter().copied().fold(0.0, f64::max)
    }

    /// Dataset with the same inputs and `y_obs` replaced by `labels`.
    pub fn with_observed(&self, labels: Vec<f64>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::dim("with_observed", self.n(), labels.len()));
        }
        let mut ds = self.clone();
        ds.y_obs = labels;
        Ok(ds)
    }

    /// Check every structural invariant; returns a description of the first failure.
    pub fn validate(&self) -> Result<()> {
        let (n, d, k) = (self.n(), self.d(), self.clusters());
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.centers.cols() != d {
            return bad(format!("centers have {} columns, data has {d}", self.centers.cols()));
        }
        if self.y_true.len() != n || self.y_obs.len() != n || self.cluster_id.len() != n {
            return bad("label/cluster vectors must have one entry per row".into());
        }
        if self.rho_per_cluster.len() != k {
            return bad(format!("rho_per_cluster has {} entries for {k} clusters", self.rho_per_cluster.len()));
        }
        for l in 0..k {
            let nc = norm2(self.centers.row(l));
            if (nc - 1.0).abs() > 1e-12 {
                return bad(format!("center {l} has norm {nc}"));
            }
        }
        let mut cluster_label = vec![None; k];
        for i in 0..n {
            let c = self.cluster_id[i];
            if c >= k {
                return bad(format!("row {i}: cluster {c} out of range"));
            }
            let norm = norm2(self.x.row(i));
            if (norm - 1.0).abs() > 1e-12 {
                return bad(format!("row {i} has norm {norm}"));
            }
            let dist = distance(self.x.row(i), self.centers.row(c));
            if dist > self.epsilon + 1e-12 {
                return bad(format!("row {i} lies {dist} from its center (epsilon {})", self.epsilon));
            }
            for (name, y) in [("y_true", self.y_true[i]), ("y_obs", self.y_obs[i])] {
                if y != 1.0 && y != -1.0 {
                    return bad(format!("row {i}: {name} = {y} is not ±1"));
                }
            }
            match cluster_label[c] {
                None => cluster_label[c] = Some(self.y_true[i]),
                Some(y) if y != self.y_true[i] => {
                    return bad(format!("cluster {c} mixes ground-truth labels"));
                }
                _ => {}
            }
        }
        if let Some(r) = self.rho_per_cluster.iter().find(|r| !(0.0..0.5).contains(*r)) {
            return bad(format!("rho {r} outside [0, 1/2)"));
        }
        Ok(())
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Generate a clean clusterable dataset (`y_obs == y_true`).
pub fn generate_clusterable(spec: &ClusterSpec, rng: &mut Rng) -> Result<NoisyClusterableDataset> {
    let ClusterSpec {
        clusters: k,
        n,
        d,
        epsilon,
        min_center_gap,
    } = *spec;
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need K >= 2 clusters, got {k}")));
    }
    if d < 2 {
        return Err(Error::InvalidArgument(format!("need d >= 2, got {d}")));
    }
    if n < k {
        return Err(Error::InvalidArgument(format!("need n >= K, got n={n}, K={k}")));
    }
    if !(epsilon >= 0.0 && epsilon < min_center_gap / 4.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in [0, min_center_gap/4) = [0, {}), got {epsilon}",
            min_center_gap / 4.0
        )));
    }

    let centers = sample_centers(k, d, min_center_gap, rng)?;

    let base = n / k;
    let extra = n % k;
    let mut x = Mat::zeros(n, d);
    let mut cluster_id = Vec::with_capacity(n);
    let mut y_true = Vec::with_capacity(n);
    let mut row = 0;
    for l in 0..k {
        let size = base + usize::from(l < extra);
        let label = if l % 2 == 0 { 1.0 } else { -1.0 };
        for _ in 0..size {
            let p = sample_cap(centers.row(l), epsilon, rng);
            x.row_mut(row).copy_from_slice(&p);
            cluster_id.push(l);
            y_true.push(label);
            row += 1;
        }
    }
    Ok(NoisyClusterableDataset {
        x,
        y_obs: y_true.clone(),
        y_true,
        cluster_id,
        centers,
        epsilon,
        rho_per_cluster: vec![0.0; k],
    })
}

fn sample_centers(k: usize, d: usize, gap: f64, rng: &mut Rng) -> Result<Mat> {
    let mut accepted: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut tries = 0;
    while accepted.len() < k {
        if tries >= MAX_CENTER_TRIES {
            return Err(Error::Infeasible(format!(
                "could not place {k} centers in d={d} with pairwise gap {gap} after {MAX_CENTER_TRIES} tries"
            )));
        }
        tries += 1;
        let c = crate::numerics::unit_sphere_sample(d, rng)?;
        if accepted.iter().all(|a| distance(a, &c) >= gap) {
            accepted.push(c);
        }
    }
    Mat::from_rows(&accepted)
}

/// Uniform sample from `{u : ‖u‖ = 1, ‖u − c‖ ≤ eps}`.
fn sample_cap(center: &[f64], eps: f64, rng: &mut Rng) -> Vec<f64> {
    if eps == 0.0 {
        return center.to_vec();
    }
    let d = center.len();
    let theta_max = 2.0 * (eps / 2.0).min(1.0).asin();
    // polar angle density ∝ sin^{d-2}θ: propose from θ^{d-2}, accept by (sin θ/θ)^{d-2}
    let theta = loop {
        let t = theta_max * rng.uniform().powf(1.0 / (d as f64 - 1.0));
        if t == 0.0 {
            break t;
        }
        let accept = (t.sin() / t).powi(d as i32 - 2);
        if rng.uniform() < accept {
            break t;
        }
    };
    // tangent direction uniform on the sphere orthogonal to the center
    let tangent = loop {
        let mut g = rng.normals(d);
        let proj = dot(&g, center);
        for (gi, ci) in g.iter_mut().zip(center) {
            *gi -= proj * ci;
        }
        let norm = norm2(&g);
        if norm > 1e-12 {
            break g.into_iter().map(|v| v / norm).collect::<Vec<_>>();
        }
    };
    let (s, c) = theta.sin_cos();
    let mut u: Vec<f64> = center.iter().zip(&tangent).map(|(ci, ti)| c * ci + s * ti).collect();
    let norm = norm2(&u);
    for ui in &mut u {
        *ui /= norm;
    }
    // rounding can push a boundary sample a hair past eps; pull it back along the geodesic
    if distance(&u, center) > eps {
        let shrink = 1.0 - 1e-12;
        let (s, c) = (theta * shrink).sin_cos();
        u = center.iter().zip(&tangent).map(|(ci, ti)| c * ci + s * ti).collect();
        let norm = norm2(&u);
        for ui in &mut u {
            *ui /= norm;
        }
    }
    u
}

/// Flip exactly `round(rho_l · n_l)` labels, chosen uniformly, inside each cluster.
///
/// Unlike [`corrupt_labels`] this accepts any fraction in `[0, 1]`; it backs the
/// noise-level sweeps that go up to 1/2.
pub fn flip_within_clusters(
    labels: &[f64],
    cluster_id: &[usize],
    rho_per_cluster: &[f64],
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    if labels.len() != cluster_id.len() {
        return Err(Error::dim("flip_within_clusters", labels.len(), cluster_id.len()));
    }
    let k = rho_per_cluster.len();
    let mut members = vec![Vec::new(); k];
    for (i, &c) in cluster_id.iter().enumerate() {
        if c >= k {
            return Err(Error::InvalidArgument(format!("row {i}: cluster {c} out of range")));
        }
        members[c].push(i);
    }
    let mut out = labels.to_vec();
    for (l, idx) in members.iter().enumerate() {
        let rho = rho_per_cluster[l];
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::InvalidArgument(format!("flip fraction {rho} outside [0,1]")));
        }
        let count = flip_count(rho, idx.len());
        for j in rng.sample_without_replacement(idx.len(), count) {
            out[idx[j]] = -out[idx[j]];
        }
    }
    Ok(out)
}

/// `round(rho · size)` with halves rounded away from zero.
pub fn flip_count(rho: f64, size: usize) -> usize {
    ((rho * size as f64).round() as usize).min(size)
}

/// Corrupt labels of a clean dataset with symmetric, exact-count flips.
pub fn corrupt_labels(
    ds: &NoisyClusterableDataset,
    rho: &Corruption,
    rng: &mut Rng,
) -> Result<NoisyClusterableDataset> {
    let rhos = rho.per_cluster(ds.clusters())?;
    if let Some(bad) = rhos.iter().find(|r| !(**r >= 0.0 && **r < 0.5)) {
        return Err(Error::Assumption(format!(
            "corruption fraction must satisfy 0 <= ρ < 1/2, got {bad}"
        )));
    }
    let y_obs = flip_within_clusters(&ds.y_true, &ds.cluster_id, &rhos, rng)?;
    Ok(NoisyClusterableDataset {
        y_obs,
        rho_per_cluster: rhos,
        ..ds.clone()
    })
}

/// Recompute summary statistics from the raw fields.
pub fn dataset_stats(ds: &NoisyClusterableDataset) -> DatasetStats {
    let (n, k) = (ds.n(), ds.clusters());
    let sizes = ds.cluster_sizes();
    let mut flipped = vec![0usize; k];
    let mut radius = 0.0_f64;
    for i in 0..n {
        let c = ds.cluster_id[i];
        if ds.y_obs[i] != ds.y_true[i] {
            flipped[c] += 1;
        }
        radius = radius.max(distance(ds.x.row(i), ds.centers.row(c)));
    }
    let achieved_rho: Vec<f64> = flipped
        .iter()
        .zip(&sizes)
        .map(|(&f, &s)| if s == 0 { 0.0 } else { f as f64 / s as f64 })
        .collect();
    let mut gap = f64::INFINITY;
    for a in 0..k {
        for b in (a + 1)..k {
            gap = gap.min(distance(ds.centers.row(a), ds.centers.row(b)));
        }
    }
    let min_size = sizes.iter().copied().min().unwrap_or(0);
    let max_size = sizes.iter().copied().max().unwrap_or(0);
    DatasetStats {
        n,
        d: ds.d(),
        clusters: k,
        max_rho: achieved_rho.iter().copied().fold(0.0, f64::max),
        achieved_rho,
        min_cluster_size: min_size,
        max_within_cluster_radius: radius,
        min_center_gap: gap,
        c_low: min_size as f64 * k as f64 / n as f64,
        c_up: max_size as f64 * k as f64 / n as f64,
        cluster_sizes: sizes,
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    #[serde(rename = "K")]
    clusters: usize,
    d: usize,
    epsilon: f64,
    centers: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rho_per_cluster: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct Record {
    x: Vec<f64>,
    y_true: i64,
    y_obs: i64,
    cluster: usize,
}

/// Write the dataset as JSON Lines: a header line then one record per point.
pub fn save_dataset(ds: &NoisyClusterableDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let header = Header {
        clusters: ds.clusters(),
        d: ds.d(),
        epsilon: ds.epsilon,
        centers: ds.centers.to_rows(),
        rho_per_cluster: Some(ds.rho_per_cluster.clone()),
    };
    let mut write_line = |value: String| -> Result<()> {
        w.write_all(value.as_bytes()).map_err(|e| Error::io(path, e))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))
    };
    write_line(serde_json::to_string(&header)?)?;
    for i in 0..ds.n() {
        let rec = Record {
            x: ds.x.row(i).to_vec(),
            y_true: ds.y_true[i] as i64,
            y_obs: ds.y_obs[i] as i64,
            cluster: ds.cluster_id[i],
        };
        write_line(serde_json::to_string(&rec)?)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read a JSON Lines dataset, validating every record.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<NoisyClusterableDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut lines = reader.lines().enumerate();
    let header: Header = loop {
        match lines.next() {
            None => return Err(err(1, "missing header line".into())),
            Some((i, line)) => {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                break serde_json::from_str(&line).map_err(|e| err(i + 1, format!("malformed header: {e}")))?;
            }
        }
    };
    let d = header.d;
    let k = header.clusters;
    if header.centers.len() != k {
        return Err(err(1, format!("header lists {} centers for K={k}", header.centers.len())));
    }
    for (l, c) in header.centers.iter().enumerate() {
        if c.len() != d {
            return Err(err(1, format!("center {l} has length {}, expected d={d}", c.len())));
        }
        let nc = norm2(c);
        if (nc - 1.0).abs() > LOAD_NORM_TOL {
            return Err(err(1, format!("center {l} has norm {nc}, expected 1")));
        }
    }

    let mut data = Vec::new();
    let mut y_true = Vec::new();
    let mut y_obs = Vec::new();
    let mut cluster_id = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record =
            serde_json::from_str(&line).map_err(|e| err(lineno, format!("malformed record: {e}")))?;
        if rec.x.len() != d {
            return Err(err(lineno, format!("x has length {}, expected d={d}", rec.x.len())));
        }
        let norm = norm2(&rec.x);
        if (norm - 1.0).abs() > LOAD_NORM_TOL || !norm.is_finite() {
            return Err(err(lineno, format!("x has norm {norm}, expected unit norm")));
        }
        for (name, y) in [("y_true", rec.y_true), ("y_obs", rec.y_obs)] {
            if y != 1 && y != -1 {
                return Err(err(lineno, format!("{name} = {y}, expected -1 or +1")));
            }
        }
        if rec.cluster >= k {
            return Err(err(lineno, format!("cluster {} out of range for K={k}", rec.cluster)));
        }
        data.extend_from_slice(&rec.x);
        y_true.push(rec.y_true as f64);
        y_obs.push(rec.y_obs as f64);
        cluster_id.push(rec.cluster);
    }
    let n = y_true.len();
    let mut ds = NoisyClusterableDataset {
        x: Mat::from_vec(n, d, data)?,
        y_true,
        y_obs,
        cluster_id,
        centers: Mat::from_rows(&header.centers)?,
        epsilon: header.epsilon,
        rho_per_cluster: vec![0.0; k],
    };
    ds.rho_per_cluster = match header.rho_per_cluster {
        Some(r) if r.len() == k => r,
        Some(r) => return Err(err(1, format!("rho_per_cluster has {} entries for K={k}", r.len()))),
        None => dataset_stats(&ds).achieved_rho,
    };
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(k: usize, n: usize, d: usize, eps: f64) -> ClusterSpec {
        ClusterSpec {
            clusters: k,
            n,
            d,
            epsilon: eps,
            min_center_gap: 1.0,
        }
    }

    #[test]
    fn epsilon_zero_collapses_to_centers() {
        let ds = generate_clusterable(&spec(2, 4, 2, 0.0), &mut Rng::new(1)).unwrap();
        assert_eq!(ds.cluster_sizes(), vec![2, 2]);
        for i in 0..4 {
            assert_eq!(ds.x.row(i), ds.centers.row(ds.cluster_id[i]));
        }
        assert_eq!(dataset_stats(&ds).max_within_cluster_radius, 0.0);
        ds.validate().unwrap();
    }

    #[test]
    fn generated_dataset_passes_invariants() {
        let ds = generate_clusterable(&spec(4, 200, 20, 0.05), &mut Rng::new(2)).unwrap();
        ds.validate().unwrap();
        let stats = dataset_stats(&ds);
        assert!(stats.max_within_cluster_radius <= 0.05);
        assert!(stats.min_center_gap >= 1.0);
        assert_eq!(stats.achieved_rho, vec![0.0; 4]);
        assert_eq!(stats.c_low, 1.0);
        assert!(ds.y_true.contains(&1.0) && ds.y_true.contains(&-1.0));
    }

    #[test]
    fn near_antipodal_centers() {
        let mut s = spec(2, 100, 2, 0.1);
        s.min_center_gap = 1.9;
        let ds = generate_clusterable(&s, &mut Rng::new(3)).unwrap();
        assert!(dataset_stats(&ds).min_center_gap >= 1.9);
    }

    #[test]
    fn crowded_centers_are_infeasible() {
        let mut s = spec(3, 30, 2, 0.0);
        s.min_center_gap = 1.99;
        assert!(matches!(generate_clusterable(&s, &mut Rng::new(4)), Err(Error::Infeasible(_))));
    }

    #[test]
    fn argument_checks() {
        let mut rng = Rng::new(0);
        assert!(generate_clusterable(&spec(1, 10, 3, 0.0), &mut rng).is_err());
        assert!(generate_clusterable(&spec(2, 10, 1, 0.0), &mut rng).is_err());
        assert!(generate_clusterable(&spec(5, 4, 3, 0.0), &mut rng).is_err());
        assert!(generate_clusterable(&spec(2, 10, 3, 0.3), &mut rng).is_err());
    }

    #[test]
    fn corruption_counts() {
        let clean = generate_clusterable(&spec(2, 20, 3, 0.1), &mut Rng::new(5)).unwrap();
        let same = corrupt_labels(&clean, &Corruption::Uniform(0.0), &mut Rng::new(6)).unwrap();
        assert_eq!(same.y_obs, same.y_true);

        let noisy = corrupt_labels(&clean, &Corruption::Uniform(0.3), &mut Rng::new(6)).unwrap();
        let stats = dataset_stats(&noisy);
        assert_eq!(stats.achieved_rho, vec![0.3, 0.3]);
        assert_eq!(noisy.x, clean.x);
        assert_eq!(noisy.y_true, clean.y_true);

        let big = generate_clusterable(&spec(2, 200, 3, 0.1), &mut Rng::new(7)).unwrap();
        let noisy = corrupt_labels(&big, &Corruption::Uniform(0.49), &mut Rng::new(8)).unwrap();
        let stats = dataset_stats(&noisy);
        assert_eq!(stats.achieved_rho, vec![0.49, 0.49]);
        assert!(stats.max_rho < 0.5);
    }

    #[test]
    fn corruption_rejects_half() {
        let clean = generate_clusterable(&spec(2, 20, 3, 0.1), &mut Rng::new(5)).unwrap();
        let e = corrupt_labels(&clean, &Corruption::Uniform(0.5), &mut Rng::new(0)).unwrap_err();
        assert!(matches!(e, Error::Assumption(_)));
        assert!(corrupt_labels(&clean, &Corruption::PerCluster(vec![0.1]), &mut Rng::new(0)).is_err());
    }

    #[test]
    fn exhaustive_flip_counts() {
        let mut rng = Rng::new(10);
        for size in 1..=20usize {
            let labels = vec![1.0; size];
            let ids = vec![0; size];
            for j in 0..10 {
                let rho = j as f64 * 0.05;
                let out = flip_within_clusters(&labels, &ids, &[rho], &mut rng).unwrap();
                let flipped = out.iter().filter(|&&y| y < 0.0).count();
                assert_eq!(flipped, (rho * size as f64).round() as usize, "size {size} rho {rho}");
            }
        }
    }

    #[test]
    fn round_trip_and_validation() {
        let clean = generate_clusterable(&spec(3, 30, 5, 0.1), &mut Rng::new(11)).unwrap();
        let ds = corrupt_labels(&clean, &Corruption::PerCluster(vec![0.1, 0.2, 0.3]), &mut Rng::new(12)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.jsonl");
        save_dataset(&ds, &path).unwrap();
        assert_eq!(load_dataset(&path).unwrap(), ds);

        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
        lines[2] = lines[2].replace("\"y_obs\":1", "\"y_obs\":0").replace("\"y_obs\":-1", "\"y_obs\":0");
        std::fs::write(&path, lines.join("\n")).unwrap();
        match load_dataset(&path).unwrap_err() {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("y_obs"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn load_rejects_short_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(
            &path,
            "{\"K\":2,\"d\":2,\"epsilon\":0.1,\"centers\":[[1.0,0.0],[0.0,1.0]]}\n\
             {\"x\":[0.9,0.0],\"y_true\":1,\"y_obs\":1,\"cluster\":0}\n",
        )
        .unwrap();
        match load_dataset(&path).unwrap_err() {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("norm"));
            }
            e => panic!("unexpected {e}"),
        }
    }
}
