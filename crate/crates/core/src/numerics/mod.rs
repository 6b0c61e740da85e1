//! Dense linear algebra, the symmetric eigensolver and seeded sampling.

mod eig;
mod mat;
mod rng;

pub use eig::{sym_eig, Spectrum, MAX_SWEEPS, OFF_DIAG_TOL, SYMMETRY_TOL};
pub use mat::Mat;
pub use rng::Rng;

pub(crate) use mat::gemm;

use crate::error::{Error, Result};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scaled(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// Sign with `sign(0) = +1`.
#[inline]
pub fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Uniform sample from the unit sphere `S^{d-1}` (normalized Gaussian).
pub fn unit_sphere_sample(d: usize, rng: &mut Rng) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(Error::InvalidArgument("unit_sphere_sample: dimension must be >= 1".into()));
    }
    loop {
        let g = rng.normals(d);
        let norm = norm2(&g);
        if norm > 1e-150 {
            return Ok(g.into_iter().map(|x| x / norm).collect());
        }
    }
}

/// Maximum `‖BᵀB − I‖` entry for a column set.
pub fn orthonormality_defect(basis: &Mat) -> f64 {
    let g = basis.t_matmul(basis).expect("shapes agree");
    let m = g.rows();
    let mut worst = 0.0_f64;
    for i in 0..m {
        for j in 0..m {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// Orthogonal projection `B Bᵀ v` onto the span of orthonormal columns `B`.
pub fn project_onto_span(basis: &Mat, v: &[f64]) -> Result<Vec<f64>> {
    if basis.rows() != v.len() {
        return Err(Error::dim("project_onto_span", basis.rows(), v.len()));
    }
    let defect = orthonormality_defect(basis);
    if defect > 1e-10 {
        return Err(Error::NotOrthonormal { deviation: defect });
    }
    let coeffs = basis.t_mat_vec(v)?;
    basis.mat_vec(&coeffs)
}
