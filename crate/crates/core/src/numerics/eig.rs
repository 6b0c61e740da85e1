use serde::{Deserialize, Serialize};

use super::Mat;
use crate::error::{Error, Result};

/// Relative asymmetry accepted by [`sym_eig`].
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Off-diagonal Frobenius norm, relative to `‖A‖_F`, at which Jacobi sweeps stop.
pub const OFF_DIAG_TOL: f64 = 1e-12;
pub const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a symmetric matrix: eigenvalues in non-increasing
/// order, column `i` of `eigenvectors` paired with `eigenvalues[i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Mat,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Orthonormal basis of the span of the `m` leading eigenvectors.
    pub fn top_basis(&self, m: usize) -> Mat {
        self.eigenvectors.leading_columns(m)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// `Q Λ Qᵀ`.
    pub fn reconstruct(&self) -> Mat {
        let n = self.dim();
        let q = &self.eigenvectors;
        let mut ql = q.clone();
        for i in 0..n {
            for (j, &lam) in self.eigenvalues.iter().enumerate() {
                ql[(i, j)] *= lam;
            }
        }
        let mut a = ql.matmul_t(q).expect("square");
        a.mirror_upper();
        a
    }

    /// Coordinates of `v` in the eigenbasis (`Qᵀ v`).
    pub fn coordinates(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.eigenvectors.t_mat_vec(v)
    }
}

/// Symmetric eigensolver using cyclic Jacobi rotations.
///
/// Sweeps stop once the off-diagonal Frobenius norm falls to
/// `OFF_DIAG_TOL·‖A‖_F` or after `MAX_SWEEPS`. Each eigenvector is signed so
/// that its largest-magnitude entry is positive (ties go to the lowest index).
pub fn sym_eig(a: &Mat) -> Result<Spectrum> {
    if !a.is_square() {
        return Err(Error::dim("sym_eig", "square matrix", format!("{:?}", a.shape())));
    }
    if !a.is_finite() {
        return Err(Error::InvalidArgument("sym_eig: non-finite entry".into()));
    }
    let asym = a.relative_asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let n = a.rows();
    let mut m = a.clone();
    // symmetrize exactly so rotations can work off rows alone
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
    // rows of `vt` are the eigenvectors
    let mut vt = Mat::identity(n);
    let norm = m.frobenius_norm();
    if norm > 0.0 {
        let tol = OFF_DIAG_TOL * norm;
        let mut rp = vec![0.0; n];
        let mut rq = vec![0.0; n];
        for _sweep in 0..MAX_SWEEPS {
            if off_diagonal_norm(&m) <= tol {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = m[(p, q)];
                    if apq == 0.0 {
                        continue;
                    }
                    let app = m[(p, p)];
                    let aqq = m[(q, q)];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = if theta.abs() > 1e150 {
                        0.5 / theta
                    } else {
                        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                    };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    {
                        let row_p = m.row(p);
                        let row_q = m.row(q);
                        for k in 0..n {
                            rp[k] = c * row_p[k] - s * row_q[k];
                            rq[k] = s * row_p[k] + c * row_q[k];
                        }
                    }
                    rp[p] = app - t * apq;
                    rq[q] = aqq + t * apq;
                    rp[q] = 0.0;
                    rq[p] = 0.0;
                    m.row_mut(p).copy_from_slice(&rp);
                    m.row_mut(q).copy_from_slice(&rq);
                    for k in 0..n {
                        m[(k, p)] = rp[k];
                        m[(k, q)] = rq[k];
                    }

                    let (vp, vq) = two_rows(&mut vt, p, q);
                    for (x, y) in vp.iter_mut().zip(vq.iter_mut()) {
                        let (a, b) = (*x, *y);
                        *x = c * a - s * b;
                        *y = s * a + c * b;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal eigenvalues keep their original index order
    order.sort_by(|&i, &j| m[(j, j)].partial_cmp(&m[(i, i)]).expect("finite"));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| m[(i, i)]).collect();
    let mut eigenvectors = Mat::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let v = vt.row(src);
        let mut lead = 0;
        for (k, x) in v.iter().enumerate() {
            if x.abs() > v[lead].abs() {
                lead = k;
            }
        }
        let sign = if v[lead] < 0.0 { -1.0 } else { 1.0 };
        for (k, &x) in v.iter().enumerate() {
            eigenvectors[(k, col)] = sign * x;
        }
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(m: &Mat) -> f64 {
    let n = m.rows();
    let mut s = 0.0;
    for i in 0..n {
        for (j, &x) in m.row(i).iter().enumerate() {
            if i != j {
                s += x * x;
            }
        }
    }
    s.sqrt()
}

fn two_rows(m: &mut Mat, p: usize, q: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert!(p < q);
    let cols = m.cols();
    let (head, tail) = m.as_mut_slice().split_at_mut(q * cols);
    (&mut head[p * cols..(p + 1) * cols], &mut tail[..cols])
}
