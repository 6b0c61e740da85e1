// Jacobi eigendecomposition of a random symmetric matrix.

use std::error::Error;

use aird::numerics::{sym_eig, Mat, Rng};

pub fn run() -> Result<(), Box<dyn Error>> {
    let mut rng = Rng::new(1);
    let n = 8;
    let b = Mat::from_fn(n, n, |_, _| rng.normal());
    let a = b.add(&b.transpose())?.scale(0.5);

    let spec = sym_eig(&a)?;
    println!("eigenvalues (descending):");
    for lam in &spec.eigenvalues {
        println!("  {lam:+.6}");
    }
    let recon = a.sub(&spec.reconstruct())?.frobenius_norm() / a.frobenius_norm();
    let q = &spec.eigenvectors;
    let ortho = q.t_matmul(q)?.sub(&Mat::identity(n))?.frobenius_norm();
    println!("relative reconstruction error {recon:.2e}");
    println!("orthogonality defect          {ortho:.2e}");
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
