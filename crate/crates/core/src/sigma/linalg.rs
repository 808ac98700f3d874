use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::tensor::SymTensor;

/// Relative positive-definiteness threshold: `λ_min > PD_REL_TOL · trace/d`.
pub const PD_REL_TOL: f64 = 1e-10;

pub fn pd_tol(reference: &DMatrix<f64>) -> f64 {
    PD_REL_TOL * reference.trace().abs() / reference.nrows() as f64
}

pub fn eigenvalue_range(m: &DMatrix<f64>) -> (f64, f64) {
    let ev = SymmetricEigen::new(m.clone()).eigenvalues;
    let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

pub fn check_pd(m: &DMatrix<f64>, tol: f64) -> Result<()> {
    let (lo, _) = eigenvalue_range(m);
    if lo > tol {
        Ok(())
    } else {
        Err(Error::NotPositiveDefinite {
            min_eigenvalue: lo,
            tol,
        })
    }
}

/// Symmetric positive definite square root `Q Λ^{1/2} Qᵀ`; its columns
/// `√A_i` satisfy `Σ √A_i √A_iᵀ = A`.
pub fn sqrt_spd(a: &SymTensor) -> Result<DMatrix<f64>> {
    let m = a.to_matrix()?;
    let tol = pd_tol(&m);
    sqrt_spd_matrix(&m, tol)
}

pub(crate) fn sqrt_spd_matrix(m: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(m.clone());
    let lo = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if !(lo > tol) {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: lo,
            tol,
        });
    }
    let q = &eig.eigenvectors;
    let root = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let s = q * root * q.transpose();
    // Exact symmetry.
    Ok((&s + s.transpose()) * 0.5)
}
