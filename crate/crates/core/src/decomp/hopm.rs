use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::tensor::{SymTensor, Vector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopmOptions {
    /// Stopping tolerance, scaled by `max(1, |λ|)`.
    pub eig_tol: f64,
    pub max_iters: usize,
}

impl Default for HopmOptions {
    fn default() -> Self {
        HopmOptions {
            eig_tol: 1e-12,
            max_iters: 500,
        }
    }
}

/// Unit eigenvector `v` and eigenvalue `λ` with `T v^{k−1} = λ v`.
///
/// Sign convention: for odd order `λ ≥ 0` (flipping `v` flips `λ`); for even
/// order the largest-magnitude component of `v` is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub vector: Vector,
    pub eigenvalue: f64,
    pub iterations: usize,
    /// False when `max_iters` ran out before both the eigenvalue and the
    /// eigen-residual met the tolerance. The pair is still the last iterate.
    pub converged: bool,
}

impl EigenPair {
    /// `‖T v^{k−1} − λ v‖`.
    pub fn residual(&self, t: &SymTensor) -> f64 {
        (t.gradient_form(&self.vector) - &self.vector * self.eigenvalue).norm()
    }
}

/// Leading eigenvector of the Gram matrix `M Mᵀ`, i.e. the leading left
/// singular vector of `M`, with its largest component made positive.
pub fn leading_left_singular_vector(m: &DMatrix<f64>) -> Vector {
    let gram = m * m.transpose();
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.iter().enumerate().fold(0, |best, (i, &x)| {
        if x > eig.eigenvalues[best] {
            i
        } else {
            best
        }
    });
    let mut u: Vector = eig.eigenvectors.column(top).into_owned();
    orient_largest_positive(&mut u);
    u
}

pub(crate) fn orient_largest_positive(v: &mut Vector) {
    let pivot = v.iter().enumerate().fold(
        0,
        |best, (i, x)| if x.abs() > v[best].abs() { i } else { best },
    );
    if v[pivot] < 0.0 {
        v.neg_mut();
    }
}

/// Higher order power method initialized from the leading left singular
/// vector of the `d × d^{k−1}` unfolding.
pub fn hopm(t: &SymTensor, opts: &HopmOptions) -> Result<EigenPair> {
    if t.is_zero() {
        return Err(Error::Degenerate("zero tensor has no eigen-direction"));
    }
    // For a symmetric tensor the row-major reshape differs from the
    // unfolding only by a column permutation, which leaves M Mᵀ unchanged.
    let d = t.dim();
    let m = DMatrix::from_row_slice(d, t.entries().len() / d, t.entries());
    let init = leading_left_singular_vector(&m);
    hopm_from(t, &init, opts)
}

/// Higher order power method from a caller-chosen starting vector.
///
/// Each sweep updates `v¹, …, v^k` in turn; `v^ℓ` is the contraction of `T`
/// against the other `k−1` vectors (already-updated ones for slots before
/// `ℓ`), renormalized. The eigenvalue is `T(v¹, …, v¹)`.
pub fn hopm_from(t: &SymTensor, init: &Vector, opts: &HopmOptions) -> Result<EigenPair> {
    if t.is_zero() {
        return Err(Error::Degenerate("zero tensor has no eigen-direction"));
    }
    if init.len() != t.dim() {
        return Err(Error::Shape(format!(
            "initial vector of length {} for dimension {}",
            init.len(),
            t.dim()
        )));
    }
    if !(opts.eig_tol > 0.0) {
        return Err(Error::Parameter(format!(
            "eig_tol must be positive, got {}",
            opts.eig_tol
        )));
    }
    let n0 = init.norm();
    if !(n0 > 0.0) || !n0.is_finite() {
        return Err(Error::Degenerate(
            "initial vector must be nonzero and finite",
        ));
    }

    let k = t.order();
    let mut vs: Vec<Vector> = vec![init / n0; k];
    let mut lambda = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iters {
        iterations += 1;
        for slot in 0..k {
            let others: Vec<&[f64]> = (0..k)
                .filter(|&m| m != slot)
                .map(|m| vs[m].as_slice())
                .collect();
            let w = Vector::from_vec(t.contract_trailing(&others));
            let n = w.norm();
            if n > 0.0 {
                vs[slot] = w / n;
            }
        }
        let prev = lambda;
        lambda = t.form(&vs[0]);
        let scale = lambda.abs().max(1.0);
        if (lambda - prev).abs() <= opts.eig_tol * scale {
            // λ can settle before v does; insist on the eigen-residual too.
            let r = (t.gradient_form(&vs[0]) - &vs[0] * lambda).norm();
            if r <= opts.eig_tol * scale {
                converged = true;
                break;
            }
        }
    }

    let mut vector = vs.swap_remove(0);
    if k % 2 == 1 {
        if lambda < 0.0 {
            vector.neg_mut();
            lambda = -lambda;
        }
    } else {
        orient_largest_positive(&mut vector);
    }
    Ok(EigenPair {
        vector,
        eigenvalue: lambda,
        iterations,
        converged,
    })
}
