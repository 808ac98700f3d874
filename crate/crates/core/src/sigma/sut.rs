use super::linalg::sqrt_spd;
use super::{Generator, SigmaEnsemble};
use crate::error::{Error, Result};
use crate::tensor::{SymTensor, Vector};

/// Scaled unscented transform: nodes `μ, μ+β√C_i, μ−β√C_i` with weights
/// `1−d/β²` and `1/(2β²)`.
pub fn sut(mean: &Vector, cov: &SymTensor, beta: f64) -> Result<SigmaEnsemble> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Parameter(format!(
            "beta must be positive, got {beta}"
        )));
    }
    let d = mean.len();
    if cov.order() != 2 || cov.dim() != d {
        return Err(Error::Shape(format!(
            "covariance of order {} and dimension {} for a mean of length {d}",
            cov.order(),
            cov.dim()
        )));
    }
    let root = sqrt_spd(cov)?;
    let mut nodes = Vec::with_capacity(2 * d + 1);
    nodes.push(mean.clone());
    for sign in [1.0, -1.0] {
        for col in root.column_iter() {
            nodes.push(mean + col * (sign * beta));
        }
    }
    let b2 = beta * beta;
    let mut weights = vec![1.0 / (2.0 * b2); 2 * d + 1];
    weights[0] = 1.0 - d as f64 / b2;
    Ok(SigmaEnsemble {
        nodes,
        weights,
        meta: Generator::Sut { beta },
    })
}

/// Upper bound `Σ|wᵢ|` on the absolute condition number of the SUT.
pub fn sut_condition(beta: f64, dim: usize) -> f64 {
    let d = dim as f64;
    if beta * beta >= d {
        1.0
    } else {
        2.0 * d / (beta * beta) - 1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_beta_in_one_dimension() {
        let c = SymTensor::from_entries(2, 1, vec![1.0]).unwrap();
        let e = sut(&Vector::from_vec(vec![0.0]), &c, 1.0).unwrap();
        let xs: Vec<f64> = e.nodes.iter().map(|n| n[0]).collect();
        assert_eq!(xs, vec![0.0, 1.0, -1.0]);
        assert_eq!(e.weights, vec![0.0, 0.5, 0.5]);
    }

    #[test]
    fn gaussian_fourth_moment_with_root_three() {
        let c = SymTensor::from_entries(2, 1, vec![1.0]).unwrap();
        let e = sut(&Vector::from_vec(vec![0.0]), &c, 3f64.sqrt()).unwrap();
        assert!((e.expectation(|x| x[0].powi(4)) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn condition_numbers() {
        assert_eq!(sut_condition(2f64.sqrt(), 2), 1.0);
        assert!((sut_condition(1.0, 2) - 3.0).abs() < 1e-15);
        assert_eq!(sut_condition(10.0, 1), 1.0);
        let c = SymTensor::from_entries(2, 2, vec![2.0, 0.3, 0.3, 1.0]).unwrap();
        let e = sut(&Vector::from_vec(vec![1.0, 1.0]), &c, 0.7).unwrap();
        assert!((e.abs_weight_sum() - sut_condition(0.7, 2)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_beta() {
        let c = SymTensor::from_entries(2, 1, vec![1.0]).unwrap();
        assert!(sut(&Vector::from_vec(vec![0.0]), &c, 0.0).is_err());
        assert!(sut(&Vector::from_vec(vec![0.0, 1.0]), &c, 1.0).is_err());
    }
}
