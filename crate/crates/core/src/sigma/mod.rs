//! Moment sets, sigma-point ensembles and quadrature.
//!
//! A [`SigmaEnsemble`] is a list of nodes `σᵢ` with signed weights `wᵢ`
//! summing to one; `E[f(X)] ≈ Σ wᵢ f(σᵢ)`. [`sut`] matches the mean and
//! covariance with `2d+1` nodes. [`hout`] additionally matches skewness and
//! kurtosis up to a tolerance `τ`, using rank-1 decompositions of both.

mod hout;
mod linalg;
mod sut;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use hout::{hout, hout_condition, hout_params, hout_transform, HoutOptions, HoutParams};
pub use linalg::{check_pd, eigenvalue_range, pd_tol, sqrt_spd, PD_REL_TOL};
pub use sut::{sut, sut_condition};

use crate::error::{Error, Result};
use crate::tensor::{SymTensor, Vector};

/// Mean, covariance, skewness and kurtosis `(μ, C, S, K)` of one distribution.
///
/// Central moments are population-normalized. Construction does not demand a
/// positive definite covariance (moments of quadrature outputs need not have
/// one); [`MomentSet::validate`] checks the full invariants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MomentRepr", into = "MomentRepr")]
pub struct MomentSet {
    pub mean: Vector,
    pub covariance: SymTensor,
    pub skewness: SymTensor,
    pub kurtosis: SymTensor,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MomentRepr {
    mu: Vec<f64>,
    #[serde(rename = "C")]
    c: SymTensor,
    #[serde(rename = "S")]
    s: SymTensor,
    #[serde(rename = "K")]
    k: SymTensor,
}

impl TryFrom<MomentRepr> for MomentSet {
    type Error = Error;

    fn try_from(r: MomentRepr) -> Result<Self> {
        MomentSet::new(Vector::from_vec(r.mu), r.c, r.s, r.k)
    }
}

impl From<MomentSet> for MomentRepr {
    fn from(m: MomentSet) -> Self {
        MomentRepr {
            mu: m.mean.as_slice().to_vec(),
            c: m.covariance,
            s: m.skewness,
            k: m.kurtosis,
        }
    }
}

impl MomentSet {
    /// Checks orders and dimensions only.
    pub fn new(
        mean: Vector,
        covariance: SymTensor,
        skewness: SymTensor,
        kurtosis: SymTensor,
    ) -> Result<Self> {
        let d = mean.len();
        for (t, k) in [(&covariance, 2), (&skewness, 3), (&kurtosis, 4)] {
            if t.order() != k || t.dim() != d {
                return Err(Error::Shape(format!(
                    "moment of order {} and dimension {} where order {k}, dimension {d} was expected",
                    t.order(),
                    t.dim()
                )));
            }
        }
        Ok(MomentSet {
            mean,
            covariance,
            skewness,
            kurtosis,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn covariance_matrix(&self) -> DMatrix<f64> {
        self.covariance.to_matrix().expect("covariance has order 2")
    }

    /// Positive definite covariance and nonnegative kurtosis diagonal.
    pub fn validate(&self) -> Result<()> {
        let c = self.covariance_matrix();
        check_pd(&c, pd_tol(&c))?;
        let d = self.dim();
        for i in 0..d {
            let kiiii = self.kurtosis.get(&[i, i, i, i]);
            if kiiii < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "kurtosis diagonal entry {i} is negative ({kiiii:e})"
                )));
            }
        }
        Ok(())
    }
}

/// Formal weighted moments `μ = Σ wᵢxᵢ`, `Σ wᵢ(xᵢ−μ)^{⊗k}` for `k = 2, 3, 4`.
///
/// Weights may be negative and are not renormalized.
pub fn weighted_moments(points: &[Vector], weights: &[f64]) -> Result<MomentSet> {
    let d = check_points(points, weights)?;
    let mut mean = Vector::zeros(d);
    for (p, &w) in points.iter().zip(weights) {
        mean.axpy(w, p, 1.0);
    }
    central_moments(points, weights, mean)
}

fn check_points(points: &[Vector], weights: &[f64]) -> Result<usize> {
    if points.is_empty() {
        return Err(Error::InvalidInput("no points".into()));
    }
    if points.len() != weights.len() {
        return Err(Error::Shape(format!(
            "{} points but {} weights",
            points.len(),
            weights.len()
        )));
    }
    let d = points[0].len();
    if d == 0 {
        return Err(Error::Shape("points must have dimension at least 1".into()));
    }
    for (i, p) in points.iter().enumerate() {
        if p.len() != d {
            return Err(Error::Shape(format!(
                "point {i} has dimension {}, expected {d}",
                p.len()
            )));
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index: i });
        }
    }
    Ok(d)
}

fn central_moments(points: &[Vector], weights: &[f64], mean: Vector) -> Result<MomentSet> {
    let d = mean.len();
    let mut m2 = vec![0.0; d * d];
    let mut m3 = vec![0.0; d * d * d];
    let mut m4 = vec![0.0; d * d * d * d];
    let mut pair = vec![0.0; d * d];
    for (p, &w) in points.iter().zip(weights) {
        let dev = p - &mean;
        for i in 0..d {
            for j in 0..d {
                pair[i * d + j] = dev[i] * dev[j];
            }
        }
        for (a, &pp) in pair.iter().enumerate() {
            let wp = w * pp;
            m2[a] += wp;
            for (k, &x) in dev.iter().enumerate() {
                m3[a * d + k] += wp * x;
            }
            for (b, &qq) in pair.iter().enumerate() {
                m4[a * d * d + b] += wp * qq;
            }
        }
    }

    Ok(MomentSet {
        mean,
        covariance: SymTensor::symmetrize(2, d, &m2)?,
        skewness: SymTensor::symmetrize(3, d, &m3)?,
        kurtosis: SymTensor::symmetrize(4, d, &m4)?,
    })
}

/// Empirical moments of a sample, uniformly weighted unless `weights` is
/// given (weights must sum to one).
pub fn empirical_moments(samples: &[Vector], weights: Option<&[f64]>) -> Result<MomentSet> {
    if samples.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    match weights {
        Some(w) => {
            let total: f64 = w.iter().sum();
            if (total - 1.0).abs() > 1e-12 * w.len() as f64 {
                return Err(Error::InvalidInput(format!(
                    "weights sum to {total}, not 1"
                )));
            }
            weighted_moments(samples, w)
        }
        None => {
            // Plain averaging keeps the mean of a constant sample exact.
            let n = samples.len();
            let w = vec![1.0 / n as f64; n];
            let d = check_points(samples, &w)?;
            let mut mean = Vector::zeros(d);
            for p in samples {
                mean += p;
            }
            mean /= n as f64;
            central_moments(samples, &w, mean)
        }
    }
}

/// Neumaier summation.
pub(crate) fn compensated_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for &x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Which rule produced an ensemble, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "UPPERCASE")]
pub enum Generator {
    Sut {
        beta: f64,
    },
    Hout {
        tau: f64,
        alpha: f64,
        beta: f64,
        gamma: f64,
        delta: f64,
        skew_terms: usize,
        kurt_terms: usize,
    },
}

impl Generator {
    /// Index of the first node: `0` for the SUT, `−2` for the HOUT.
    pub fn first_index(&self) -> i64 {
        match self {
            Generator::Sut { .. } => 0,
            Generator::Hout { .. } => -2,
        }
    }
}

/// Quadrature nodes and signed weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaEnsemble {
    pub nodes: Vec<Vector>,
    pub weights: Vec<f64>,
    pub meta: Generator,
}

impl SigmaEnsemble {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.nodes.first().map_or(0, |n| n.len())
    }

    /// `Σ wᵢ`, summed with compensation.
    pub fn weight_sum(&self) -> f64 {
        compensated_sum(&self.weights)
    }

    /// `Σ |wᵢ|`.
    pub fn abs_weight_sum(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }

    /// `Σ wᵢ f(σᵢ)`.
    pub fn expectation<F: Fn(&Vector) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(x))
            .sum()
    }

    /// Weighted moments of the nodes themselves.
    pub fn moments(&self) -> Result<MomentSet> {
        weighted_moments(&self.nodes, &self.weights)
    }

    /// Index labels in node order (`−2, −1, 0, …` for HOUT).
    pub fn indices(&self) -> impl Iterator<Item = i64> + '_ {
        let first = self.meta.first_index();
        (0..self.nodes.len() as i64).map(move |i| first + i)
    }
}

/// Outputs of a function evaluated on an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    pub outputs: Vec<Vector>,
    pub weights: Vec<f64>,
    /// Weighted output moments; the mean is `Σ wᵢ f(σᵢ)`.
    pub moments: MomentSet,
}

fn check_outputs(outputs: &[Vector]) -> Result<()> {
    for (i, y) in outputs.iter().enumerate() {
        if y.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index: i });
        }
    }
    Ok(())
}

/// Evaluates `f` once per node in index order and forms the weighted output
/// moments. Negative output "variances" are reported as computed.
pub fn propagate<F>(ensemble: &SigmaEnsemble, f: F) -> Result<Propagation>
where
    F: FnMut(&Vector) -> Vector,
{
    let outputs: Vec<Vector> = ensemble.nodes.iter().map(f).collect();
    finish_propagation(outputs, ensemble)
}

/// [`propagate`] with node evaluations spread over the rayon pool; `f` must
/// be free of side effects.
pub fn propagate_par<F>(ensemble: &SigmaEnsemble, f: F) -> Result<Propagation>
where
    F: Fn(&Vector) -> Vector + Sync + Send,
{
    let outputs: Vec<Vector> = ensemble.nodes.par_iter().map(f).collect();
    finish_propagation(outputs, ensemble)
}

fn finish_propagation(outputs: Vec<Vector>, ensemble: &SigmaEnsemble) -> Result<Propagation> {
    check_outputs(&outputs)?;
    let moments = weighted_moments(&outputs, &ensemble.weights)?;
    Ok(Propagation {
        outputs,
        weights: ensemble.weights.clone(),
        moments,
    })
}
