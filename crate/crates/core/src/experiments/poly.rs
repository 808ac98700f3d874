//! Mean and variance of `f(x) = a·x + c·(b·xⁿ)` under a non-Gaussian input,
//! estimated by SUT and HOUT quadrature and by the sample itself.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::nongaussian::{rng_for, sample_nongaussian, stream, NonGaussianSpec};
use crate::error::{Error, Result};
use crate::sigma::{empirical_moments, hout_transform, sut, HoutOptions, MomentSet, SigmaEnsemble};
use crate::tensor::Vector;

/// `f(x) = a·x + c·(b·xⁿ)` with the power taken componentwise.
#[derive(Debug, Clone, PartialEq)]
pub struct PolySpec {
    pub a: Vector,
    pub b: Vector,
    pub n: u32,
}

impl PolySpec {
    pub fn validate(&self) -> Result<()> {
        if !(2..=5).contains(&self.n) {
            return Err(Error::Parameter(format!(
                "power must be in 2..=5, got {}",
                self.n
            )));
        }
        if self.a.len() != self.b.len() {
            return Err(Error::Shape(format!(
                "a has length {} but b has length {}",
                self.a.len(),
                self.b.len()
            )));
        }
        Ok(())
    }
}

/// The scalar test function for one value of `c`.
pub fn poly_f(spec: &PolySpec, c: f64) -> impl Fn(&Vector) -> f64 + Sync + '_ {
    move |x: &Vector| {
        let linear = spec.a.dot(x);
        let power: f64 = spec
            .b
            .iter()
            .zip(x.iter())
            .map(|(b, xi)| b * xi.powi(spec.n as i32))
            .sum();
        linear + c * power
    }
}

/// Uniform-weight statistics of `f` over a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct McStats {
    pub mean: f64,
    pub variance: f64,
    /// Standard error of `mean`.
    pub mean_se: f64,
    /// Standard error of `variance`, `√((m₄ − m₂²)/N)`.
    pub variance_se: f64,
    pub moments: MomentSet,
}

/// Monte Carlo reference statistics of `f` on `samples`.
pub fn mc_oracle<F: Fn(&Vector) -> f64>(samples: &[Vector], f: F) -> Result<McStats> {
    let ys: Vec<Vector> = samples
        .iter()
        .map(|x| Vector::from_element(1, f(x)))
        .collect();
    if let Some(index) = ys.iter().position(|y| !y[0].is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let moments = empirical_moments(&ys, None)?;
    let n = samples.len() as f64;
    let m2 = moments.covariance.entries()[0];
    let m4 = moments.kurtosis.entries()[0];
    Ok(McStats {
        mean: moments.mean[0],
        variance: m2,
        mean_se: (m2 / n).sqrt(),
        variance_se: ((m4 - m2 * m2).max(0.0) / n).sqrt(),
        moments,
    })
}

/// `(Σ wᵢ f(σᵢ), Σ wᵢ (f(σᵢ) − mean)²)`.
pub fn quadrature_mean_variance<F: Fn(&Vector) -> f64>(e: &SigmaEnsemble, f: F) -> (f64, f64) {
    let ys: Vec<f64> = e.nodes.iter().map(&f).collect();
    let mean: f64 = ys.iter().zip(&e.weights).map(|(y, w)| w * y).sum();
    let var = ys
        .iter()
        .zip(&e.weights)
        .map(|(y, w)| w * (y - mean) * (y - mean))
        .sum();
    (mean, var)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolyStudyConfig {
    pub dim: usize,
    pub ensemble_size: usize,
    pub seed: u64,
    pub tau: f64,
    pub powers: Vec<u32>,
    pub c_values: Vec<f64>,
    /// SUT scale sweep.
    pub betas: Vec<f64>,
    /// HOUT skew-scale sweep; `null` entries use the default `J^{−1/3}`.
    pub gammas: Vec<Option<f64>>,
}

impl Default for PolyStudyConfig {
    fn default() -> Self {
        PolyStudyConfig {
            dim: 2,
            ensemble_size: 20_000,
            seed: 0,
            tau: 1e-5,
            powers: vec![2, 3, 4, 5],
            c_values: vec![0.01, 0.1, 1.0, 10.0],
            betas: vec![0.5, 1.0, 2f64.sqrt(), 3f64.sqrt(), 2.0],
            gammas: vec![None, Some(0.5), Some(1.0), Some(2.0)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Sut,
    Hout,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Sut => "SUT",
            Method::Hout => "HOUT",
        }
    }
}

/// One sweep point of [`polynomial_study`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolyRow {
    pub n: u32,
    pub c: f64,
    pub method: Method,
    /// `β` for the SUT, `γ` for the HOUT.
    pub param: f64,
    pub mean_estimate: f64,
    pub var_estimate: f64,
    pub mc_mean: f64,
    pub mc_var: f64,
    pub mean_error: f64,
    pub var_error: f64,
    pub mean_se: f64,
    pub var_se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyStudyReport {
    pub tau: f64,
    pub moments: MomentSet,
    pub spec: NonGaussianSpec,
    pub polys: Vec<PolySpec>,
    pub rows: Vec<PolyRow>,
}

impl PolyStudyReport {
    pub fn rows_for(&self, n: u32, method: Method) -> impl Iterator<Item = &PolyRow> {
        self.rows
            .iter()
            .filter(move |r| r.n == n && r.method == method)
    }
}

/// Compares SUT and HOUT estimates of the output mean and variance with the
/// sample statistics, for every power, `c` and sweep parameter.
pub fn polynomial_study(cfg: &PolyStudyConfig) -> Result<PolyStudyReport> {
    if cfg.dim == 0 {
        return Err(Error::Parameter("dim must be at least 1".into()));
    }
    let spec = NonGaussianSpec::random(cfg.dim, cfg.ensemble_size, cfg.seed);
    let samples = sample_nongaussian(&spec)?;
    let moments = empirical_moments(&samples, None)?;

    let mut coef_rng = rng_for(cfg.seed, stream::COEFFICIENTS);
    let mut polys = Vec::with_capacity(cfg.powers.len());
    for &n in &cfg.powers {
        let a = Vector::from_fn(cfg.dim, |_, _| StandardNormal.sample(&mut coef_rng));
        let b = Vector::from_fn(cfg.dim, |_, _| StandardNormal.sample(&mut coef_rng));
        let p = PolySpec { a, b, n };
        p.validate()?;
        polys.push(p);
    }

    let mut rules: Vec<(Method, f64, SigmaEnsemble)> = Vec::new();
    for &beta in &cfg.betas {
        rules.push((
            Method::Sut,
            beta,
            sut(&moments.mean, &moments.covariance, beta)?,
        ));
    }
    for &gamma in &cfg.gammas {
        let opts = HoutOptions {
            tau: cfg.tau,
            gamma,
            ..Default::default()
        };
        let (e, p) = hout_transform(&moments, &opts)?;
        rules.push((Method::Hout, p.gamma, e));
    }

    let mut rows = Vec::new();
    for poly in &polys {
        for &c in &cfg.c_values {
            let f = poly_f(poly, c);
            let mc = mc_oracle(&samples, &f)?;
            for (method, param, e) in &rules {
                let (mean, var) = quadrature_mean_variance(e, &f);
                rows.push(PolyRow {
                    n: poly.n,
                    c,
                    method: *method,
                    param: *param,
                    mean_estimate: mean,
                    var_estimate: var,
                    mc_mean: mc.mean,
                    mc_var: mc.variance,
                    mean_error: (mean - mc.mean).abs(),
                    var_error: (var - mc.variance).abs(),
                    mean_se: mc.mean_se,
                    var_se: mc.variance_se,
                });
            }
        }
    }
    Ok(PolyStudyReport {
        tau: cfg.tau,
        moments,
        spec,
        polys,
        rows,
    })
}
