//! Higher order unscented transform.
//!
//! With `S ≈ Σ ṽᵢ^{⊗3}` (`J` terms) and `K ≈ Σ sᵢ ũᵢ^{⊗4}` (`L` terms), both to
//! `τ/2`, the ensemble is
//!
//! | index            | node           | weight                 |
//! |------------------|----------------|------------------------|
//! | −2               | `μ`            | `1 − dβ⁻² − L̂δ⁻⁴`      |
//! | −1, 0            | `μ ± αμ̂`       | `±1/(2α)`              |
//! | `d` pairs        | `μ ± β√Ĉᵢ`     | `1/(2β²)`              |
//! | `J` pairs        | `μ ± γṽᵢ`      | `±1/(2γ³)`             |
//! | `L` pairs        | `μ ± δũᵢ`      | `sᵢ/(2δ⁴)` (both)      |
//!
//! where `C̃ = Σ sᵢũᵢũᵢᵀ`, `Ĉ = C − δ⁻²C̃`, `μ̃ = Σ ṽᵢ`, `μ̂ = −γ⁻²μ̃` and
//! `L̂ = Σ sᵢ`. The mean and covariance are reproduced exactly; the third
//! and fourth moment errors are at most `τ/2 + α²‖μ̂‖³` and
//! `τ/2 + β²‖C̄‖_F` with `C̄ = Σ √Ĉᵢ^{⊗4}`, so taking `α` and `β` below
//! `√(τ/(2‖μ̂^{⊗3}‖_F))` and `√(τ/(2‖C̄‖_F))` keeps both under `τ`.

use nalgebra::DMatrix;

use super::linalg::{check_pd, eigenvalue_range, pd_tol, sqrt_spd_matrix};
use super::{compensated_sum, Generator, MomentSet, SigmaEnsemble};
use crate::decomp::{approx_rank1_decompose, DecompOptions, Rank1Decomposition};
use crate::error::{Error, Result};
use crate::tensor::Vector;

const MAX_HALVINGS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoutOptions {
    /// Absolute tolerance on the skewness and kurtosis residuals.
    pub tau: f64,
    /// Skew-node scale; `None` means `J^{−1/3}` (or 1 when `J = 0`).
    pub gamma: Option<f64>,
    /// Relative margin of `δ` above `√(λ_max(C̃)/λ_min(C))`.
    pub delta_margin: f64,
    /// Halve `δ` while `Ĉ` stays positive definite.
    pub halve_delta: bool,
    /// Fraction of the strict upper bound used for `β`.
    pub beta_frac: f64,
    /// Fraction of the strict upper bound used for `α`.
    pub alpha_frac: f64,
    /// `α` when `μ̂ = 0` and its bound is vacuous.
    pub alpha_degenerate: f64,
    /// Settings for both decompositions; the tolerance is replaced by `τ/2`.
    pub decomp: DecompOptions,
}

impl HoutOptions {
    pub fn with_tau(tau: f64) -> Self {
        HoutOptions {
            tau,
            ..Default::default()
        }
    }
}

impl Default for HoutOptions {
    fn default() -> Self {
        HoutOptions {
            tau: 1e-5,
            gamma: None,
            delta_margin: 1e-6,
            halve_delta: true,
            beta_frac: 0.99,
            alpha_frac: 0.99,
            alpha_degenerate: 1.0,
            decomp: DecompOptions::default(),
        }
    }
}

/// Everything [`hout`] needs to lay out the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct HoutParams {
    pub tau: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub skew: Rank1Decomposition,
    pub kurt: Rank1Decomposition,
    /// `L̂ = Σ sᵢ`.
    pub l_hat: f64,
    /// `μ̃ = Σ ṽᵢ`.
    pub mu_tilde: Vector,
    /// `μ̂ = −γ⁻² μ̃`.
    pub mu_hat: Vector,
    /// `C̃ = Σ sᵢ ũᵢ ũᵢᵀ`.
    pub c_tilde: DMatrix<f64>,
    /// `Ĉ = C − δ⁻² C̃`.
    pub c_hat: DMatrix<f64>,
    pub sqrt_c_hat: DMatrix<f64>,
    /// `‖C̄‖_F` with `C̄ = Σ √Ĉᵢ^{⊗4}`.
    pub c_bar_norm: f64,
    /// `‖μ̂^{⊗3}‖_F = ‖μ̂‖³`.
    pub mu_hat_cube_norm: f64,
}

impl HoutParams {
    pub fn dim(&self) -> usize {
        self.mu_hat.len()
    }

    /// `J`.
    pub fn skew_terms(&self) -> usize {
        self.skew.terms.len()
    }

    /// `L`.
    pub fn kurt_terms(&self) -> usize {
        self.kurt.terms.len()
    }

    /// Weight of the central node, `1 − dβ⁻² − L̂δ⁻⁴`.
    pub fn center_weight(&self) -> f64 {
        1.0 - self.dim() as f64 / (self.beta * self.beta) - self.l_hat / self.delta.powi(4)
    }

    /// Node count `2(d + J + L) + 3`.
    pub fn node_count(&self) -> usize {
        2 * (self.dim() + self.skew_terms() + self.kurt_terms()) + 3
    }
}

/// `‖Σᵢ cᵢ^{⊗4}‖_F² = Σ_{i,j} (cᵢ·cⱼ)⁴` over the columns of `root`.
fn c_bar_norm(root: &DMatrix<f64>) -> f64 {
    let gram = root.transpose() * root;
    gram.iter().map(|g| g.powi(4)).sum::<f64>().sqrt()
}

/// Decomposes skewness and kurtosis and fixes `α, β, γ, δ`.
pub fn hout_params(m: &MomentSet, opts: &HoutOptions) -> Result<HoutParams> {
    let tau = opts.tau;
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Parameter(format!("tau must be positive, got {tau}")));
    }
    if let Some(g) = opts.gamma {
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::Parameter(format!("gamma must be positive, got {g}")));
        }
    }
    m.validate()?;
    let d = m.dim();
    let c = m.covariance_matrix();
    let tol = pd_tol(&c);

    let dopts = DecompOptions {
        tol: tau / 2.0,
        ..opts.decomp
    };
    let skew = approx_rank1_decompose(&m.skewness, &dopts)?;
    let kurt = approx_rank1_decompose(&m.kurtosis, &dopts)?;

    let mut c_tilde = DMatrix::zeros(d, d);
    for term in &kurt.terms {
        c_tilde += &term.vector * term.vector.transpose() * term.sign.value();
    }
    let (lambda_min_c, _) = eigenvalue_range(&c);
    let (_, lambda_max_ct) = eigenvalue_range(&c_tilde);

    let mut delta = if lambda_max_ct > 0.0 {
        (lambda_max_ct / lambda_min_c).sqrt() * (1.0 + opts.delta_margin)
    } else {
        // Ĉ ⪰ C for every δ; nothing to balance.
        1.0
    };
    if opts.halve_delta && lambda_max_ct > 0.0 {
        for _ in 0..MAX_HALVINGS {
            let trial = delta / 2.0;
            if check_pd(&(&c - &c_tilde / (trial * trial)), tol).is_err() {
                break;
            }
            delta = trial;
        }
    }
    let c_hat = &c - &c_tilde / (delta * delta);
    let sqrt_c_hat = sqrt_spd_matrix(&c_hat, tol).map_err(|e| {
        Error::Parameter(format!(
            "covariance correction lost positive definiteness: {e}"
        ))
    })?;

    let cbar = c_bar_norm(&sqrt_c_hat);
    let beta = opts.beta_frac * (tau / (2.0 * cbar)).sqrt();

    let j = skew.terms.len();
    let gamma = opts.gamma.unwrap_or(if j > 0 {
        (j as f64).powf(-1.0 / 3.0)
    } else {
        1.0
    });
    let l_hat: f64 = kurt.signs().sum();
    let mut mu_tilde = Vector::zeros(d);
    for term in &skew.terms {
        mu_tilde += &term.vector;
    }
    let mu_hat = &mu_tilde * (-1.0 / (gamma * gamma));
    let mu_hat_cube_norm = mu_hat.norm().powi(3);
    let alpha = if mu_hat_cube_norm > 0.0 {
        opts.alpha_frac * (tau / (2.0 * mu_hat_cube_norm)).sqrt()
    } else {
        opts.alpha_degenerate
    };

    Ok(HoutParams {
        tau,
        alpha,
        beta,
        gamma,
        delta,
        skew,
        kurt,
        l_hat,
        mu_tilde,
        mu_hat,
        c_tilde,
        c_hat,
        sqrt_c_hat,
        c_bar_norm: cbar,
        mu_hat_cube_norm,
    })
}

/// Lays out the `2(d+J+L)+3` nodes and weights in index order `−2, …, N`.
pub fn hout(m: &MomentSet, p: &HoutParams) -> Result<SigmaEnsemble> {
    let d = m.dim();
    if p.dim() != d {
        return Err(Error::Shape(format!(
            "parameters for dimension {} applied to moments of dimension {d}",
            p.dim()
        )));
    }
    let mu = &m.mean;
    let n = p.node_count();
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);

    nodes.push(mu.clone());
    weights.push(0.0);

    nodes.push(mu + &p.mu_hat * p.alpha);
    weights.push(0.5 / p.alpha);
    nodes.push(mu - &p.mu_hat * p.alpha);
    weights.push(-0.5 / p.alpha);

    let wb = 0.5 / (p.beta * p.beta);
    for sign in [1.0, -1.0] {
        for col in p.sqrt_c_hat.column_iter() {
            nodes.push(mu + col * (sign * p.beta));
            weights.push(wb);
        }
    }

    let wg = 0.5 / p.gamma.powi(3);
    for sign in [1.0, -1.0] {
        for term in &p.skew.terms {
            nodes.push(mu + &term.vector * (sign * p.gamma));
            weights.push(sign * wg);
        }
    }

    let wd = 0.5 / p.delta.powi(4);
    for sign in [1.0, -1.0] {
        for term in &p.kurt.terms {
            nodes.push(mu + &term.vector * (sign * p.delta));
            weights.push(term.sign.value() * wd);
        }
    }

    // Equal to `center_weight()` in exact arithmetic; taking it from the
    // compensated sum of the rest keeps `Σ wᵢ = 1` to within one rounding.
    weights[0] = 1.0 - compensated_sum(&weights[1..]);

    Ok(SigmaEnsemble {
        nodes,
        weights,
        meta: Generator::Hout {
            tau: p.tau,
            alpha: p.alpha,
            beta: p.beta,
            gamma: p.gamma,
            delta: p.delta,
            skew_terms: p.skew_terms(),
            kurt_terms: p.kurt_terms(),
        },
    })
}

/// [`hout_params`] followed by [`hout`].
pub fn hout_transform(m: &MomentSet, opts: &HoutOptions) -> Result<(SigmaEnsemble, HoutParams)> {
    let p = hout_params(m, opts)?;
    Ok((hout(m, &p)?, p))
}

/// `|w₋₂| + 1/α + d/β² + J/γ³ + L/δ⁴`, an upper bound on `Σ|wᵢ|`.
///
/// When `μ̂ = 0` the `±αμ̂` nodes coincide and their weights cancel, so the
/// `1/α` term is dropped.
pub fn hout_condition(p: &HoutParams) -> f64 {
    let alpha_term = if p.mu_hat_cube_norm > 0.0 {
        1.0 / p.alpha
    } else {
        0.0
    };
    p.center_weight().abs()
        + alpha_term
        + p.dim() as f64 / (p.beta * p.beta)
        + p.skew_terms() as f64 / p.gamma.powi(3)
        + p.kurt_terms() as f64 / p.delta.powi(4)
}
