//! Tensor eigenpairs and the approximate rank-1 decomposition.
//!
//! [`approx_rank1_decompose`] repeatedly subtracts the best rank-1
//! approximation `λ v^{⊗k}` found by the higher order power method until the
//! Frobenius norm of the residual drops below a tolerance. For any unit `v`
//! with `λ = T(v,…,v)` the residual satisfies
//! `‖T − λ v^{⊗k}‖²_F = ‖T‖²_F − λ²`, so every step with `λ ≠ 0` strictly
//! shrinks the residual; when `λ` is the dominant eigenvalue the shrink
//! factor is at most [`rate_bound`].

mod bounds;
mod hopm;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use bounds::{rate_bound, sphere_max_abs, verify_entry_bound, BoundConstants, EntryBound};
pub use hopm::{hopm, hopm_from, leading_left_singular_vector, EigenPair, HopmOptions};

use crate::error::{Error, Result};
use crate::tensor::{SymTensor, Vector};

/// A step whose residual ratio reaches `1 − STALL_GAP` counts as stalled.
const STALL_GAP: f64 = 1e-14;
const STALL_LIMIT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn of(x: f64) -> Sign {
        if x < 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        match s {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;

    fn try_from(x: i8) -> std::result::Result<Self, String> {
        match x {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(format!("sign must be 1 or -1, got {other}")),
        }
    }
}

/// One term `s · v^{⊗k}` of a decomposition; `v` carries the magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct Rank1Term {
    pub sign: Sign,
    pub vector: Vector,
}

/// Turns an eigenpair into a term: `v = |λ|^{1/k} u`, `s = sign(λ)`. For odd
/// order the sign is folded into the vector, since `(−v)^{⊗k} = −v^{⊗k}`.
pub fn rank1_term(pair: &EigenPair, order: usize) -> Rank1Term {
    let mag = pair.eigenvalue.abs().powf(1.0 / order as f64);
    let sign = Sign::of(pair.eigenvalue);
    if order % 2 == 1 {
        Rank1Term {
            sign: Sign::Plus,
            vector: &pair.vector * (mag * sign.value()),
        }
    } else {
        Rank1Term {
            sign,
            vector: &pair.vector * mag,
        }
    }
}

/// Best rank-1 approximation of `T` as a signed term.
pub fn best_rank1(t: &SymTensor, opts: &HopmOptions) -> Result<Rank1Term> {
    Ok(rank1_term(&hopm(t, opts)?, t.order()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompOptions {
    /// Target Frobenius norm of the residual.
    pub tol: f64,
    pub hopm: HopmOptions,
    /// Term budget; `None` means `10·d^k`.
    pub max_terms: Option<usize>,
    /// Random starts tried when a step stalls.
    pub restarts: usize,
    pub seed: u64,
}

impl DecompOptions {
    pub fn with_tol(tol: f64) -> Self {
        DecompOptions {
            tol,
            ..Default::default()
        }
    }
}

impl Default for DecompOptions {
    fn default() -> Self {
        DecompOptions {
            tol: 1e-10,
            hopm: HopmOptions::default(),
            max_terms: None,
            restarts: 8,
            seed: 0,
        }
    }
}

/// `T ≈ Σ sᵢ vᵢ^{⊗k}` with the residual history.
#[derive(Debug, Clone, PartialEq)]
pub struct Rank1Decomposition {
    pub order: usize,
    pub dim: usize,
    pub terms: Vec<Rank1Term>,
    /// Eigenvalue subtracted at each step, aligned with `terms`.
    pub eigenvalues: Vec<f64>,
    /// `‖T_ℓ‖_F` for `ℓ = 0..=terms.len()`.
    pub residual_norms: Vec<f64>,
    pub rate_bound: f64,
    /// Steps whose power iteration hit its budget.
    pub unconverged_steps: usize,
}

impl Rank1Decomposition {
    /// Final residual norm.
    pub fn residual(&self) -> f64 {
        *self.residual_norms.last().unwrap_or(&0.0)
    }

    /// Successive ratios `‖T_{ℓ+1}‖ / ‖T_ℓ‖`.
    pub fn ratios(&self) -> Vec<f64> {
        self.residual_norms
            .windows(2)
            .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
            .collect()
    }

    /// `Σ sᵢ vᵢ^{⊗k}`.
    pub fn reconstruct(&self) -> SymTensor {
        let mut t = SymTensor::zeros(self.order, self.dim).expect("valid order and dim");
        for term in &self.terms {
            t.add_scaled_power(term.sign.value(), &term.vector)
                .expect("term dimension matches");
        }
        t
    }

    pub fn signs(&self) -> impl Iterator<Item = f64> + '_ {
        self.terms.iter().map(|t| t.sign.value())
    }
}

#[derive(Serialize)]
struct DecompositionRepr<'a> {
    order: usize,
    signs: Vec<i8>,
    vectors: Vec<&'a [f64]>,
    residual_norms: &'a [f64],
    rate_bound: f64,
}

impl Serialize for Rank1Decomposition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DecompositionRepr {
            order: self.order,
            signs: self.terms.iter().map(|t| t.sign.into()).collect(),
            vectors: self.terms.iter().map(|t| t.vector.as_slice()).collect(),
            residual_norms: &self.residual_norms,
            rate_bound: self.rate_bound,
        }
        .serialize(s)
    }
}

fn random_unit(dim: usize, rng: &mut ChaCha8Rng) -> Vector {
    loop {
        let v = Vector::from_fn(dim, |_, _| StandardNormal.sample(rng));
        let n = v.norm();
        if n > 1e-8 {
            return v / n;
        }
    }
}

/// Greedy rank-1 decomposition of a symmetric tensor down to `opts.tol`.
///
/// When a step fails to shrink the residual (ratio `≥ 1 − 1e−14`) the power
/// method is restarted from `opts.restarts` seeded random unit vectors and
/// the largest `|λ|` is kept. Three consecutive stalled steps abort with
/// [`Error::Stalled`]; running out of terms aborts with
/// [`Error::BudgetExceeded`]. Both carry the partial decomposition.
pub fn approx_rank1_decompose(t: &SymTensor, opts: &DecompOptions) -> Result<Rank1Decomposition> {
    if !(opts.tol > 0.0) {
        return Err(Error::Parameter(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let order = t.order();
    let dim = t.dim();
    let max_terms = opts.max_terms.unwrap_or_else(|| 10 * dim.pow(order as u32));
    let mut dec = Rank1Decomposition {
        order,
        dim,
        terms: Vec::new(),
        eigenvalues: Vec::new(),
        residual_norms: vec![t.frobenius_norm()],
        rate_bound: rate_bound(order, dim)?,
        unconverged_steps: 0,
    };
    let mut residual = t.clone();
    let mut norm = dec.residual_norms[0];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut stalls = 0;

    while norm > opts.tol {
        if dec.terms.len() >= max_terms {
            return Err(Error::BudgetExceeded {
                partial: Box::new(dec),
            });
        }
        let mut pair = hopm(&residual, &opts.hopm)?;
        let mut next = subtract_term(&residual, &pair);
        let mut next_norm = next.frobenius_norm();

        if next_norm >= (1.0 - STALL_GAP) * norm {
            for _ in 0..opts.restarts {
                let init = random_unit(dim, &mut rng);
                let cand = hopm_from(&residual, &init, &opts.hopm)?;
                if cand.eigenvalue.abs() > pair.eigenvalue.abs() {
                    pair = cand;
                }
            }
            next = subtract_term(&residual, &pair);
            next_norm = next.frobenius_norm();
        }

        if next_norm >= (1.0 - STALL_GAP) * norm {
            stalls += 1;
            if stalls >= STALL_LIMIT {
                return Err(Error::Stalled {
                    partial: Box::new(dec),
                });
            }
            if next_norm >= norm {
                continue;
            }
        } else {
            stalls = 0;
        }

        if !pair.converged {
            dec.unconverged_steps += 1;
        }
        dec.terms.push(rank1_term(&pair, order));
        dec.eigenvalues.push(pair.eigenvalue);
        dec.residual_norms.push(next_norm);
        residual = next;
        norm = next_norm;
    }
    Ok(dec)
}

/// `T − s·v^{⊗k}` with `(s, v)` from [`rank1_term`].
fn subtract_term(t: &SymTensor, pair: &EigenPair) -> SymTensor {
    let term = rank1_term(pair, t.order());
    let mut out = t.clone();
    out.add_scaled_power(-term.sign.value(), &term.vector)
        .expect("eigenvector has the tensor dimension");
    out
}
