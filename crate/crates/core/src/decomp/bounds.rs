//! Entry bounds on the largest-magnitude eigenvalue and the resulting
//! linear convergence rate of repeated rank-1 subtraction.
//!
//! For a symmetric tensor the largest eigenvalue in absolute value is
//! `λ_maxabs = max_{‖v‖=1} |T(v,…,v)|`. It dominates every entry up to a
//! constant: `c = 1` for matrices, `c₃ = 2/(3+4√2+√3)` for 3-tensors and
//! `c₄ = 6/323` for 4-tensors. Each greedy subtraction of the dominant
//! eigenpair then shrinks the Frobenius residual by at least
//! `r = √(1 − c²/d^k)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tensor::{SymTensor, Vector};

/// Entry-bound constants for orders 3 and 4.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundConstants {
    pub c3: f64,
    pub c4: f64,
}

impl BoundConstants {
    pub fn new() -> Self {
        BoundConstants {
            c3: 2.0 / (3.0 + 4.0 * 2f64.sqrt() + 3f64.sqrt()),
            c4: 6.0 / 323.0,
        }
    }

    /// Constant for a given order; matrices use `c = 1`.
    pub fn for_order(&self, order: usize) -> Result<f64> {
        match order {
            2 => Ok(1.0),
            3 => Ok(self.c3),
            4 => Ok(self.c4),
            k => Err(Error::OrderRange(k)),
        }
    }
}

impl Default for BoundConstants {
    fn default() -> Self {
        Self::new()
    }
}

/// `r = √(1 − c_k²/d^k)`.
pub fn rate_bound(order: usize, dim: usize) -> Result<f64> {
    let c = BoundConstants::new().for_order(order)?;
    if dim == 0 {
        return Err(Error::Shape("dimension must be at least 1".into()));
    }
    let dk = (dim as f64).powi(order as i32);
    Ok((1.0 - c * c / dk).max(0.0).sqrt())
}

/// Outcome of [`verify_entry_bound`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntryBound {
    pub lambda_maxabs: f64,
    pub maximizer: Vec<f64>,
    pub max_entry: f64,
    /// `λ_maxabs / max|entry|` (infinite for the zero tensor).
    pub ratio: f64,
    pub constant: f64,
}

impl EntryBound {
    pub fn holds(&self) -> bool {
        self.ratio >= self.constant
    }
}

/// Largest `|T(v,…,v)|` over the unit sphere, by grid search followed by
/// shifted power ascent from the best grid points. Only `d ≤ 3`.
///
/// The returned value is attained at the returned unit vector, so it never
/// overestimates the true maximum.
pub fn sphere_max_abs(t: &SymTensor, grid_resolution: usize) -> Result<(f64, Vector)> {
    let d = t.dim();
    if d > 3 {
        return Err(Error::Shape(format!(
            "sphere search supports d ≤ 3, got {d}"
        )));
    }
    let res = grid_resolution.max(8);
    let starts: Vec<Vector> = match d {
        1 => vec![Vector::from_vec(vec![1.0])],
        2 => (0..res)
            .map(|i| {
                // |f(−v)| = |f(v)|, so a half circle suffices.
                let th = std::f64::consts::PI * i as f64 / res as f64;
                Vector::from_vec(vec![th.cos(), th.sin()])
            })
            .collect(),
        _ => {
            let mut pts = Vec::with_capacity(res * res + 2);
            pts.push(Vector::from_vec(vec![0.0, 0.0, 1.0]));
            for i in 1..res {
                let th = std::f64::consts::PI * i as f64 / res as f64;
                for j in 0..(2 * res) {
                    let ph = std::f64::consts::PI * j as f64 / res as f64;
                    pts.push(Vector::from_vec(vec![
                        th.sin() * ph.cos(),
                        th.sin() * ph.sin(),
                        th.cos(),
                    ]));
                }
            }
            pts
        }
    };

    let mut scored: Vec<(f64, Vector)> =
        starts.into_iter().map(|v| (t.form(&v).abs(), v)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    scored.truncate(12);

    let shift = t.order() as f64 * t.frobenius_norm();
    let mut best = (0.0, scored[0].1.clone());
    for (_, v0) in scored {
        let (val, v) = shifted_ascent(t, v0, shift);
        if val > best.0 {
            best = (val, v);
        }
    }
    Ok(best)
}

/// Monotone ascent of `|T(v,…,v)|` on the sphere: `v ← normalize(±T v^{k−1} + shift·v)`.
fn shifted_ascent(t: &SymTensor, mut v: Vector, shift: f64) -> (f64, Vector) {
    let mut val = t.form(&v);
    if shift == 0.0 {
        return (val.abs(), v);
    }
    for _ in 0..5000 {
        let sgn = if val < 0.0 { -1.0 } else { 1.0 };
        let w = t.gradient_form(&v) * sgn + &v * shift;
        let n = w.norm();
        if n == 0.0 {
            break;
        }
        let next = w / n;
        let next_val = t.form(&next);
        let done = (next_val.abs() - val.abs()).abs() <= 1e-16 * shift;
        if next_val.abs() >= val.abs() {
            v = next;
            val = next_val;
        }
        if done {
            break;
        }
    }
    (val.abs(), v)
}

/// Checks `λ_maxabs ≥ c_k · max|T_{i…}|` numerically via [`sphere_max_abs`].
pub fn verify_entry_bound(t: &SymTensor, grid_resolution: usize) -> Result<EntryBound> {
    let constant = BoundConstants::new().for_order(t.order())?;
    let (lambda_maxabs, v) = sphere_max_abs(t, grid_resolution)?;
    let max_entry = t.max_abs_entry();
    let ratio = if max_entry > 0.0 {
        lambda_maxabs / max_entry
    } else {
        f64::INFINITY
    };
    Ok(EntryBound {
        lambda_maxabs,
        maximizer: v.as_slice().to_vec(),
        max_entry,
        ratio,
        constant,
    })
}
