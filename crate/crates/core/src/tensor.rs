//! Dense symmetric tensors of order 2, 3 and 4.
//!
//! Entries are stored as a full `d^k` array in row-major order: the first
//! index varies slowest, so entry `(i₁,…,i_k)` lives at
//! `Σ_m i_m · d^(k−m)` (zero-based). The packed symmetric layout would save
//! memory but every target use has `d ≤ 20`.
//!
//! A [`SymTensor`] is always symmetric: constructors either verify symmetry
//! to a relative tolerance of `1e-12` against the Frobenius norm or average
//! the input over all index permutations.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense real vector used throughout the crate.
pub type Vector = DVector<f64>;

/// Relative tolerance of the symmetry check.
pub const SYMMETRY_TOL: f64 = 1e-12;

const MAX_ORDER: usize = 4;

/// A symmetric tensor `T ∈ ℝ^{d^k}` with `k ∈ {2, 3, 4}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TensorRepr", into = "TensorRepr")]
pub struct SymTensor {
    order: usize,
    dim: usize,
    entries: Vec<f64>,
}

/// JSON wire form: `{"order":k,"dim":d,"entries":[row-major flat array]}`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorRepr {
    order: usize,
    dim: usize,
    entries: Vec<f64>,
}

impl TryFrom<TensorRepr> for SymTensor {
    type Error = Error;

    fn try_from(r: TensorRepr) -> Result<Self> {
        SymTensor::from_entries(r.order, r.dim, r.entries)
    }
}

impl From<SymTensor> for TensorRepr {
    fn from(t: SymTensor) -> Self {
        TensorRepr {
            order: t.order,
            dim: t.dim,
            entries: t.entries,
        }
    }
}

/// Result of contracting one slot of a tensor against a vector.
#[derive(Debug, Clone, PartialEq)]
pub enum ModeProduct {
    Vector(Vector),
    Tensor(SymTensor),
}

impl ModeProduct {
    pub fn into_vector(self) -> Option<Vector> {
        match self {
            ModeProduct::Vector(v) => Some(v),
            ModeProduct::Tensor(_) => None,
        }
    }

    pub fn into_tensor(self) -> Option<SymTensor> {
        match self {
            ModeProduct::Tensor(t) => Some(t),
            ModeProduct::Vector(_) => None,
        }
    }
}

/// Result of contracting `k−1` or `k` slots against the same vector.
#[derive(Debug, Clone, PartialEq)]
pub enum Contraction {
    Vector(Vector),
    Scalar(f64),
}

fn check_order(order: usize) -> Result<()> {
    if (2..=MAX_ORDER).contains(&order) {
        Ok(())
    } else {
        Err(Error::OrderRange(order))
    }
}

fn check_len(order: usize, dim: usize, len: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::Shape("tensor dimension must be at least 1".into()));
    }
    let expected = dim.pow(order as u32);
    if len != expected {
        return Err(Error::Shape(format!(
            "order {order}, dim {dim} needs {expected} entries, got {len}"
        )));
    }
    Ok(())
}

/// Multi-index of a row-major flat position.
fn unflatten(mut flat: usize, order: usize, dim: usize) -> [usize; MAX_ORDER] {
    let mut idx = [0; MAX_ORDER];
    for slot in (0..order).rev() {
        idx[slot] = flat % dim;
        flat /= dim;
    }
    idx
}

fn flatten(idx: &[usize], dim: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * dim + i)
}

/// Flat position of the sorted (canonical) permutation of `flat`.
fn canonical(flat: usize, order: usize, dim: usize) -> usize {
    let mut idx = unflatten(flat, order, dim);
    idx[..order].sort_unstable();
    flatten(&idx[..order], dim)
}

fn frobenius(entries: &[f64]) -> f64 {
    entries.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl SymTensor {
    pub fn zeros(order: usize, dim: usize) -> Result<Self> {
        check_order(order)?;
        if dim == 0 {
            return Err(Error::Shape("tensor dimension must be at least 1".into()));
        }
        Ok(SymTensor {
            order,
            dim,
            entries: vec![0.0; dim.pow(order as u32)],
        })
    }

    /// Builds a tensor from row-major entries, rejecting input that is not
    /// symmetric within [`SYMMETRY_TOL`] relative to its Frobenius norm.
    pub fn from_entries(order: usize, dim: usize, entries: Vec<f64>) -> Result<Self> {
        check_order(order)?;
        check_len(order, dim, entries.len())?;
        if let Some(index) = entries.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let t = SymTensor {
            order,
            dim,
            entries,
        };
        let deviation = t.symmetry_deviation();
        let allowed = SYMMETRY_TOL * t.frobenius_norm();
        if deviation > allowed {
            return Err(Error::Asymmetric { deviation, allowed });
        }
        Ok(t)
    }

    /// Averages raw row-major entries over every permutation of the indices.
    pub fn symmetrize(order: usize, dim: usize, raw: &[f64]) -> Result<Self> {
        check_order(order)?;
        check_len(order, dim, raw.len())?;
        if let Some(index) = raw.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let n = raw.len();
        let canon: Vec<usize> = (0..n).map(|f| canonical(f, order, dim)).collect();
        // Orbit mean computed as offset from the canonical entry so that an
        // already-symmetric orbit is reproduced bit for bit.
        let mut offset = vec![0.0; n];
        let mut count = vec![0usize; n];
        for (f, &c) in canon.iter().enumerate() {
            offset[c] += raw[f] - raw[c];
            count[c] += 1;
        }
        let entries = canon
            .iter()
            .map(|&c| raw[c] + offset[c] / count[c] as f64)
            .collect();
        Ok(SymTensor {
            order,
            dim,
            entries,
        })
    }

    /// Order-2 tensor from a square matrix, symmetrizing it.
    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Shape(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let d = m.nrows();
        let raw: Vec<f64> = (0..d * d).map(|f| m[(f / d, f % d)]).collect();
        Self::symmetrize(2, d, &raw)
    }

    /// `v^{⊗k}` with entries `v_{i₁}⋯v_{i_k}`.
    pub fn tensor_power(v: &Vector, order: usize) -> Result<Self> {
        check_order(order)?;
        if v.is_empty() {
            return Err(Error::Shape(
                "cannot take the power of an empty vector".into(),
            ));
        }
        let mut entries = vec![1.0];
        for _ in 0..order {
            entries = entries
                .iter()
                .flat_map(|&a| v.iter().map(move |&x| a * x))
                .collect();
        }
        Ok(SymTensor {
            order,
            dim: v.len(),
            entries,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<f64> {
        self.entries
    }

    /// Entry at a zero-based multi-index.
    pub fn get(&self, idx: &[usize]) -> f64 {
        assert_eq!(idx.len(), self.order, "index length must equal the order");
        self.entries[flatten(idx, self.dim)]
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius(&self.entries)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&x| x == 0.0)
    }

    /// Largest absolute difference between an entry and its index-sorted twin.
    pub fn symmetry_deviation(&self) -> f64 {
        (0..self.entries.len())
            .map(|f| (self.entries[f] - self.entries[canonical(f, self.order, self.dim)]).abs())
            .fold(0.0, f64::max)
    }

    fn check_vector(&self, v: &Vector) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::Shape(format!(
                "vector of length {} against tensor of dimension {}",
                v.len(),
                self.dim
            )));
        }
        Ok(())
    }

    /// `T ×ₙ v` for a one-based mode `n`; the order drops by one.
    pub fn n_mode_product(&self, v: &Vector, mode: usize) -> Result<ModeProduct> {
        self.check_vector(v)?;
        if mode == 0 || mode > self.order {
            return Err(Error::Shape(format!(
                "mode {mode} out of range 1..={}",
                self.order
            )));
        }
        let d = self.dim;
        let inner = d.pow((self.order - mode) as u32);
        let outer = d.pow((mode - 1) as u32);
        let mut out = vec![0.0; outer * inner];
        for o in 0..outer {
            for (j, &vj) in v.iter().enumerate() {
                let base = (o * d + j) * inner;
                let dst = &mut out[o * inner..(o + 1) * inner];
                for (x, &t) in dst.iter_mut().zip(&self.entries[base..base + inner]) {
                    *x += t * vj;
                }
            }
        }
        Ok(if self.order == 2 {
            ModeProduct::Vector(Vector::from_vec(out))
        } else {
            ModeProduct::Tensor(SymTensor {
                order: self.order - 1,
                dim: d,
                entries: out,
            })
        })
    }

    /// Contracts `count ∈ {k−1, k}` slots against `v`: `k−1` gives the
    /// vector `T×₁v⋯×₁v`, `k` gives the scalar form `Σ T_{i₁…i_k} v_{i₁}⋯v_{i_k}`.
    pub fn multi_contract(&self, v: &Vector, count: usize) -> Result<Contraction> {
        self.check_vector(v)?;
        let k = self.order;
        if count + 1 == k {
            Ok(Contraction::Vector(self.gradient_form(v)))
        } else if count == k {
            Ok(Contraction::Scalar(self.form(v)))
        } else {
            Err(Error::Shape(format!(
                "can contract {} or {k} slots of an order-{k} tensor, not {count}",
                k - 1
            )))
        }
    }

    /// Contracts `vectors.len()` slots against the given vectors. By symmetry
    /// the choice of slots is immaterial. Returns the flat remainder (length
    /// `d^(k − vectors.len())`).
    pub(crate) fn contract_trailing(&self, vectors: &[&[f64]]) -> Vec<f64> {
        // Symmetry lets the vectors be absorbed through the leading index,
        // which turns each pass into contiguous axpy updates.
        let d = self.dim;
        let reduce = |src: &[f64], v: &[f64]| -> Vec<f64> {
            let len = src.len() / d;
            let mut out = vec![0.0; len];
            for (row, &a) in src.chunks_exact(len).zip(v) {
                for (o, &x) in out.iter_mut().zip(row) {
                    *o += a * x;
                }
            }
            out
        };
        let Some((first, rest)) = vectors.split_first() else {
            return self.entries.clone();
        };
        let mut cur = reduce(&self.entries, first);
        for v in rest {
            cur = reduce(&cur, v);
        }
        cur
    }

    /// `T v^{k−1}`, the vector appearing in the eigen-equation.
    pub fn gradient_form(&self, v: &Vector) -> Vector {
        let vs: Vec<&[f64]> = vec![v.as_slice(); self.order - 1];
        Vector::from_vec(self.contract_trailing(&vs))
    }

    /// `T(v, …, v)`.
    pub fn form(&self, v: &Vector) -> f64 {
        self.gradient_form(v).dot(v)
    }

    /// `d × d^{k−1}` unfolding: row `i₁`, column `Σ_{m≥2} i_m d^{m−2}`
    /// (zero-based), i.e. the trailing indices flattened column-major.
    pub fn unfold(&self) -> DMatrix<f64> {
        let d = self.dim;
        let cols = d.pow(self.order as u32 - 1);
        let mut m = DMatrix::zeros(d, cols);
        for (f, &x) in self.entries.iter().enumerate() {
            let idx = unflatten(f, self.order, d);
            m[(idx[0], unfold_column(&idx[1..self.order], d))] = x;
        }
        m
    }

    /// Inverse of [`SymTensor::unfold`]; the result must be symmetric.
    pub fn refold(order: usize, m: &DMatrix<f64>) -> Result<Self> {
        check_order(order)?;
        let d = m.nrows();
        if d == 0 || m.ncols() != d.pow(order as u32 - 1) {
            return Err(Error::Shape(format!(
                "a {}x{} matrix is not an order-{order} unfolding",
                m.nrows(),
                m.ncols()
            )));
        }
        let entries = (0..d.pow(order as u32))
            .map(|f| {
                let idx = unflatten(f, order, d);
                m[(idx[0], unfold_column(&idx[1..order], d))]
            })
            .collect();
        Self::from_entries(order, d, entries)
    }

    /// Order-2 tensor as a matrix.
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.order != 2 {
            return Err(Error::OrderRange(self.order));
        }
        Ok(DMatrix::from_row_slice(self.dim, self.dim, &self.entries))
    }

    /// `self += scale · v^{⊗k}`.
    pub fn add_scaled_power(&mut self, scale: f64, v: &Vector) -> Result<()> {
        self.check_vector(v)?;
        let p = SymTensor::tensor_power(v, self.order)?;
        for (a, b) in self.entries.iter_mut().zip(p.entries) {
            *a += scale * b;
        }
        Ok(())
    }

    /// Entrywise difference `self − other`.
    pub fn sub(&self, other: &SymTensor) -> Result<SymTensor> {
        if self.order != other.order || self.dim != other.dim {
            return Err(Error::Shape(format!(
                "order/dim ({}, {}) vs ({}, {})",
                self.order, self.dim, other.order, other.dim
            )));
        }
        Ok(SymTensor {
            order: self.order,
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn scaled(&self, s: f64) -> SymTensor {
        SymTensor {
            order: self.order,
            dim: self.dim,
            entries: self.entries.iter().map(|x| s * x).collect(),
        }
    }
}

fn unfold_column(trailing: &[usize], d: usize) -> usize {
    trailing.iter().rev().fold(0, |acc, &i| acc * d + i)
}
