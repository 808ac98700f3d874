//! File formats shared by the library and the `hout` binary.
//!
//! JSON documents use the serde layouts of the owning types. CSV files have
//! a header row, a fixed column order and numbers written with 17
//! significant digits, so output bytes depend only on the inputs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::decomp::Rank1Decomposition;
use crate::error::{Error, Result};
use crate::experiments::{PolyStudyReport, SkillReport};
use crate::sigma::{Generator, MomentSet, SigmaEnsemble};
use crate::tensor::Vector;

/// Header of [`residual_csv`].
pub const RESIDUAL_HEADER: &str = "iteration,norm,ratio";
/// Header of [`poly_csv`].
pub const POLY_HEADER: &str =
    "n,c,method,param,mean_estimate,var_estimate,mc_mean,mc_var,mean_error,var_error,mean_se,var_se";
/// Header of [`skill_csv`].
pub const SKILL_HEADER: &str = "step,time,\
hout_mean,hout_cov,hout_skew,hout_kurt,sut_mean,sut_cov,sut_skew,sut_kurt";

/// 17 significant digits in scientific notation.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    fs::write(path, to_json(value)?)?;
    Ok(())
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

pub fn read_moments(path: impl AsRef<Path>) -> Result<MomentSet> {
    read_json(path)
}

/// `index,weight,x_1,…,x_d`, one row per node in index order.
pub fn ensemble_csv(e: &SigmaEnsemble) -> String {
    let mut out = String::from("index,weight");
    for j in 1..=e.dim() {
        let _ = write!(out, ",x_{j}");
    }
    out.push('\n');
    for ((i, w), x) in e.indices().zip(&e.weights).zip(&e.nodes) {
        let _ = write!(out, "{i},{}", num(*w));
        for v in x.iter() {
            let _ = write!(out, ",{}", num(*v));
        }
        out.push('\n');
    }
    out
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EnsembleFile {
    meta: Generator,
    dim: usize,
    indices: Vec<i64>,
    weights: Vec<f64>,
    nodes: Vec<Vec<f64>>,
}

/// Reads the JSON written by [`ensemble_json`].
pub fn read_ensemble(path: impl AsRef<Path>) -> Result<SigmaEnsemble> {
    let f: EnsembleFile = read_json(path)?;
    if f.nodes.len() != f.weights.len() || f.indices.len() != f.weights.len() {
        return Err(Error::Shape(format!(
            "{} nodes, {} weights and {} indices",
            f.nodes.len(),
            f.weights.len(),
            f.indices.len()
        )));
    }
    if f.nodes.is_empty() {
        return Err(Error::InvalidInput("ensemble has no nodes".into()));
    }
    let first = f.meta.first_index();
    if f.indices
        .iter()
        .enumerate()
        .any(|(i, &x)| x != first + i as i64)
    {
        return Err(Error::InvalidInput(
            "indices are not consecutive from the first index".into(),
        ));
    }
    let mut nodes = Vec::with_capacity(f.nodes.len());
    for (i, n) in f.nodes.into_iter().enumerate() {
        if n.len() != f.dim {
            return Err(Error::Shape(format!(
                "node {i} has length {}, expected {}",
                n.len(),
                f.dim
            )));
        }
        if n.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index: i });
        }
        nodes.push(Vector::from_vec(n));
    }
    if let Some(index) = f.weights.iter().position(|w| !w.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    Ok(SigmaEnsemble {
        nodes,
        weights: f.weights,
        meta: f.meta,
    })
}

/// Reads samples from CSV: a header row, then one sample per row.
pub fn read_samples_csv(path: impl AsRef<Path>) -> Result<Vec<Vector>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("empty samples file".into()))?;
    let d = header.split(',').count();
    let mut out = Vec::new();
    for (row, line) in lines.enumerate() {
        let vals = line
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::InvalidInput(format!("row {}: {e}", row + 1)))?;
        if vals.len() != d {
            return Err(Error::Shape(format!(
                "row {} has {} columns, header has {d}",
                row + 1,
                vals.len()
            )));
        }
        out.push(Vector::from_vec(vals));
    }
    Ok(out)
}

#[derive(Serialize)]
struct EnsembleRepr<'a> {
    meta: &'a Generator,
    dim: usize,
    indices: Vec<i64>,
    weights: &'a [f64],
    nodes: Vec<&'a [f64]>,
}

/// JSON mirror of [`ensemble_csv`] including the generator parameters.
pub fn ensemble_json(e: &SigmaEnsemble) -> Result<String> {
    to_json(&EnsembleRepr {
        meta: &e.meta,
        dim: e.dim(),
        indices: e.indices().collect(),
        weights: &e.weights,
        nodes: e.nodes.iter().map(|n| n.as_slice()).collect(),
    })
}

/// `iteration,norm,ratio`; row 0 is the input norm and has an empty ratio.
pub fn residual_csv(d: &Rank1Decomposition) -> String {
    let mut out = format!("{RESIDUAL_HEADER}\n");
    let ratios = d.ratios();
    for (i, r) in d.residual_norms.iter().enumerate() {
        let ratio = if i == 0 {
            String::new()
        } else {
            num(ratios[i - 1])
        };
        let _ = writeln!(out, "{i},{},{ratio}", num(*r));
    }
    out
}

/// One row per sweep point of the polynomial study.
pub fn poly_csv(r: &PolyStudyReport) -> String {
    let mut out = format!("{POLY_HEADER}\n");
    for row in &r.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            row.n,
            num(row.c),
            row.method.as_str(),
            num(row.param),
            num(row.mean_estimate),
            num(row.var_estimate),
            num(row.mc_mean),
            num(row.mc_var),
            num(row.mean_error),
            num(row.var_error),
            num(row.mean_se),
            num(row.var_se),
        );
    }
    out
}

/// One row per forecast step of the Lorenz study.
pub fn skill_csv(r: &SkillReport) -> String {
    let mut out = format!("{SKILL_HEADER}\n");
    for s in &r.steps {
        let _ = write!(out, "{},{}", s.step, num(s.time));
        for e in s.hout.as_array().iter().chain(s.sut.as_array().iter()) {
            let _ = write!(out, ",{}", num(*e));
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct PolySummary<'a> {
    tau: f64,
    dim: usize,
    ensemble_size: usize,
    seed: u64,
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    moments: &'a MomentSet,
    polynomials: Vec<PolyCoefficients>,
    rows: usize,
}

#[derive(Serialize)]
struct PolyCoefficients {
    n: u32,
    a: Vec<f64>,
    b: Vec<f64>,
}

fn rows_of(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

/// Study inputs (matrices, coefficients, input moments) as JSON.
pub fn poly_summary_json(r: &PolyStudyReport) -> Result<String> {
    to_json(&PolySummary {
        tau: r.tau,
        dim: r.spec.dim(),
        ensemble_size: r.spec.ensemble_size,
        seed: r.spec.seed,
        a: rows_of(&r.spec.a),
        b: rows_of(&r.spec.b),
        moments: &r.moments,
        polynomials: r
            .polys
            .iter()
            .map(|p| PolyCoefficients {
                n: p.n,
                a: p.a.as_slice().to_vec(),
                b: p.b.as_slice().to_vec(),
            })
            .collect(),
        rows: r.rows.len(),
    })
}
