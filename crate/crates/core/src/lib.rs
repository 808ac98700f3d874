//! Sigma-point quadrature that matches the first four moments of a
//! multivariate distribution.
//!
//! The crate is organized bottom-up:
//!
//! * [`tensor`]: dense symmetric tensors, tensor powers, mode products,
//!   unfoldings.
//! * [`decomp`]: tensor eigenpairs by the higher order power method and the
//!   greedy approximate rank-1 decomposition, with its convergence-rate and
//!   entry-bound diagnostics.
//! * [`sigma`]: moment sets, the scaled unscented transform, the higher order
//!   unscented transform and propagation of ensembles through functions.
//! * [`experiments`]: non-Gaussian polynomial studies and Lorenz-63 forecast
//!   skill against a Monte Carlo reference.
//! * [`io`]: CSV and JSON formats shared with the command-line tool.
//!
//! ```
//! use hout::sigma::{empirical_moments, hout_transform, HoutOptions};
//! use hout::tensor::Vector;
//!
//! let samples: Vec<Vector> = [0.0, 1.0, 1.0, 2.0, 5.0]
//!     .iter()
//!     .map(|&x| Vector::from_vec(vec![x]))
//!     .collect();
//! let m = empirical_moments(&samples, None)?;
//! let (ensemble, _) = hout_transform(&m, &HoutOptions::with_tau(1e-6))?;
//! let fourth = ensemble.expectation(|x| (x[0] - m.mean[0]).powi(4));
//! assert!((fourth - m.kurtosis.entries()[0]).abs() < 1e-6);
//! # Ok::<(), hout::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decomp;
pub mod error;
pub mod experiments;
pub mod io;
pub mod sigma;
pub mod tensor;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book;
