use thiserror::Error;

use crate::decomp::Rank1Decomposition;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("unsupported tensor order {0} (expected 2, 3 or 4)")]
    OrderRange(usize),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("tensor is not symmetric (max deviation {deviation:e}, allowed {allowed:e})")]
    Asymmetric { deviation: f64, allowed: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e} <= {tol:e})")]
    NotPositiveDefinite { min_eigenvalue: f64, tol: f64 },

    #[error(
        "rank-1 decomposition used {} terms without reaching tolerance (residual {:e})",
        .partial.terms.len(),
        .partial.residual()
    )]
    BudgetExceeded { partial: Box<Rank1Decomposition> },

    #[error(
        "rank-1 decomposition stalled after {} terms (residual {:e}); power method found no dominant eigenpair",
        .partial.terms.len(),
        .partial.residual()
    )]
    Stalled { partial: Box<Rank1Decomposition> },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::OrderRange(_) => "order_range",
            Error::Shape(_) => "shape",
            Error::Asymmetric { .. } => "asymmetric",
            Error::Degenerate(_) => "degenerate",
            Error::NotPositiveDefinite { .. } => "not_positive_definite",
            Error::BudgetExceeded { .. } => "budget_exceeded",
            Error::Stalled { .. } => "stalled",
            Error::NonFinite { .. } => "non_finite",
            Error::InvalidInput(_) => "invalid_input",
            Error::Parameter(_) => "parameter",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
