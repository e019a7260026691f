//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an operation argument was violated.
    #[error("domain error: {0}")]
    Domain(String),

    /// A point failed the manifold embedding constraint.
    #[error("point is off the manifold by {distance:.3e} (tolerance {tolerance:.1e})")]
    OffManifold { distance: f64, tolerance: f64 },

    /// The kNN bandwidth degenerated to zero at an evaluation point.
    #[error("degenerate evaluation point {index}: kNN radius is zero (>= k duplicate samples)")]
    DegeneratePoint { index: usize },

    /// Two quadrature refinement levels disagreed beyond tolerance.
    #[error("quadrature did not converge: {0}")]
    QuadratureNonconvergence(String),

    /// A run configuration failed validation.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
