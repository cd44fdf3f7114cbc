//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Unified error for belief arithmetic, policy scoring, and experiment I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// An input that must be finite was NaN or infinite.
    #[error("non-finite value {value} in {context}")]
    NonFinite { context: &'static str, value: f64 },

    /// Vector lengths disagree.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// Gaussian belief precisions must be strictly positive and finite.
    #[error("precision[{index}] = {value} is not strictly positive")]
    NonPositivePrecision { index: usize, value: f64 },

    /// A moment-matched variance collapsed to zero or below.
    #[error("updated variance[{index}] scaled by {factor} fell below the positivity floor")]
    VarianceFloor { index: usize, factor: f64 },

    /// Alternative sets must contain at least one arm.
    #[error("alternative set is empty")]
    EmptyAlternativeSet,

    /// The requested operation has no closed form for this link.
    #[error("{operation} does not support the {link} link")]
    UnsupportedLink {
        operation: &'static str,
        link: crate::links::Link,
    },

    /// Root finding ran out of iterations before meeting tolerance.
    #[error("bisection did not converge after {max_iter} iterations (last residual {residual:e})")]
    Convergence { max_iter: usize, residual: f64 },

    /// Invalid run configuration or data file contents.
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Rejects NaN and infinities with a named context.
pub(crate) fn ensure_finite(value: f64, context: &'static str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { context, value })
    }
}
