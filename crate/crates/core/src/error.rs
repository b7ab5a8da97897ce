use thiserror::Error;

/// Failure modes shared across the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Parameters sit exactly on a degenerate boundary (e.g. φ = 2θ).
    #[error("degenerate boundary: {0}")]
    Boundary(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("singular or degenerate matrix: {0}")]
    Singular(String),

    /// Iterative procedure did not reach its tolerance; carries the residual trace.
    #[error("no convergence after {iterations} iterations (residuals {residuals:?})")]
    Convergence {
        iterations: usize,
        residuals: Vec<f64>,
    },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("no peak found: {0}")]
    NoPeak(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("extraction failed: {0}")]
    Extraction(String),

    /// Requested problem exceeds a configured size limit.
    #[error("resource limit exceeded: {0}")]
    Resource(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
