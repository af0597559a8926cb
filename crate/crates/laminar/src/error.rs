//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violated a precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A value left the function's mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The hypernetwork produced a non-finite flow parameter.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// The ODE state became non-finite during integration.
    #[error("integration diverged at step {step} of {n_steps} (t = {t})")]
    Divergence { step: usize, n_steps: usize, t: f64 },

    /// A matrix required to be symmetric positive definite was not.
    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    /// An iterative special-function evaluation failed to converge.
    #[error("special function did not converge: {0}")]
    NoConvergence(String),

    /// Dimension mismatch between two pipeline artifacts.
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    Dimension {
        expected: usize,
        got: usize,
        context: String,
    },

    /// The density graph is disconnected but full connectivity was required.
    #[error(
        "graph has {n_components} connected components (sizes {sizes:?}); \
         distances between components are undefined — increase k (currently {k})"
    )]
    Disconnected {
        n_components: usize,
        sizes: Vec<usize>,
        k: usize,
    },

    /// A persisted file had an unexpected layout or version.
    #[error("bad file format: {0}")]
    BadFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
