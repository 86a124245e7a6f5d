use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A measure, matrix or symbol violates one of its structural invariants.
    #[error("validation failed: {0}")]
    Validation(String),

    /// A scalar or size argument is outside the documented range.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A principal-value evaluation point sits within the cutoff of an atom.
    #[error("evaluation angle {eta} lies within {cutoff} of atom {index} at {angle}")]
    Singularity {
        index: usize,
        angle: f64,
        eta: f64,
        cutoff: f64,
    },

    /// The moment sequence is too short for the requested radius.
    #[error("moment truncation S = {available} is too short for r = {r}; need S >= {required}")]
    Truncation {
        r: f64,
        available: usize,
        required: usize,
    },

    /// Toeplitz moment matrix is not positive semidefinite.
    #[error("moment sequence is not positive definite: Toeplitz eigenvalue {min_eigenvalue:e}")]
    InvalidMoments { min_eigenvalue: f64 },

    /// A fit could not be carried out on the supplied data.
    #[error("cannot fit exponent: {0}")]
    Fit(String),

    /// Request exceeds the memory budget of the routine.
    #[error("resource limit: {0}")]
    Resource(String),

    /// Configuration text could not be parsed or is inconsistent.
    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
