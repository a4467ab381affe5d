use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension {0} (only N = 2 is implemented)")]
    UnsupportedDimension(usize),

    #[error("quadrature degree {0} exceeds the supported maximum {1}")]
    QuadratureDegree(usize, usize),

    #[error("mesh format error: {0}")]
    MeshFormat(String),

    #[error("non-manifold facet ({0}, {1}) shared by more than two elements")]
    NonManifold(usize, usize),

    #[error("element {0} has non-positive orientation (det A = {1:.3e})")]
    InvertedElement(usize, f64),

    #[error("test degree r = {r} violates r >= p + N = {min} (p = {p}, N = 2)")]
    EnrichmentTooSmall { p: usize, r: usize, min: usize },

    #[error(
        "{context}: matrix is singular or numerically rank deficient (sigma_min = {sigma_min:.3e})"
    )]
    Singular { context: String, sigma_min: f64 },

    #[error("matrix is not symmetric positive definite (pivot {pivot}, value {value:.3e})")]
    NotSpd { pivot: usize, value: f64 },

    #[error("iteration did not converge after {iters} iterations (last value {last:.6e})")]
    NoConvergence { iters: usize, last: f64 },

    #[error("config error ({code}): {message}")]
    Config { code: i32, message: String },

    #[error("{0}")]
    Invalid(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit code used by the CLI for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { code, .. } => *code,
            _ => 1,
        }
    }

    pub(crate) fn config(code: i32, message: impl Into<String>) -> Self {
        Error::Config {
            code,
            message: message.into(),
        }
    }
}
