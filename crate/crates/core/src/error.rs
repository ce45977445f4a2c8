use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("steiner limit exceeded: |S| = {size} > {limit}")]
    SteinerLimitExceeded { size: usize, limit: usize },

    #[error("invalid volume: {0}")]
    InvalidVolume(String),

    #[error("invalid site space: {0}")]
    InvalidSiteSpace(String),

    #[error("operator support {support:?} is not contained in {target:?}")]
    SupportNotContained { support: Vec<usize>, target: Vec<usize> },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("gap closed: {0}")]
    GapClosed(String),

    #[error("operator is not frustration-free: {0}")]
    NotFrustrationFree(String),

    #[error("operator is not purely non-diagonal: {0}")]
    NotNonDiagonal(String),

    #[error("generator too large for the certified exponential series: |A|_mu' = {norm:.3e} > {limit:.3e}")]
    GeneratorTooLarge { norm: f64, limit: f64 },

    #[error("flow did not converge after {iterations} iterations (v_n = {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("single-site generator at site {site} is not self-adjoint in the weighted inner product (asymmetry {asymmetry:.3e})")]
    NotSelfAdjointGenerator { site: usize, asymmetry: f64 },

    #[error("generator does not annihilate the identity (residual {0:.3e})")]
    IdentityNotAnnihilated(f64),

    #[error("kernel is degenerate: {0}")]
    DegenerateKernel(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("schema error in `{field}`: {reason}")]
    Schema { field: String, reason: String },

    #[error("json error at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn schema(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Schema { field: field.into(), reason: reason.into() }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json { line: e.line(), column: e.column(), message: e.to_string() }
    }
}
