use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("homological degree k={k} out of range for dimension d={d} (need 1 <= k < d)")]
    DegreeOutOfRange { k: usize, d: usize },

    #[error("rejection sampler gave up after {attempts} attempts")]
    SamplerExhausted { attempts: u64 },

    #[error("density value {value} exceeds the declared sup norm {sup_norm}")]
    EnvelopeViolated { value: f64, sup_norm: f64 },

    #[error("simplex has a repeated vertex {0}")]
    DuplicateVertex(usize),

    #[error("expected {expected} points, got {got}")]
    WrongCardinality { expected: usize, got: usize },

    #[error("simplex budget of {limit} exceeded")]
    SimplexBudget { limit: usize },

    #[error("radius {t} lies beyond the complex cutoff {cutoff}")]
    BeyondCutoff { t: f64, cutoff: f64 },

    #[error("filtration order violated at position {position}")]
    UnsortedFiltration { position: usize },

    #[error("covariance matrix is indefinite (eigenvalue {eigenvalue} vs scale {scale})")]
    IndefiniteCovariance { eigenvalue: f64, scale: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("n={n}, replicate {replicate}: {source}")]
    Replicate { n: f64, replicate: u64, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the failure is a resource limit rather than bad input.
    pub fn is_resource(&self) -> bool {
        match self {
            Error::SimplexBudget { .. } | Error::SamplerExhausted { .. } => true,
            Error::Replicate { source, .. } => source.is_resource(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
