use thiserror::Error;

pub type Result<T, E = BergmanError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum BergmanError {
    #[error("matrix is not positive-definite: pivot {pivot} is {value:e}")]
    Definiteness { pivot: usize, value: f64 },

    #[error("kernel singularity: {0}")]
    Singularity(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("point outside domain: {0}")]
    Domain(String),

    #[error("Gram matrix ill-conditioned: smallest/largest eigenvalue ratio {ratio:e} (threshold {threshold:e})")]
    Conditioning { ratio: f64, threshold: f64 },

    #[error("finite-difference stencil leaves the domain at {point} (step {step:e}); try a smaller step")]
    Geometry { point: String, step: f64 },

    #[error("kernel K(z, p) vanishes at z = {0}; representative coordinates undefined there")]
    ZeroDivisor(String),

    #[error("metric is not positive-definite; eigenvalues {0:?}")]
    IndefiniteMetric(Vec<f64>),

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("diagnostic: {0}")]
    Diagnostic(String),

    #[error("malformed scenario `{name}`: missing fields {missing:?}")]
    Validation { name: String, missing: Vec<String> },

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
