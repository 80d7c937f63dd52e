use thiserror::Error;

/// Which sign part of a field a diagnostic refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SignPart {
    Positive,
    Negative,
}

impl std::fmt::Display for SignPart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SignPart::Positive => f.write_str("positive"),
            SignPart::Negative => f.write_str("negative"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("field contains non-finite values")]
    NonFinite,
    #[error("order alpha = {alpha} outside (0, {dimension})")]
    AlphaOutOfRange { alpha: f64, dimension: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("operation requires a nonzero field")]
    ZeroField,
    #[error("{0} part of the field vanishes")]
    SignPartVanished(SignPart),
    #[error(
        "Newton iteration for the nodal scales did not converge after {iterations} iterations"
    )]
    NewtonFailed { iterations: usize },
    #[error("shooting bracket not found for N = {dimension}, q = {q}")]
    ShootingBracket { dimension: usize, q: f64 },
    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    EigenNotConverged { iterations: usize, residual: f64 },
    #[error("solver exceeded {iterations} iterations (residual {residual:e})")]
    MaxIterations { iterations: usize, residual: f64 },
    #[error("iterate collapsed to zero")]
    Collapse,
    #[error("two-bump fit needs two peaks, found {found}")]
    TooFewPeaks { found: usize },
    #[error("malformed field file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
