use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric failure in {context}: {diagnostics}")]
    NumericFailure {
        context: &'static str,
        diagnostics: String,
    },

    #[error("capacity exceeded for {what}: requested {requested}, cap {cap}")]
    Capacity {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("construction failed for {what}: measured {measured:.3e} exceeds bound {bound:.3e}")]
    ConstructionFailure {
        what: &'static str,
        measured: f64,
        bound: f64,
    },

    #[error("precision failure for {what}: {detail}")]
    PrecisionFailure { what: &'static str, detail: String },

    #[error("optimization did not converge after {iterations} iterations (objective {objective:.6e}, gap {gap:.3e})")]
    OptimizationFailure {
        iterations: usize,
        objective: f64,
        gap: f64,
    },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("sampling budget exhausted: kept {kept} of {wanted} after {drawn} draws (budget {budget})")]
    Budget {
        kept: usize,
        wanted: usize,
        drawn: u64,
        budget: u64,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
