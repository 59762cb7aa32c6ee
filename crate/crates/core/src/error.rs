use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("case file not found: {}", path.display())]
    CaseNotFound { path: PathBuf },

    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("schema error in `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("invalid case: {0}")]
    Validation(String),

    #[error("branch {branch} has zero impedance")]
    ZeroImpedance { branch: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is singular to working precision")]
    Singular,

    #[error("zero pivot at row {row}")]
    ZeroPivot { row: usize },

    #[error("matrix is not Hermitian")]
    NotHermitian,

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("post-selection probability {probability:e} below threshold {threshold:e}")]
    PostSelection { probability: f64, threshold: f64 },

    #[error("step length underflow during step control")]
    StepUnderflow,

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("linear solve failed at interior point iteration {iteration}: {source}")]
    Backend {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid option: {0}")]
    InvalidOption(String),

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl Error {
    /// Short machine-readable tag for error reporting.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::CaseNotFound { .. } => "case_not_found",
            Error::Io { .. } => "io",
            Error::Syntax { .. } => "syntax",
            Error::Schema { .. } => "schema",
            Error::Validation(_) => "validation",
            Error::ZeroImpedance { .. } => "zero_impedance",
            Error::Dimension(_) => "dimension",
            Error::Singular => "singular",
            Error::ZeroPivot { .. } => "zero_pivot",
            Error::NotHermitian => "not_hermitian",
            Error::NotNormalized { .. } => "not_normalized",
            Error::InvalidCircuit(_) => "invalid_circuit",
            Error::PostSelection { .. } => "post_selection",
            Error::StepUnderflow => "step_underflow",
            Error::NonFinite(_) => "non_finite",
            Error::Backend { .. } => "backend",
            Error::InvalidOption(_) => "invalid_option",
            Error::Serialization(_) => "serialization",
        }
    }
}
