//! Error type shared by every module of the crate.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A documented precondition was violated by the caller.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// CSV header does not match the expected column set.
    #[error("schema mismatch: missing columns {missing:?}, unexpected columns {extra:?}")]
    SchemaMismatch {
        missing: Vec<String>,
        extra: Vec<String>,
    },

    /// Extractor returned text that is not a usable sentiment object.
    #[error("malformed extractor response: {0}")]
    MalformedResponse(String),

    /// Remote extractor failed after retry exhaustion with fallback disabled.
    #[error("extractor unavailable: {0}")]
    ExtractorUnavailable(String),

    /// Column unsuitable for a fit (constant, too short).
    #[error("degenerate column: {0}")]
    DegenerateColumn(String),

    /// Covariance cannot support the requested number of components.
    #[error("rank deficient: {0}")]
    RankDeficient(String),

    /// Budget absent even after imputation.
    #[error("missing budget: {0}")]
    MissingBudget(String),

    /// Training loss left the finite range.
    #[error("non-finite loss: {0}")]
    NonFiniteLoss(String),

    #[error("empty dataset")]
    EmptyDataset,

    /// Tensor widths do not chain.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Checkpoint or state file written by an incompatible version/geometry.
    #[error("version mismatch: {0}")]
    VersionMismatch(String),

    /// Checkpoint failed checksum or structural validation.
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    /// Pipeline state file failed hash/format validation.
    #[error("corrupt state: {0}")]
    CorruptState(String),

    /// A class has fewer members than the requested fold count.
    #[error("insufficient class members: {0}")]
    InsufficientClassMembers(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("http error: {0}")]
    Http(#[from] reqwest::Error),
}

impl Error {
    /// Stable machine-readable tag for CLI error lines and exit-code mapping.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ContractViolation(_) => "contract_violation",
            Error::SchemaMismatch { .. } => "schema_mismatch",
            Error::MalformedResponse(_) => "malformed_response",
            Error::ExtractorUnavailable(_) => "extractor_unavailable",
            Error::DegenerateColumn(_) => "degenerate_column",
            Error::RankDeficient(_) => "rank_deficient",
            Error::MissingBudget(_) => "missing_budget",
            Error::NonFiniteLoss(_) => "non_finite_loss",
            Error::EmptyDataset => "empty_dataset",
            Error::ShapeMismatch(_) => "shape_mismatch",
            Error::VersionMismatch(_) => "version_mismatch",
            Error::CorruptCheckpoint(_) => "corrupt_checkpoint",
            Error::CorruptState(_) => "corrupt_state",
            Error::InsufficientClassMembers(_) => "insufficient_class_members",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::Http(_) => "http",
        }
    }
}
