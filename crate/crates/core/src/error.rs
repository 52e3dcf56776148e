use thiserror::Error;

/// Errors raised by constructors and operations in this crate.
///
/// Validation of POVMs and instruments does not use this type; it returns a
/// [`ValidationReport`](crate::ValidationReport) instead.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("label mismatch: {0}")]
    LabelMismatch(String),
    #[error("unknown outcome label `{0}`")]
    UnknownLabel(String),
    #[error("outcome sets differ: {0}")]
    OutcomeSetMismatch(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("instrument is not indecomposable: {0}")]
    NotIndecomposable(String),
    #[error("instrument is not measure-and-prepare: {0}")]
    NotMeasureAndPrepare(String),
    #[error("operator is not an isometry (residual {0:.3e})")]
    NotIsometry(f64),
    #[error("certificate does not match instrument: {0}")]
    CertificateMismatch(String),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
