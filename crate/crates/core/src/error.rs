use thiserror::Error;

/// Errors raised across the laboratory. The CLI maps each variant onto a
/// process exit code.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("classification failure: {0}")]
    Classification(String),

    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),

    #[error("missing dependency: {0}")]
    MissingDependency(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::InvalidInput(msg.into()))
}
