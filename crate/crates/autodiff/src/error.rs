use thiserror::Error;

/// Errors raised by tensor construction, ops and gradient computation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdError {
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },

    #[error("contract violation in {op}: {detail}")]
    Contract { op: &'static str, detail: String },

    #[error("backward requires a scalar loss, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),

    #[error("no second-order rule for op `{0}`")]
    NoSecondOrder(&'static str),
}

pub type Result<T> = std::result::Result<T, AdError>;

pub(crate) fn shape_err(op: &'static str, detail: impl Into<String>) -> AdError {
    AdError::ShapeMismatch {
        op,
        detail: detail.into(),
    }
}

pub(crate) fn contract_err(op: &'static str, detail: impl Into<String>) -> AdError {
    AdError::Contract {
        op,
        detail: detail.into(),
    }
}
