use thiserror::Error;

use crate::label::Label;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty density")]
    EmptyDensity,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("duplicate label {0}")]
    DuplicateLabel(Label),
    #[error("unknown label {0}")]
    UnknownLabel(Label),
    #[error("label mismatch: {0} vs {1}")]
    LabelMismatch(Label, Label),
    #[error("disjoint supports for label {0}")]
    DisjointSupports(Label),
    #[error("degenerate fusion: every fused hypothesis weight vanished")]
    DegenerateFusion,
    #[error("enumeration bound exceeded: {0}")]
    EnumerationBound(String),
    #[error("oracle supports low dimension only")]
    OracleDimension,
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
