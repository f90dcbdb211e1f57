use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, col: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            col,
            message: message.into(),
        }
    }
}

/// A flowgraph violates one of its structural invariants.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid flowgraph: {0}")]
pub struct StructureError(pub String);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("more than {cap} backbones")]
    BackboneLimitExceeded { cap: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("{line}:{col}: unsupported feature: {feature}")]
    Unsupported {
        line: usize,
        col: usize,
        feature: String,
    },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}
