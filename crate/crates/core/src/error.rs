use thiserror::Error;

use crate::planning::StateTrace;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("invalid type hierarchy: {0}")]
    TypeHierarchy(String),
    #[error("invalid domain: {0}")]
    Domain(String),
    #[error("invalid instance: {0}")]
    Instance(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("action `{0}` is not applicable in the given state")]
    NotApplicable(String),
    #[error("random walk reached a dead end after {} steps", .prefix.len())]
    DeadEnd { prefix: StateTrace },
    #[error("enumeration needs {needed} action sequences, cap is {cap}")]
    CapExceeded { needed: u128, cap: u128 },
    #[error("width mismatch: expected {expected}, got {got}")]
    Width { expected: usize, got: usize },
    #[error("invalid data: {0}")]
    Data(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
