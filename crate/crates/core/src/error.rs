use thiserror::Error;

use crate::model::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid assignment: {}", format_violations(.0))]
    InvalidAssignment(Vec<Violation>),

    #[error("mode index {mode} out of range (instance has {num_modes} modes)")]
    ModeOutOfRange { mode: usize, num_modes: usize },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("unsupported format version {found:?} (reader supports major {supported})")]
    UnsupportedVersion { found: String, supported: u32 },

    #[error("unknown algorithm {0:?}")]
    UnknownAlgorithm(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}
