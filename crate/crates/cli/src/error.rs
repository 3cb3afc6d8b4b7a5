use std::fmt;
use std::path::Path;
use std::process::ExitCode;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Usage,
    Io,
    Parse,
    Validation,
    Config,
}

impl ErrorKind {
    fn code(self) -> u8 {
        match self {
            ErrorKind::Usage => 2,
            ErrorKind::Io => 3,
            ErrorKind::Parse => 4,
            ErrorKind::Validation => 5,
            ErrorKind::Config => 6,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CliError {
    #[serde(rename = "error")]
    pub kind: ErrorKind,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<modesel::model::Violation>,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        CliError {
            kind,
            message: message.into(),
            violations: Vec::new(),
        }
    }

    pub fn usage(e: impl fmt::Display) -> Self {
        Self::new(ErrorKind::Usage, e.to_string())
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::new(ErrorKind::Io, format!("{}: {e}", path.display()))
    }

    /// Reclassifies a config error as a validation error (bad generator input).
    pub fn into_validation(mut self) -> Self {
        if self.kind == ErrorKind::Config {
            self.kind = ErrorKind::Validation;
        }
        self
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("error serializes")
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.kind.code())
    }
}

impl From<modesel::Error> for CliError {
    fn from(e: modesel::Error) -> Self {
        use modesel::Error as E;
        let message = e.to_string();
        match e {
            E::InvalidAssignment(v) => CliError {
                kind: ErrorKind::Validation,
                message,
                violations: v,
            },
            E::InvalidInstance(_) | E::ModeOutOfRange { .. } => Self::new(ErrorKind::Validation, message),
            E::InvalidConfig(_) => Self::new(ErrorKind::Config, message),
            E::UnsupportedVersion { .. } | E::Json(_) => Self::new(ErrorKind::Parse, message),
            E::UnknownAlgorithm(_) => Self::new(ErrorKind::Usage, message),
            E::Io(_) => Self::new(ErrorKind::Io, message),
        }
    }
}
