//! Command failures with their exit codes and JSON error records.

use std::fmt;
use std::path::Path;

use dipent::Error;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Config,
    Numerical,
    Io,
}

#[derive(Debug, Serialize)]
pub struct Failure {
    pub kind: FailureKind,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure {
            kind: FailureKind::Config,
            message: message.into(),
            path: None,
        }
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        Failure {
            kind: FailureKind::Io,
            message: format!("{}: {err}", path.display()),
            path: Some(path.display().to_string()),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            FailureKind::Config => 2,
            FailureKind::Numerical => 3,
            FailureKind::Io => 4,
        }
    }

    /// One-line JSON record for stderr.
    pub fn record(&self) -> String {
        #[derive(Serialize)]
        struct Record<'a> {
            error: &'a Failure,
            exit_code: i32,
        }
        serde_json::to_string(&Record {
            error: self,
            exit_code: self.exit_code(),
        })
        .expect("error record serializes")
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let kind = match &e {
            Error::InvalidConfig(_) | Error::InvalidArgument(_) | Error::UnknownStrategy { .. } => FailureKind::Config,
            Error::ConditionViolation { .. }
            | Error::Factorization { .. }
            | Error::ZeroAmplitude
            | Error::NotNormalized { .. }
            | Error::Quadrature { .. }
            | Error::EnvelopeViolation { .. } => FailureKind::Numerical,
            Error::Csv(_) | Error::Io(_) => FailureKind::Io,
        };
        Failure {
            kind,
            message: e.to_string(),
            path: None,
        }
    }
}
