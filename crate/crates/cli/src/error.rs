use std::path::{Path, PathBuf};

use otlab::OtError;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{0}")]
    Validation(String),
    /// The solver stopped early; partial output was written to `primary`.
    #[error("{message}")]
    NonConvergence { message: String, primary: PathBuf },
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<String>,
}

#[derive(Serialize)]
struct ErrorEnvelope<'a> {
    error: ErrorBody<'a>,
}

impl CliError {
    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            message: err.to_string(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Validation(_) => "validation",
            CliError::NonConvergence { .. } => "non_convergence",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::NonConvergence { .. } => 3,
            _ => 2,
        }
    }

    /// One-line machine-readable form, `{"error":{"kind":...,"message":...}}`.
    pub fn to_json(&self) -> String {
        let (message, path) = match self {
            CliError::Io { path, message } => (message.clone(), Some(path.display().to_string())),
            CliError::Validation(m) => (m.clone(), None),
            CliError::NonConvergence { message, primary } => (message.clone(), Some(primary.display().to_string())),
        };
        let env = ErrorEnvelope {
            error: ErrorBody {
                kind: self.kind(),
                message,
                path,
            },
        };
        serde_json::to_string(&env).expect("error envelope serializes")
    }
}

impl From<OtError> for CliError {
    fn from(e: OtError) -> Self {
        CliError::Validation(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_and_codes() {
        let e = CliError::io(Path::new("a.json"), "missing");
        let v: serde_json::Value = serde_json::from_str(&e.to_json()).unwrap();
        assert_eq!(v["error"]["kind"], "io");
        assert_eq!(v["error"]["path"], "a.json");
        assert_eq!(e.exit_code(), 2);
        let e: CliError = OtError::EmptyMeasure.into();
        assert_eq!(e.kind(), "validation");
        let e = CliError::NonConvergence {
            message: "stalled".into(),
            primary: PathBuf::from("x"),
        };
        assert_eq!(e.exit_code(), 3);
    }
}
