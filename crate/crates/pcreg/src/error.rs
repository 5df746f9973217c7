// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;

use serde_json::{json, Value};

/// Errors of the command line layer. [`CliError::exit_code`] maps them to
/// the process exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or flag combinations.
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input file.
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },

    #[error("{path}: invalid JSON: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Core(#[from] pcreg_core::Error),

    #[error("{0}")]
    Runtime(String),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self::Usage(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn input(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Self::Input {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            _ => 1,
        }
    }

    fn kind(&self) -> &'static str {
        use pcreg_core::Error as E;
        match self {
            Self::Usage(_) => "usage",
            Self::Io { .. } => "io",
            Self::Input { .. } => "input",
            Self::Json { .. } => "config",
            Self::Runtime(_) => "runtime",
            Self::Core(e) => match e {
                E::Dimension(_) => "dimension",
                E::Parameter(_) => "parameter",
                E::InvalidSignal(_) => "invalid_signal",
                E::Index { .. } => "index",
                E::Numeric(_) => "numeric",
                E::Bisection { .. } => "bisection",
                E::TooFewRecords { .. } => "too_few_records",
            },
        }
    }

    /// Machine-readable description written to stderr on failure.
    pub fn diagnostic(&self) -> Value {
        let mut out = json!({
            "schema": "pcreg.error/1",
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        if let Self::Core(pcreg_core::Error::Bisection { trace }) = self {
            out["trace"] = serde_json::to_value(trace).unwrap_or(Value::Null);
        }
        out
    }
}
