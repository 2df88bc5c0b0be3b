use projnav::interp::InterpError;
use projnav::mesh::MeshError;
use projnav::scheme::SchemeError;
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{} check(s) failed: {}", failed.len(), failed.join("; "))]
    Checks { failed: Vec<String> },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) | CliError::Checks { .. } => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config { .. } => "config",
            CliError::Data(_) => "data",
            CliError::Numerical(_) => "numerical",
            CliError::Checks { .. } => "check",
        }
    }

    /// One-line JSON failure record.
    pub fn summary(&self, command: &str) -> Value {
        let mut v = json!({
            "status": "error",
            "command": command,
            "kind": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        match self {
            CliError::Config { key, .. } => v["key"] = json!(key),
            CliError::Checks { failed } => v["failed"] = json!(failed),
            _ => {}
        }
        v
    }
}

impl From<MeshError> for CliError {
    fn from(e: MeshError) -> Self {
        CliError::Data(format!("mesh: {e}"))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(format!("i/o: {e}"))
    }
}

impl From<SchemeError> for CliError {
    fn from(e: SchemeError) -> Self {
        match e {
            SchemeError::Config(m) => CliError::Usage(m),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<InterpError> for CliError {
    fn from(e: InterpError) -> Self {
        CliError::Numerical(e.to_string())
    }
}
