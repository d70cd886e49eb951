use ruled_core::GeomError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot access {path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("scene parse error: {msg}")]
    Parse { line: usize, column: usize, msg: String },

    #[error("invalid scene: {0}")]
    Scene(String),

    #[error(transparent)]
    Geom(#[from] GeomError),

    #[error("selftest failed: {0} check(s) failed")]
    Selftest(usize),
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), source }
    }

    /// 2 for bad input, 3 for numeric or degeneracy failures, 4 for a failed selftest.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Scene(_) => 2,
            CliError::Geom(e) if e.is_validation() => 2,
            CliError::Geom(_) => 3,
            CliError::Selftest(_) => 4,
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Parse { line: e.line(), column: e.column(), msg: e.to_string() }
    }
}
