use std::fmt::Display;
use std::path::Path;

use thiserror::Error;

/// Command failures, split by the exit code they map to.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
}

impl RunError {
    pub fn config(msg: impl Display) -> Self {
        Self::Config(msg.to_string())
    }

    pub fn data(path: impl AsRef<Path>, err: impl Display) -> Self {
        Self::Data(format!("{}: {err}", path.as_ref().display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Data(_) => 3,
        }
    }
}
