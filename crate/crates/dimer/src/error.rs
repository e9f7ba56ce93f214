use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] dimer_core::Error),

    #[error("invalid value for `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("unknown figure {0}; presets exist for figures 1 to 8")]
    UnknownFigure(u32),

    #[error("unstable/self-pulsing: {0}")]
    Instability(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("writing table: {0}")]
    Output(String),
}

impl CliError {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Config { key: key.into(), reason: reason.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// 2 for instability, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        use dimer_core::Error as E;
        match self {
            Self::Instability(_) => 2,
            Self::Core(
                E::NonConvergence { .. }
                | E::Unstable { .. }
                | E::SingularSystem { .. }
                | E::TrajectoryDivergence { .. },
            ) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
