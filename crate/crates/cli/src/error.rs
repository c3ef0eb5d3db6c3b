use std::path::PathBuf;

use thiserror::Error;

use crate::config::ParseError;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// Bad command line or file-system failure.
    pub const USAGE: i32 = 1;
    pub const PARSE: i32 = 2;
    /// Non-finite state or stiffness abort.
    pub const NUMERICAL: i32 = 3;
    /// Invalid physical input or violated kernel hypotheses.
    pub const PRECONDITION: i32 = 4;
    /// `aggdiff check` found a failing property.
    pub const CHECK: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config error: {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Core(#[from] aggdiff_core::Error),
    #[error("{0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use aggdiff_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Io { .. } => exit::USAGE,
            CliError::Parse(_) => exit::PARSE,
            CliError::CheckFailed(_) => exit::CHECK,
            CliError::Core(e) => match e {
                E::NumericalBlowup { .. } | E::StiffnessAbort { .. } => exit::NUMERICAL,
                E::Io { .. } => exit::USAGE,
                E::InvalidArgument(_)
                | E::InvalidData(_)
                | E::DegenerateProfile { .. }
                | E::InsufficientData(_)
                | E::PreconditionFailed(_) => exit::PRECONDITION,
            },
        }
    }
}
