use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("numerical blow-up: non-finite state at t = {time}")]
    NumericalBlowup { time: f64 },

    /// The CFL step fell below `dt_min`, which signals velocity blow-up.
    #[error(
        "stiffness abort at t = {time}: CFL step {dt:e} < dt_min {dt_min:e} (max |b| = {max_velocity:e})"
    )]
    StiffnessAbort {
        time: f64,
        dt: f64,
        dt_min: f64,
        max_velocity: f64,
    },

    #[error("degenerate diffusion wave: |C| - sqrt(pi)/2 = {gap:e} (M = {mass}, A = {a})")]
    DegenerateProfile { mass: f64, a: f64, gap: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Simulation time attached to the error, if any.
    pub fn time(&self) -> Option<f64> {
        match self {
            Error::NumericalBlowup { time } | Error::StiffnessAbort { time, .. } => Some(*time),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
