use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the calibration library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameters for {model}: {reason}")]
    InvalidParams { model: String, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown pair id `{0}`")]
    UnknownPair(String),

    #[error("transport problem infeasible: {0}")]
    Infeasible(String),

    #[error("simulation aborted: {0}")]
    SimulationAborted(String),

    #[error("empty particle set")]
    EmptyParticleSet,

    // The io error is part of the message rather than a source so that
    // chained reports do not print it twice.
    #[error("{path}: {err}")]
    Io { path: PathBuf, err: std::io::Error },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::InvalidParams { .. } => "invalid_params",
            Error::Config(_) => "config",
            Error::UnknownPair(_) => "unknown_pair",
            Error::Infeasible(_) => "infeasible",
            Error::SimulationAborted(_) => "simulation_aborted",
            Error::EmptyParticleSet => "empty_particle_set",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Parse { .. } => "parse",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, err: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            err,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
