use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Model 1 needs at least one active member to delegate to.
    #[error("no active member available as a representative")]
    NoRepresentative,

    /// Dissemination needs at least one absorbing (active) member.
    #[error("no active member can absorb power")]
    NoAbsorber,

    #[error("no decision possible: {0}")]
    NoDecision(String),

    #[error("invalid ballot: {0}")]
    InvalidBallot(String),

    #[error("phase violation: cannot {action} while pool is {phase}")]
    PhaseViolation {
        action: &'static str,
        phase: &'static str,
    },

    #[error("conflict: {0}")]
    Conflict(String),

    #[error("pool has no candidate models")]
    NoCandidates,

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(line: u64, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        let line = err.position().map(|p| p.line()).unwrap_or(0);
        let message = err.to_string();
        match err.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => Error::parse(line, message),
        }
    }
}
