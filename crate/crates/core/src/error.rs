use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("stitch mismatch: junction gap {gap:.6e} hartree exceeds tolerance {tolerance:.3e}")]
    StitchMismatch { gap: f64, tolerance: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}:{line}: {message}", file.display())]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },

    #[error("eigensolver failure: {0}")]
    Solver(String),

    #[error("tracking ambiguity at theta = {theta:.6}: {detail}")]
    Tracking { theta: f64, detail: String },

    #[error("classification failed: missing {missing}-node state; found node counts {found:?}")]
    Classification { missing: usize, found: Vec<usize> },

    #[error("degenerate normalization: {0}")]
    DegenerateNormalization(String),

    #[error("branch point: wavevector vanishes at E = {energy} in segment {segment}")]
    BranchPoint { energy: String, segment: usize },

    #[error("no pole found from guess {guess}: {reason}")]
    NoPoleFound { guess: String, reason: String },

    #[error("limit exceeded: {0}")]
    Limit(String),

    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Exit status for the command-line driver: 2 for configuration and input
    /// problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::Config(_)
            | Error::Parse { .. }
            | Error::Limit(_)
            | Error::Io { .. }
            | Error::StitchMismatch { .. } => 2,
            Error::Solver(_)
            | Error::Tracking { .. }
            | Error::Classification { .. }
            | Error::DegenerateNormalization(_)
            | Error::BranchPoint { .. }
            | Error::NoPoleFound { .. } => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
