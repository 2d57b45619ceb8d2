use std::path::PathBuf;

use thiserror::Error;

use crate::network::OdPair;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("OD pair {0} is not part of the OD set")]
    UnknownPair(OdPair),

    #[error("OD sets of the supplied profiles do not match")]
    MismatchedPairs,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{0}")]
    Validation(String),

    #[error("solver error: {0}")]
    Solver(#[from] SolveError),

    #[error("oracle enumeration refused: {0}")]
    OracleCap(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("model is infeasible (the all-zero design should always be feasible)")]
    Infeasible,

    #[error("time limit of {0} s reached without an incumbent")]
    NoIncumbent(f64),

    #[error("warm start is infeasible for the model: {0}")]
    WarmStartInfeasible(String),

    #[error("backend failure: {0}")]
    Backend(String),

    #[error("solution failed certification: {0}")]
    Certification(String),
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
