use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// One accepted iterate of the optimizer, kept for non-convergence reports.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub iteration: usize,
    pub loglik: f64,
    pub gradient_max_norm: f64,
    pub max_abs_param: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid household composition in household {household_id}: {reason}")]
    Composition { household_id: u64, reason: String },

    #[error("invalid input: {0}")]
    InputValidation(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("no policy parameters for year {0}")]
    MissingPolicyYear(i32),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular design: collinear columns {columns:?}")]
    SingularDesign { columns: Vec<String> },

    #[error("optimizer did not converge after {iterations} iterations: {reason}")]
    NonConvergence {
        iterations: usize,
        reason: String,
        trajectory: Vec<TrajectoryPoint>,
    },

    #[error("rate undefined: {0}")]
    UndefinedRate(&'static str),

    #[error("unknown covariate `{0}`")]
    Lookup(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
