use std::path::PathBuf;

use thiserror::Error;

use crate::puretypes::PureTypesParams;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{origin}:{line}: {message}")]
    Parse {
        origin: String,
        line: usize,
        message: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "optimizer did not converge after {iterations} iterations \
         (best so far p={:.6}, q={:.6}, nll={nll})",
        best.p, best.q
    )]
    NonConvergence {
        best: PureTypesParams,
        nll: f64,
        iterations: usize,
    },

    #[error("design matrix is rank deficient; collinear columns: {}", columns.join(", "))]
    RankDeficient { columns: Vec<String> },

    #[error("logistic fit diverges (complete or quasi-complete separation): {0}")]
    Separation(String),

    #[error("empty sample after stage '{stage}' ({counts})")]
    EmptySample { stage: String, counts: String },

    #[error("configuration: {0}")]
    Config(String),
}

impl Error {
    /// Stable machine-readable class, one token, used by the CLI on failure.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::InvalidInput(_) => "invalid-input",
            Error::Precondition(_) => "precondition",
            Error::Domain(_) => "domain",
            Error::NonConvergence { .. } => "non-convergence",
            Error::RankDeficient { .. } => "rank-deficient",
            Error::Separation(_) => "separation",
            Error::EmptySample { .. } => "empty-sample",
            Error::Config(_) => "config",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(origin: impl Into<String>, line: usize, message: impl ToString) -> Self {
        Error::Parse {
            origin: origin.into(),
            line,
            message: message.to_string(),
        }
    }
}
