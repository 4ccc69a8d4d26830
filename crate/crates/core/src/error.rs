use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFiniteValue(&'static str),
    #[error("rate must be positive, got {0}")]
    NonPositiveRate(f64),
    #[error("duplicate rate {0} kbps")]
    DuplicateRate(f64),
    #[error("abscissae must be strictly increasing")]
    NonAscendingAbscissae,
    #[error("x = {x} outside interpolation domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },
    #[error("curves do not overlap on the integration axis ({axis})")]
    NoOverlap { axis: &'static str },
    #[error("no savings anchor fell inside both curves' quality ranges")]
    NoValidAnchors,
    #[error("stimulus `{0}` has fewer than 2 scores")]
    TooFewRaters(String),
    #[error("distorted stimulus `{0}` has no paired source in the table")]
    MissingPair(String),
    #[error("subject model did not converge within {0} sweeps")]
    NonConvergence(usize),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("logistic fit diverged")]
    FitDiverged,
    #[error("backend failure: {0}")]
    BackendFailure(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: u64, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
