use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::Decade;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed n-gram line: {0}")]
    MalformedLine(String),
    #[error("{path}: missing column {column:?}")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("endpoint unreachable: {0}")]
    EndpointUnreachable(String),
    #[error("query rejected by endpoint: {0}")]
    QueryRejected(String),

    #[error("cannot merge tables for ({left_decade}, {left_group}) and ({right_decade}, {right_group})")]
    KeyMismatch {
        left_decade: Decade,
        left_group: String,
        right_decade: Decade,
        right_group: String,
    },
    #[error("context table has zero total weight")]
    EmptyTable,

    #[error("{path}:{line}: expected {expected} values, found {found}")]
    DimensionMismatch {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("{0}: no vectors")]
    EmptyFile(PathBuf),
    #[error("zero-norm vector")]
    ZeroNorm,
    #[error("only {found} of the words have vectors, need at least {min}")]
    TooFewWords { found: usize, min: usize },

    #[error("all sampling weights are zero")]
    DegenerateDistribution,
    #[error("training diverged: non-finite loss at epoch {epoch}, step {step}")]
    NonFiniteLoss { epoch: usize, step: usize },

    #[error("duplicate axis id {0:?}")]
    DuplicateAxis(String),
    #[error("axis {0:?} has an empty pole")]
    EmptyPole(String),
    #[error("axis {axis} excluded: {left} left / {right} right pole words present, need {min}")]
    AxisExcluded {
        axis: String,
        left: usize,
        right: usize,
        min: usize,
    },
    #[error("axis {0:?} has a zero vector")]
    ZeroAxis(String),

    #[error("lexicon is empty after filtering")]
    EmptyLexicon,
    #[error("no semantic axis is usable in the anchor decade")]
    NoUsableAxes,

    #[error("vectors differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("constant input has no correlation")]
    ConstantInput,
    #[error("need at least 2 decades with vectors, found {0}")]
    TooFewDecades(usize),
    #[error("transition starting at index {0} is not available")]
    IntervalMissing(usize),
    #[error("need at least 3 transitions, found {0}")]
    TooFewTransitions(usize),
    #[error("empty sample")]
    EmptySample,
}

impl Error {
    pub(crate) fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        Error::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub(crate) fn parse(path: impl AsRef<Path>, line: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            path: path.as_ref().to_path_buf(),
            line,
            reason: reason.into(),
        }
    }
}
