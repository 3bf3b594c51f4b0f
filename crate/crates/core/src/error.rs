use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid instance: {0}")]
    Invalid(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("graph has no edges")]
    EmptyGraph,

    #[error("every vertex is isolated; bounds are undefined")]
    AllIsolated,

    #[error("invalid group index {group} (K = {k})")]
    InvalidGroup { group: usize, k: usize },

    #[error("f(0) is undefined for a pair with {0} edges")]
    LogOfZero(u64),

    #[error("generator rejected {0} consecutive draws")]
    RejectionBudget(usize),

    #[error("configuration: {0}")]
    Config(String),

    #[error("best-known objective is zero; gap undefined")]
    ZeroReference,

    #[error("missing results for {0}")]
    MissingResult(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    /// Short stable identifier used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Invalid(_) => "invalid",
            Error::Dimension(_) => "dimension",
            Error::EmptyGraph => "empty-graph",
            Error::AllIsolated => "all-isolated",
            Error::InvalidGroup { .. } => "invalid-group",
            Error::LogOfZero(_) => "log-of-zero",
            Error::RejectionBudget(_) => "rejection-budget",
            Error::Config(_) => "config",
            Error::ZeroReference => "zero-reference",
            Error::MissingResult(_) => "missing-result",
            Error::File { .. } | Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }
}
