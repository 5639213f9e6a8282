use thiserror::Error;

/// Errors produced by loading, validation, and analysis operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// A row that cannot be parsed into the expected schema.
    #[error("{file}:{line}: {msg}")]
    Malformed {
        file: String,
        line: u64,
        msg: String,
    },

    #[error("{file}:{line}: self-loop on node {node}")]
    SelfLoop { file: String, line: u64, node: u64 },

    #[error("{file}:{line}: timestamp {t} outside window [{start}, {end}]")]
    OutOfWindow {
        file: String,
        line: u64,
        t: i64,
        start: i64,
        end: i64,
    },

    #[error("unknown node id {0}")]
    UnknownNode(u64),

    #[error("cutoff {cutoff} outside window [{start}, {end}]")]
    CutoffOutOfWindow { cutoff: i64, start: i64, end: i64 },

    /// Catch-all for invalid arguments and infeasible configurations.
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
