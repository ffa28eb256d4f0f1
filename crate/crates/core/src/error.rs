use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),

    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),

    #[error("instance too large: n = {n}, limit {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("malformed conic problem: {0}")]
    MalformedProblem(String),

    #[error("unsupported problem: {0}")]
    UnsupportedProblem(String),

    #[error("non-finite matrix entry")]
    NonFinite,

    #[error("infeasible input: {0}")]
    Infeasible(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
