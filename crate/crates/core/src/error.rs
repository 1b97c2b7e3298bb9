use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed caller input: missing variables, dimension mismatches and the like.
    #[error("input error: {0}")]
    Input(String),

    /// Problem-file syntax error, with 1-based line and column.
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },

    /// A degree exceeded an internal limit or a relaxation order bound.
    #[error("degree overflow: {0}")]
    Degree(String),

    #[error("unknown builtin instance `{0}`")]
    UnknownBuiltin(String),

    /// The semidefinite solver could not make progress.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
