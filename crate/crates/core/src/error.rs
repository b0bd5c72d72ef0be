use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// `column` is 1-based: the byte index of the offending character plus one.
    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },

    #[error("unknown identifier `{name}` at column {column}")]
    UnknownIdentifier { name: String, column: usize },

    #[error("domain error in `{node}` at argument {arg}")]
    Domain { node: String, arg: f64 },

    #[error("derivative order {requested} exceeds the cap of {cap}")]
    OrderCap { requested: usize, cap: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point {index} lies outside the unit cube: {value}")]
    OutsideUnitCube { index: usize, value: f64 },

    #[error("method not applicable: {0}")]
    MethodMismatch(String),

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}
