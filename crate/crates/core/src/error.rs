use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid field parameters: {0}")]
    Field(String),
    #[error("division by zero in F_q")]
    DivisionByZero,
    #[error("operands live in different rings: {0}")]
    Mismatch(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("code is not CSS: {0} nonzero entries in conj(h_X)^T h_Z")]
    NotCss(usize),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
