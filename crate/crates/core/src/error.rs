use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index {index} out of range (valid 1..={len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid root family: {0}")]
    InvalidFamily(String),

    #[error("no genus p <= {p_max} satisfied the convergence heuristic")]
    NoGenusFound { p_max: usize },

    #[error("zero root encountered where a non-zero root is required")]
    ZeroRoot,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error(s):\n{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
    Config(Vec<crate::config::Diagnostic>),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
