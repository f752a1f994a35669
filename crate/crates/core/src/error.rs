use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("construction infeasible at level {level}: removed length {removed:e} does not fit in surviving piece of length {available:e}")]
    Infeasible {
        level: usize,
        removed: f64,
        available: f64,
    },

    #[error("truncation depth {available} is insufficient; depth {required} is needed")]
    Depth { required: usize, available: usize },

    #[error("resolution floor reached: {0}")]
    Resolution(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invariant violated in {step}: {detail}")]
    Invariant { step: String, detail: String },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invariant(step: &str, detail: impl Into<String>) -> Error {
    Error::Invariant {
        step: step.to_string(),
        detail: detail.into(),
    }
}
