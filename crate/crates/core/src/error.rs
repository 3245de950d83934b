use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("unknown matrix format: {0}")]
    UnknownFormat(String),

    #[error("class {class:?} has {count} sample(s); at least {required} required")]
    ClassTooSmall {
        class: String,
        count: usize,
        required: usize,
    },

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("registry error: {0}")]
    Registry(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("zero-variance data: {0}")]
    ZeroVariance(String),

    #[error("singular within-class scatter ({0}); try the eigen solver with shrinkage")]
    SingularScatter(String),

    #[error("constant input: correlation is undefined")]
    ConstantInput,

    #[error("logistic regression did not converge after {iterations} iterations (gradient inf-norm {grad_norm:e})")]
    NotConverged { iterations: usize, grad_norm: f64 },

    #[error("degenerate result: {0}")]
    Degenerate(String),

    #[error("label mismatch: {0}")]
    LabelMismatch(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.to_string(),
        }
    }
}
