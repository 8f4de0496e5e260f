use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0} not in catalog")]
    NotInCatalog(String),

    #[error("matrix not positive definite")]
    NotPositiveDefinite,

    #[error("singular system")]
    Singular,

    #[error("derivative target does not contain image: {0}")]
    IncompatibleDerivative(String),

    #[error("not a complex: {0}")]
    NotAComplex(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
