use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("zero vector")]
    ZeroVector,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("matrix is not semisimple")]
    NotSemisimple,
    #[error("matrix is not in Sp(n,1): defect {0:.3e}")]
    NotMember(f64),
    #[error("vectors are dependent")]
    Dependent,
    #[error("requested sign pattern is not attainable")]
    Signature,
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
