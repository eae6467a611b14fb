use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("grid mismatch: operands live on different momentum grids")]
    GridMismatch,
    #[error("truncation mismatch: operands live on different Fock truncations")]
    TruncationMismatch,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("overflow guard: {0}")]
    Overflow(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("ill-conditioned: {0}")]
    IllConditioned(String),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
