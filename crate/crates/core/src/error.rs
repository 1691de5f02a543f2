use thiserror::Error;

use crate::krylov::SolveReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("missing diagonal entry in row {row}")]
    MissingDiagonal { row: usize },

    #[error("zero pivot in incomplete factorization at row {row}")]
    ZeroPivot { row: usize },

    #[error("singular matrix: pivot {pivot} (original row {row}) vanished")]
    Singular { pivot: usize, row: usize },

    #[error("non-positive pivot {value:e} at index {index} (input is not SPD)")]
    NotPositiveDefinite { index: usize, value: f64 },

    #[error("invalid layer stack: {0}")]
    InvalidStack(String),

    #[error("coefficient must be positive, got {value} on cell {cell}")]
    NonPositiveCoefficient { cell: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("GMRES did not converge: {} iterations, relative residual {:e}", .0.iterations, .0.relative_residual)]
    GmresNotConverged(Box<SolveReport>),

    #[error("{variant} preconditioner setup failed: {source}")]
    Preconditioner {
        variant: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
