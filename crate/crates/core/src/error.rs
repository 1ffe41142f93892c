use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite evaluation: {0}")]
    NonFiniteEvaluation(String),
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("objective is negative ({value:e}); wrap the problem with the exponential transform")]
    NegativeObjective { value: f64 },
    #[error("no distance-to-feasible-set oracle available")]
    NoFeasibleDistanceOracle,
    #[error("point lies outside the penalty domain")]
    OutsideDomain,
    #[error("inner infimum appears unbounded below at the grid edge")]
    UnboundedBelow,
    #[error("every start returned a non-finite value")]
    AllStartsFailed,
    #[error("exactness predicate is not monotone in c: {0:?}")]
    NonMonotonePredicate([(f64, bool); 3]),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("serialization error: {0}")]
    Serialization(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
