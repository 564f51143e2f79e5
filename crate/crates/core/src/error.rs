use thiserror::Error;

/// Errors produced by the operator toolkit and the campaign runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("empty matrix")]
    Empty,
    #[error("invalid shape: {0}")]
    Shape(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid Schatten order {0}: must satisfy p >= 1")]
    InvalidSchattenOrder(f64),
    #[error("matrix is not Hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },
    #[error("matrix is not unitary (residual {residual:e})")]
    NotUnitary { residual: f64 },
    #[error("operator norm {norm} exceeds 1")]
    NotContraction { norm: f64 },
    #[error("contraction is not strict (norm {norm})")]
    NotStrict { norm: f64 },
    #[error("finite dilation failed its unitarity certificate (residual {residual:e})")]
    DilationNotUnitary { residual: f64 },
    #[error("function degree {degree} exceeds the admissible degree {max}")]
    DegreeOverflow { degree: usize, max: usize },
    #[error("symbol value {value} exceeds its declared bound {bound}")]
    SymbolBound { value: f64, bound: f64 },
    #[error("iteration did not converge: {0}")]
    Convergence(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
