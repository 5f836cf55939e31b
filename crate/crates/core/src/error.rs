use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix dimension must be at least 1")]
    EmptyMatrix,

    #[error("expected {expected} entries for dim {dim}, found {found}")]
    EntryCount {
        dim: usize,
        expected: usize,
        found: usize,
    },

    #[error("matrix is not Hermitian: entry ({row},{col}) is not the conjugate of ({col},{row})")]
    NotHermitian { row: usize, col: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("eigendecomposition failed for dim {dim} matrix (condition estimate {condition:.3e})")]
    Decomposition { dim: usize, condition: f64 },

    #[error("{function}: {value} lies outside the domain {domain}")]
    Domain {
        function: String,
        value: f64,
        domain: String,
    },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:.6e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("projection has rank 0")]
    EmptyProjection,

    #[error("projection rank {rank} must satisfy 0 < rank < {dim}")]
    ProjectionRank { rank: usize, dim: usize },

    #[error("unknown function `{0}`")]
    UnknownFunction(String),

    #[error("invalid parameter for `{function}`: {reason}")]
    InvalidParameter { function: String, reason: String },

    #[error("unsupported composition {outer} ∘ {inner}: {reason}")]
    UnsupportedComposition {
        outer: String,
        inner: String,
        reason: String,
    },

    #[error("cannot parse function spec `{spec}` at byte {pos}: {reason}")]
    Parse {
        spec: String,
        pos: usize,
        reason: String,
    },

    #[error("{function} is {found}; {required} required")]
    Shape {
        function: String,
        found: String,
        required: String,
    },

    #[error("invalid sandwich constants: {0}")]
    ConstantsInvalid(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("expression undefined at t = λ = {0}")]
    UndefinedPoint(f64),

    #[error("malformed matrix file: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
