use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("dimension must be at least 1")]
    EmptySpace,

    #[error("gram matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("gram matrix is not positive definite (pivot {0:e})")]
    NotPositiveDefinite(f64),

    #[error("zero vector where a nonzero vector is required")]
    ZeroVector,

    #[error("singular matrix: pivot {pivot:e} below threshold {threshold:e}")]
    Singular { pivot: f64, threshold: f64 },

    #[error("vectors are linearly dependent: rank {rank} < {dim}")]
    DependentBasis { rank: usize, dim: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("operator is not conformal")]
    NotConformal,

    #[error("operator is not orthogonal")]
    NotOrthogonal,

    #[error("inadmissible vertex angle {angle} (must lie in (0, pi) away from pi/2)")]
    InadmissibleAngle { angle: f64 },

    #[error("malformed factor: {0}")]
    MalformedFactor(String),

    #[error("numerical breakdown: {0}")]
    Breakdown(String),
}
