use thiserror::Error;

/// Errors raised by the rigidity kernels and pipelines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RigidityError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("gram array is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("gram array is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("metric violates the sandwich bound with lambda = {lambda} (eigenvalue {eigenvalue:e})")]
    SandwichViolation { lambda: f64, eigenvalue: f64 },

    #[error("frame is not orthonormal (defect {defect:e})")]
    NotOrthonormal { defect: f64 },

    #[error("linear map does not map into the plane (residual {residual:e})")]
    NotContainedInPlane { residual: f64 },

    #[error("point is off the target manifold (defect {defect:e})")]
    OffManifold { defect: f64 },

    #[error("exponent p = {0} is outside (1, inf)")]
    InvalidExponent(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("degenerate field: {0}")]
    Degenerate(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("partition parameter t = {t} does not divide the resolution n = {n}")]
    PartitionMismatch { t: usize, n: usize },

    #[error("epsilon schedule increases at position {index}")]
    NonMonotoneSchedule { index: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, RigidityError>;

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(RigidityError::InvalidExponent(p))
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(RigidityError::DimensionMismatch { expected, found })
    }
}
