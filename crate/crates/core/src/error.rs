use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("kernel mass {mass} differs from 1")]
    NonUnitMass { mass: f64 },
    #[error("kernel density is negative or degenerate: {0}")]
    NegativeDensity(String),
    #[error("kernel support is unbounded or not finite")]
    UnboundedSupport,
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("coefficient lower bound {mu_minus} is not positive")]
    CoercivityViolation { mu_minus: f64 },
    #[error("numerical null space is not one-dimensional (relative pivot {pivot:e})")]
    NullSpaceDimension { pivot: f64 },
    #[error("invariant density is not positive (min {min})")]
    NonPositiveDensity { min: f64 },
    #[error("right-hand side is incompatible: defect {defect:e}")]
    CompatibilityViolation { defect: f64 },
    #[error("solver breakdown: {0}")]
    SolverBreakdown(String),
    #[error("alpha {0} outside (0, 2)")]
    AlphaOutOfRange(f64),
    #[error("schedule mismatch: {0}")]
    ScheduleMismatch(String),
    #[error("matrix is not positive definite (min eigenvalue {min_eig})")]
    NotPositiveDefinite { min_eig: f64 },
    #[error("sample set has nonzero mean {mean:e}")]
    NonZeroMean { mean: f64 },
    #[error("epsilon must be positive, got {0}")]
    EpsilonNonPositive(f64),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("time step {dt} exceeds the stability bound {bound}")]
    CflViolation { dt: f64, bound: f64 },
    #[error("non-finite value at step {step}")]
    NonFiniteValue { step: usize },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig})")]
    NotPsd { min_eig: f64 },
    #[error("checkpoint mismatch: {0}")]
    CheckpointMismatch(String),
}
