//! Configuration, pipelines, dense oracle and report emission around
//! [`homog_core`].

pub mod config;
pub mod fft;
pub mod oracle;
pub mod pipeline;
pub mod report;

pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] homog_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("oracle: {0}")]
    Oracle(String),
    #[error("acceptance check failed: {0}")]
    Acceptance(String),
}

impl HarnessError {
    /// Process exit code: 2 validation, 3 solver, 4 acceptance.
    pub fn exit_code(&self) -> i32 {
        use homog_core::Error as E;
        match self {
            HarnessError::Config(_) | HarnessError::Json(_) => 2,
            HarnessError::Core(e) => match e {
                E::NonUnitMass { .. }
                | E::NegativeDensity(_)
                | E::UnboundedSupport
                | E::UnsupportedDimension(_)
                | E::InvalidArgument(_)
                | E::CoercivityViolation { .. }
                | E::AlphaOutOfRange(_)
                | E::EpsilonNonPositive(_)
                | E::GridMismatch(_) => 2,
                _ => 3,
            },
            HarnessError::Io(_) | HarnessError::Oracle(_) => 3,
            HarnessError::Acceptance(_) => 4,
        }
    }
}
