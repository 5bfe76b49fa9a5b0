use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric (relative asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive definite (pivot {pivot:.3e} at row {row}, jitter {jitter:.1e})")]
    NotPositiveDefinite { row: usize, pivot: f64, jitter: f64 },

    #[error("empty data")]
    EmptyData,

    #[error("empty batch")]
    EmptyBatch,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("training diverged at epoch {epoch}{}", stage.map(|s| format!(" in stage `{s}`")).unwrap_or_default())]
    DivergedTraining { epoch: usize, stage: Option<&'static str> },

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("hyperparameter optimization failed: {0}")]
    OptimizationFailed(String),

    #[error("invalid cross-validation plan: {0}")]
    InvalidPlan(String),

    #[error("all {0} trials failed")]
    AllTrialsFailed(usize),

    #[error("x = {x:?} lies outside the domain of {case}")]
    OutOfDomain { case: &'static str, x: Vec<f64> },

    #[error("x = 0.5 is the discontinuity of {0}")]
    AtDiscontinuity(&'static str),

    #[error("all targets are equal; R² is undefined")]
    DegenerateTargets,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Attach a stage name to a divergence error; other errors pass through.
    pub fn in_stage(self, name: &'static str) -> Self {
        match self {
            Error::DivergedTraining { epoch, .. } => Error::DivergedTraining {
                epoch,
                stage: Some(name),
            },
            other => other,
        }
    }

    /// True for failures caused by numerics rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite { .. }
                | Error::DivergedTraining { .. }
                | Error::NonFinite(_)
                | Error::OptimizationFailed(_)
                | Error::AllTrialsFailed(_)
        )
    }
}
