//! Analytic benchmark problems, accuracy metrics and the experiment runner.

mod cases;
mod experiment;
mod metrics;

pub use cases::{eval_case, linspace, sample_case, test_set, CaseId, Fidelity, SamplingPlan, DISCONTINUITY_CLUSTER};
pub use experiment::{
    run_experiment, ExperimentOutput, ExperimentSpec, FittedModel, ModelReport, PredictionGrid, Report, RunStatus,
    REPORT_FORMAT,
};
pub use metrics::{compute_metrics, r2_score, Metrics};
