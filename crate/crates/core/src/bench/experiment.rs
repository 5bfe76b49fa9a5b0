use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cases::{sample_case, test_set, CaseId, SamplingPlan};
use super::metrics::{compute_metrics, Metrics};
use crate::dataset::MfDataset;
use crate::error::Result;
use crate::gp::KernelFamily;
use crate::hpo::{Config, Trial};
use crate::mfnn::{FitOptions, LfStageCache};
use crate::model::{tune, ModelConfig, ModelKind, Surrogate, TuneSettings};
use crate::numerics::{derive_seed, stream_of, Matrix, Rng};

pub const REPORT_FORMAT: &str = "mufide-report-v1";

/// One benchmark run: a case, the models to compare and their budgets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub case: CaseId,
    pub models: Vec<ModelKind>,
    pub seed: u64,
    pub plan: SamplingPlan,
    /// Seeds inside are replaced per model.
    pub tune: TuneSettings,
    /// Epochs of every training stage; `None` uses the case default.
    pub epochs: Option<usize>,
    /// Co-kriging kernel families; `None` selects by marginal likelihood.
    pub cokriging_kernels: Option<[KernelFamily; 2]>,
    /// Replacement base configurations, matched by kind.
    #[serde(default)]
    pub overrides: Vec<ModelConfig>,
    /// Fit models concurrently. Results do not depend on this flag.
    #[serde(default)]
    pub parallel: bool,
}

impl ExperimentSpec {
    pub fn new(case: CaseId, models: Vec<ModelKind>, seed: u64) -> Self {
        let cokriging_kernels = match case {
            CaseId::LinearCorrelation => Some([KernelFamily::nngp(); 2]),
            _ => None,
        };
        Self {
            case,
            models,
            seed,
            plan: SamplingPlan::default_for(case),
            tune: TuneSettings::default(),
            epochs: None,
            cokriging_kernels,
            overrides: Vec::new(),
            parallel: true,
        }
    }

    /// Untuned configuration of `kind` for this run.
    pub fn base_config(&self, kind: ModelKind) -> ModelConfig {
        let seed = derive_seed(self.seed, stream_of(kind.name()));
        let mut cfg = match self.overrides.iter().find(|c| c.kind() == kind) {
            Some(c) => c.clone().with_seed(seed),
            None => ModelConfig::default_for(kind, self.seed).with_seed(seed),
        };
        let epochs = self.epochs.unwrap_or(self.case.default_epochs());
        if self.overrides.iter().all(|c| c.kind() != kind) {
            cfg = cfg.with_all_epochs(epochs);
        }
        if let ModelConfig::CoKriging(c) = &mut cfg {
            if c.kernels.is_none() {
                c.kernels = self.cokriging_kernels;
            }
        }
        cfg
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

/// Outcome of one model in a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model: ModelKind,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Best cross-validation MSE in scaled units.
    pub validation_mse: Option<f64>,
    pub test: Option<Metrics>,
    pub hyperparameters: Option<Config>,
    pub config: Option<ModelConfig>,
    pub trials: usize,
    /// Seconds.
    pub elapsed: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format: String,
    pub case: CaseId,
    pub seed: u64,
    pub n_hf: usize,
    pub n_lf: usize,
    pub n_test: usize,
    pub models: Vec<ModelReport>,
}

impl Report {
    pub fn model(&self, kind: ModelKind) -> Option<&ModelReport> {
        self.models.iter().find(|m| m.model == kind)
    }

    /// Copy with every wall-clock field zeroed, for comparing runs.
    pub fn without_timings(&self) -> Report {
        let mut r = self.clone();
        for m in &mut r.models {
            m.elapsed = 0.0;
            if let Some(t) = &mut m.test {
                t.elapsed = 0.0;
            }
        }
        r
    }
}

/// Test inputs with true and predicted HF values of one model.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionGrid {
    pub model: ModelKind,
    pub inputs: Matrix,
    pub y_true: Vec<f64>,
    pub y_pred: Vec<f64>,
}

#[derive(Debug)]
pub struct FittedModel {
    pub kind: ModelKind,
    pub surrogate: Surrogate,
    pub trials: Vec<Trial>,
}

#[derive(Debug)]
pub struct ExperimentOutput {
    pub report: Report,
    /// Training samples of the run.
    pub data: MfDataset,
    pub grids: Vec<PredictionGrid>,
    pub fitted: Vec<FittedModel>,
}

struct ModelRun {
    report: ModelReport,
    grid: Option<PredictionGrid>,
    fitted: Option<FittedModel>,
}

/// Tunes, fits and scores every model of `spec`. A failing model is
/// recorded in the report and does not stop the others.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let mut rng = Rng::new(derive_seed(spec.seed, stream_of("data")));
    let data = sample_case(spec.case, &spec.plan, &mut rng)?;
    let mut test_rng = Rng::new(derive_seed(spec.seed, stream_of("test")));
    let (test_x, test_y) = test_set(spec.case, &spec.plan, &mut test_rng)?;
    let cache = LfStageCache::new();

    let run_one = |kind: ModelKind| -> ModelRun {
        let start = Instant::now();
        let base = spec.base_config(kind);
        let mut settings = spec.tune.clone();
        settings.hpo.seed = derive_seed(spec.seed, stream_of(&format!("hpo/{}", kind.name())));
        if let Some(cv) = &mut settings.cv {
            cv.seed = derive_seed(settings.hpo.seed, stream_of("folds"));
        }
        let result = tune(&base, &data, &settings, Some(&cache)).and_then(|tuned| {
            let surrogate = tuned.config.fit_with(
                &data,
                &FitOptions {
                    scaler: None,
                    lf_cache: Some(&cache),
                },
            )?;
            let pred = surrogate.predict_hf_batch(&test_x)?;
            let metrics = compute_metrics(&pred, &test_y)?;
            Ok((tuned, surrogate, pred, metrics))
        });
        let elapsed = start.elapsed().as_secs_f64();
        match result {
            Ok((tuned, surrogate, pred, mut metrics)) => {
                metrics.elapsed = elapsed;
                let trials = tuned.outcome.as_ref().map(|o| o.trials.clone()).unwrap_or_default();
                ModelRun {
                    report: ModelReport {
                        model: kind,
                        status: RunStatus::Ok,
                        error: None,
                        validation_mse: tuned.validation_mse(),
                        test: Some(metrics),
                        hyperparameters: tuned.outcome.as_ref().map(|o| o.best.config.clone()),
                        config: Some(tuned.config.clone()),
                        trials: trials.len(),
                        elapsed,
                    },
                    grid: Some(PredictionGrid {
                        model: kind,
                        inputs: test_x.clone(),
                        y_true: test_y.clone(),
                        y_pred: pred,
                    }),
                    fitted: Some(FittedModel {
                        kind,
                        surrogate,
                        trials,
                    }),
                }
            }
            Err(e) => ModelRun {
                report: ModelReport {
                    model: kind,
                    status: RunStatus::Failed,
                    error: Some(e.to_string()),
                    validation_mse: None,
                    test: None,
                    hyperparameters: None,
                    config: Some(base),
                    trials: 0,
                    elapsed,
                },
                grid: None,
                fitted: None,
            },
        }
    };

    let runs: Vec<ModelRun> = if spec.parallel {
        spec.models.par_iter().map(|&k| run_one(k)).collect()
    } else {
        spec.models.iter().map(|&k| run_one(k)).collect()
    };

    let mut models = Vec::new();
    let mut grids = Vec::new();
    let mut fitted = Vec::new();
    for run in runs {
        models.push(run.report);
        grids.extend(run.grid);
        fitted.extend(run.fitted);
    }
    Ok(ExperimentOutput {
        report: Report {
            format: REPORT_FORMAT.to_string(),
            case: spec.case,
            seed: spec.seed,
            n_hf: data.n_hf(),
            n_lf: data.n_lf(),
            n_test: test_y.len(),
            models,
        },
        data,
        grids,
        fitted,
    })
}
