//! Model selection glue: architecture names, fit configurations, fitted
//! surrogates and hyperparameter tuning.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{DataScaler, MfDataset};
use crate::error::{Error, Result};
use crate::gp::{GpFitOptions, GpSurrogate, KernelFamily, GP_FORMAT};
use crate::hpo::{
    self, cross_validate, default_search_space, optimize, Config, CvPlan, HfPredictor, HpoOutcome, HpoSettings,
};
use crate::mfnn::{
    build_gpmimic_with, build_intermediate_with, build_single_fidelity_with, build_three_step_with,
    build_two_step_with, AllInOneConfig, FitOptions, LfStageCache, MfModel, MultilevelConfig, SingleFidelityConfig,
    MODEL_FORMAT,
};
use crate::nn::{Initializer, OptimizerKind, TrainConfig};
use crate::numerics::{derive_seed, stream_of, Matrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Intermediate,
    Gpmimic,
    TwoStep,
    ThreeStep,
    SingleFidelity,
    CoKriging,
    Gpr,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::Intermediate,
        ModelKind::Gpmimic,
        ModelKind::TwoStep,
        ModelKind::ThreeStep,
        ModelKind::SingleFidelity,
        ModelKind::CoKriging,
        ModelKind::Gpr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Intermediate => "intermediate",
            ModelKind::Gpmimic => "gpmimic",
            ModelKind::TwoStep => "two-step",
            ModelKind::ThreeStep => "three-step",
            ModelKind::SingleFidelity => "single-fidelity",
            ModelKind::CoKriging => "cokriging",
            ModelKind::Gpr => "gpr",
        }
    }

    pub fn is_gp(self) -> bool {
        matches!(self, ModelKind::CoKriging | ModelKind::Gpr)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    /// Accepts hyphens or underscores, e.g. `three-step` or `three_step`.
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        let kind = match norm.as_str() {
            "intermediate" => ModelKind::Intermediate,
            "gpmimic" => ModelKind::Gpmimic,
            "two-step" | "2-step" => ModelKind::TwoStep,
            "three-step" | "3-step" => ModelKind::ThreeStep,
            "single-fidelity" | "single" => ModelKind::SingleFidelity,
            "cokriging" | "co-kriging" => ModelKind::CoKriging,
            "gpr" => ModelKind::Gpr,
            _ => return Err(Error::InvalidConfig(format!("unknown model `{s}`"))),
        };
        Ok(kind)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoKrigingConfig {
    /// Kernel families of the two latent processes; `None` picks the
    /// family with the higher marginal likelihood.
    pub kernels: Option<[KernelFamily; 2]>,
    pub fit: GpFitOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GprConfig {
    pub kernel: KernelFamily,
    pub fit: GpFitOptions,
}

/// Everything needed to fit one model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelConfig {
    Intermediate(AllInOneConfig),
    Gpmimic(AllInOneConfig),
    TwoStep(MultilevelConfig),
    ThreeStep(MultilevelConfig),
    SingleFidelity(SingleFidelityConfig),
    CoKriging(CoKrigingConfig),
    Gpr(GprConfig),
}

impl ModelConfig {
    /// Defaults for `kind` with every seed derived from `seed`.
    pub fn default_for(kind: ModelKind, seed: u64) -> Self {
        let cfg = match kind {
            ModelKind::Intermediate => ModelConfig::Intermediate(AllInOneConfig::default()),
            ModelKind::Gpmimic => ModelConfig::Gpmimic(AllInOneConfig::default()),
            ModelKind::TwoStep => ModelConfig::TwoStep(MultilevelConfig::default()),
            ModelKind::ThreeStep => ModelConfig::ThreeStep(MultilevelConfig::default()),
            ModelKind::SingleFidelity => ModelConfig::SingleFidelity(SingleFidelityConfig::default()),
            ModelKind::CoKriging => ModelConfig::CoKriging(CoKrigingConfig {
                kernels: None,
                fit: GpFitOptions::default(),
            }),
            ModelKind::Gpr => ModelConfig::Gpr(GprConfig {
                kernel: KernelFamily::Rbf,
                fit: GpFitOptions::default(),
            }),
        };
        let mut cfg = cfg.with_seed(derive_seed(seed, stream_of("model")));
        if let ModelConfig::TwoStep(m) | ModelConfig::ThreeStep(m) = &mut cfg {
            m.lf_seed = derive_seed(seed, stream_of("lf_stage"));
        }
        cfg
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelConfig::Intermediate(_) => ModelKind::Intermediate,
            ModelConfig::Gpmimic(_) => ModelKind::Gpmimic,
            ModelConfig::TwoStep(_) => ModelKind::TwoStep,
            ModelConfig::ThreeStep(_) => ModelKind::ThreeStep,
            ModelConfig::SingleFidelity(_) => ModelKind::SingleFidelity,
            ModelConfig::CoKriging(_) => ModelKind::CoKriging,
            ModelConfig::Gpr(_) => ModelKind::Gpr,
        }
    }

    /// Replaces the per-fit seed. The NN_LF seed of multilevel models is
    /// left alone so the LF stage stays shareable.
    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            ModelConfig::Intermediate(c) | ModelConfig::Gpmimic(c) => c.seed = seed,
            ModelConfig::TwoStep(c) | ModelConfig::ThreeStep(c) => c.seed = seed,
            ModelConfig::SingleFidelity(c) => c.seed = seed,
            ModelConfig::CoKriging(c) => c.fit.seed = seed,
            ModelConfig::Gpr(c) => c.fit.seed = seed,
        }
        self
    }

    /// Caps the epochs of every tuned training stage (not NN_LF).
    pub fn with_max_epochs(mut self, epochs: usize) -> Self {
        match &mut self {
            ModelConfig::Intermediate(c) | ModelConfig::Gpmimic(c) => c.train.max_epochs = epochs,
            ModelConfig::TwoStep(c) | ModelConfig::ThreeStep(c) => {
                c.hf_train.max_epochs = epochs;
                c.lin_train.max_epochs = epochs;
            }
            ModelConfig::SingleFidelity(c) => c.train.max_epochs = epochs,
            ModelConfig::CoKriging(_) | ModelConfig::Gpr(_) => {}
        }
        self
    }

    /// Sets the epochs of every training stage, NN_LF included.
    pub fn with_all_epochs(self, epochs: usize) -> Self {
        let mut cfg = self.with_max_epochs(epochs);
        if let ModelConfig::TwoStep(m) | ModelConfig::ThreeStep(m) = &mut cfg {
            m.lf_train.max_epochs = epochs;
        }
        cfg
    }

    /// Copies the hyperparameters in `hp` into this configuration. Names
    /// missing from `hp` keep their current value.
    pub fn apply(&self, hp: &Config) -> Result<Self> {
        let mut out = self.clone();
        let int = |name: &str| -> Result<Option<usize>> {
            match hp.get(name) {
                None => Ok(None),
                Some(v) => v
                    .as_i64()
                    .filter(|&i| i > 0)
                    .map(|i| Some(i as usize))
                    .ok_or_else(|| Error::InvalidConfig(format!("`{name}` must be a positive integer"))),
            }
        };
        let real = |name: &str| -> Result<Option<f64>> {
            match hp.get(name) {
                None => Ok(None),
                Some(v) => v
                    .as_f64()
                    .map(Some)
                    .ok_or_else(|| Error::InvalidConfig(format!("`{name}` must be a number"))),
            }
        };
        let initializer = match hp.get(hpo::INITIALIZER) {
            None => None,
            Some(v) => Some(
                v.as_str()
                    .and_then(Initializer::from_name)
                    .ok_or_else(|| Error::InvalidConfig(format!("unknown initializer {v:?}")))?,
            ),
        };
        let optimizer = match hp.get(hpo::OPTIMIZER) {
            None => None,
            Some(v) => Some(
                v.as_str()
                    .and_then(OptimizerKind::from_name)
                    .ok_or_else(|| Error::InvalidConfig(format!("unknown optimizer {v:?}")))?,
            ),
        };
        let lr = real(hpo::LEARNING_RATE)?;
        let l2 = real(hpo::L2_PENALTY)?;
        let set_train = |t: &mut TrainConfig| {
            if let Some(o) = optimizer {
                t.optimizer = o;
            }
            if let Some(v) = lr {
                t.learning_rate = v;
            }
            if let Some(v) = l2 {
                t.l2_penalty = v;
            }
        };
        match &mut out {
            ModelConfig::Intermediate(c) | ModelConfig::Gpmimic(c) => {
                set_train(&mut c.train);
                if let Some(i) = initializer {
                    c.initializer = i;
                }
                if let Some(a) = real(hpo::ALPHA)? {
                    c.alpha = a;
                }
                if let Some(d) = int(hpo::DEPTH)? {
                    c.depth = d;
                }
                if let Some(w) = int(hpo::WIDTH)? {
                    c.width = w;
                }
            }
            ModelConfig::TwoStep(c) | ModelConfig::ThreeStep(c) => {
                set_train(&mut c.hf_train);
                set_train(&mut c.lin_train);
                if let Some(i) = initializer {
                    c.initializer = i;
                }
                if let Some(w) = int(hpo::WIDTH)? {
                    c.hf_width = w;
                }
                if let Some(w) = int(hpo::LIN_WIDTH)? {
                    c.lin_width = w;
                }
            }
            ModelConfig::SingleFidelity(c) => {
                set_train(&mut c.train);
                if let Some(i) = initializer {
                    c.initializer = i;
                }
                if let Some(d) = int(hpo::DEPTH)? {
                    c.depth = d;
                }
                if let Some(w) = int(hpo::WIDTH)? {
                    c.width = w;
                }
            }
            ModelConfig::CoKriging(_) | ModelConfig::Gpr(_) => {}
        }
        Ok(out)
    }

    pub fn fit(&self, data: &MfDataset) -> Result<Surrogate> {
        self.fit_with(data, &FitOptions::default())
    }

    /// Fits on `data`. The options apply to network models; GP models fit
    /// their own scaler.
    pub fn fit_with(&self, data: &MfDataset, opts: &FitOptions) -> Result<Surrogate> {
        Ok(match self {
            ModelConfig::Intermediate(c) => Surrogate::Nn(build_intermediate_with(data, c, opts)?),
            ModelConfig::Gpmimic(c) => Surrogate::Nn(build_gpmimic_with(data, c, opts)?),
            ModelConfig::TwoStep(c) => Surrogate::Nn(build_two_step_with(data, c, opts)?),
            ModelConfig::ThreeStep(c) => Surrogate::Nn(build_three_step_with(data, c, opts)?),
            ModelConfig::SingleFidelity(c) => Surrogate::Nn(build_single_fidelity_with(data, c, opts)?),
            ModelConfig::CoKriging(c) => Surrogate::Gp(GpSurrogate::fit_cokriging(data, c.kernels, &c.fit)?),
            ModelConfig::Gpr(c) => Surrogate::Gp(GpSurrogate::fit_single(
                data.hf_inputs(),
                data.hf_outputs(),
                c.kernel,
                &c.fit,
            )?),
        })
    }
}

/// A fitted model of any kind.
#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum Surrogate {
    Nn(MfModel),
    Gp(GpSurrogate),
}

impl Surrogate {
    pub fn input_dim(&self) -> usize {
        match self {
            Surrogate::Nn(m) => m.input_dim(),
            Surrogate::Gp(g) => g.input_dim(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Surrogate::Nn(m) => m.variant_name(),
            Surrogate::Gp(g) => g.kind_name(),
        }
    }

    /// HF predictions in raw units.
    pub fn predict_hf_batch(&self, inputs: &Matrix) -> Result<Vec<f64>> {
        match self {
            Surrogate::Nn(m) => m.predict_hf_batch(inputs),
            Surrogate::Gp(g) => Ok(g.predict_hf_batch(inputs)?.0),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        match self {
            Surrogate::Nn(m) => m.to_json(),
            Surrogate::Gp(g) => g.to_json(),
        }
    }

    /// Dispatches on the `format` field of the document.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            format: String,
        }
        let header: Header =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("unreadable model file: {e}")))?;
        match header.format.as_str() {
            MODEL_FORMAT => Ok(Surrogate::Nn(MfModel::from_json(text)?)),
            GP_FORMAT => Ok(Surrogate::Gp(GpSurrogate::from_json(text)?)),
            other => Err(Error::Format(format!("unknown model format `{other}`"))),
        }
    }
}

impl HfPredictor for Surrogate {
    fn predict_hf(&self, inputs: &Matrix) -> Result<Vec<f64>> {
        self.predict_hf_batch(inputs)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TuneSettings {
    pub hpo: HpoSettings,
    /// `None` picks LOOCV or 5-fold from the HF sample count.
    pub cv: Option<CvPlan>,
    /// Epoch cap applied while scoring trials. The final fit keeps the
    /// configured epochs.
    pub trial_max_epochs: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct Tuned {
    pub config: ModelConfig,
    /// Absent for models without tuned dimensions.
    pub outcome: Option<HpoOutcome>,
}

impl Tuned {
    pub fn validation_mse(&self) -> Option<f64> {
        self.outcome.as_ref().and_then(|o| o.best.objective)
    }
}

/// Searches the default space of `base.kind()` by cross-validation.
///
/// The data is min-max scaled once and every fold trains in those fixed
/// units, so objectives are in scaled units. Rescaling per fold would let
/// held-out points fall far outside `[0, 1]` when HF samples are few.
pub fn tune(
    base: &ModelConfig,
    data: &MfDataset,
    settings: &TuneSettings,
    cache: Option<&LfStageCache>,
) -> Result<Tuned> {
    let space = default_search_space(base.kind());
    if space.is_empty() {
        return Ok(Tuned {
            config: base.clone(),
            outcome: None,
        });
    }
    let (scaled, _) = data.normalized()?;
    let identity = DataScaler::identity(data.input_dim());
    let opts = FitOptions {
        scaler: Some(&identity),
        lf_cache: cache,
    };
    let plan = settings
        .cv
        .unwrap_or_else(|| CvPlan::for_sample_count(data.n_hf(), derive_seed(settings.hpo.seed, stream_of("folds"))));
    let outcome = optimize(
        &space,
        |hp, trial_seed| {
            let mut cfg = base.apply(hp)?;
            if let Some(e) = settings.trial_max_epochs {
                cfg = cfg.with_max_epochs(e);
            }
            cross_validate(
                |fold: &MfDataset, seed| cfg.clone().with_seed(seed).fit_with(fold, &opts),
                &scaled,
                &plan,
                trial_seed,
            )
        },
        &settings.hpo,
    )?;
    let config = base.apply(&outcome.best.config)?;
    Ok(Tuned {
        config,
        outcome: Some(outcome),
    })
}
