use serde::{Deserialize, Serialize};

use super::{Components, FitOptions, MfModel, StageLog};
use crate::dataset::{DataScaler, MfDataset};
use crate::error::{Error, Result};
use crate::nn::{
    train_with, Composite, Initializer, LayerSpec, Network, NetworkSpec, Tap, Term, TrainConfig, TrainOutcome,
};
use crate::numerics::{Matrix, MinMaxScaler};

/// Width of the three fixed layers in front of the LF readout.
pub const INTERMEDIATE_WIDTH: usize = 64;
pub const INTERMEDIATE_FIXED_LAYERS: usize = 3;

/// Settings shared by the two single-network architectures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllInOneConfig {
    /// Weight of the HF term; the LF term gets `1 − alpha`.
    pub alpha: f64,
    /// Tanh layers after the LF readout (Intermediate) or in the trunk (GPmimic).
    pub depth: usize,
    pub width: usize,
    pub initializer: Initializer,
    pub train: TrainConfig,
    pub seed: u64,
}

impl Default for AllInOneConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            depth: 2,
            width: 32,
            initializer: Initializer::GlorotUniform,
            train: TrainConfig::default(),
            seed: 0,
        }
    }
}

impl AllInOneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        if self.width == 0 {
            return Err(Error::InvalidConfig("width must be positive".into()));
        }
        self.train.validate()
    }
}

/// Layer layout of the Intermediate network. The third layer carries one
/// extra linear unit (index 64) that is read out as `y_LF`.
pub fn intermediate_spec(input_dim: usize, cfg: &AllInOneConfig) -> NetworkSpec {
    let mut hidden = vec![LayerSpec::tanh(INTERMEDIATE_WIDTH); INTERMEDIATE_FIXED_LAYERS];
    let last = INTERMEDIATE_FIXED_LAYERS - 1;
    hidden[last].width += 1;
    hidden[last].linear_tail = 1;
    hidden.extend(std::iter::repeat_n(LayerSpec::tanh(cfg.width), cfg.depth));
    NetworkSpec::new(input_dim, hidden, 1)
        .with_initializer(cfg.initializer)
        .with_seed(cfg.seed)
}

/// Where the Intermediate network exposes `y_LF`.
pub fn intermediate_lf_tap() -> Tap {
    Tap {
        layer: INTERMEDIATE_FIXED_LAYERS - 1,
        units: INTERMEDIATE_WIDTH..INTERMEDIATE_WIDTH + 1,
    }
}

/// Layer layout of GPmimic: a tanh trunk, two linear latent units and a
/// linear head producing `(y_HF, y_LF)`.
pub fn gpmimic_spec(input_dim: usize, cfg: &AllInOneConfig) -> NetworkSpec {
    let mut hidden = vec![LayerSpec::tanh(cfg.width); cfg.depth];
    hidden.push(LayerSpec::linear(2));
    NetworkSpec::new(input_dim, hidden, 2)
        .with_initializer(cfg.initializer)
        .with_seed(cfg.seed)
}

/// Trains `net` on `alpha·MSE_HF + (1 − alpha)·MSE_LF + λ‖W‖²` using
/// already-scaled data.
pub fn train_composite(
    net: Network,
    data: &MfDataset,
    hf_tap: Tap,
    lf_tap: Tap,
    cfg: &AllInOneConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let y_hf = Matrix::column_vector(data.hf_outputs());
    let y_lf = Matrix::column_vector(data.lf_outputs());
    let mut objective = Composite::new(vec![
        Term {
            inputs: data.hf_inputs(),
            targets: &y_hf,
            tap: hf_tap,
            weight: cfg.alpha,
        },
        Term {
            inputs: data.lf_inputs(),
            targets: &y_lf,
            tap: lf_tap,
            weight: 1.0 - cfg.alpha,
        },
    ]);
    train_with(net, &mut objective, &cfg.train)
}

pub fn build_intermediate(data: &MfDataset, cfg: &AllInOneConfig) -> Result<MfModel> {
    build_intermediate_with(data, cfg, &FitOptions::default())
}

pub fn build_intermediate_with(data: &MfDataset, cfg: &AllInOneConfig, opts: &FitOptions) -> Result<MfModel> {
    cfg.validate()?;
    let (scaled, scaler) = opts.prepare(data)?;
    let net = Network::init(intermediate_spec(data.input_dim(), cfg))?;
    let hf_tap = Tap::output(&net);
    let out = train_composite(net, &scaled, hf_tap, intermediate_lf_tap(), cfg)?;
    let log = StageLog::from_outcome("intermediate", &out);
    Ok(MfModel::assemble(
        Components::Intermediate {
            network: out.network,
            config: cfg.clone(),
        },
        scaler,
        vec![log],
    ))
}

pub fn build_gpmimic(data: &MfDataset, cfg: &AllInOneConfig) -> Result<MfModel> {
    build_gpmimic_with(data, cfg, &FitOptions::default())
}

pub fn build_gpmimic_with(data: &MfDataset, cfg: &AllInOneConfig, opts: &FitOptions) -> Result<MfModel> {
    cfg.validate()?;
    let (scaled, scaler) = opts.prepare(data)?;
    let net = Network::init(gpmimic_spec(data.input_dim(), cfg))?;
    let layer = net.output_layer();
    let hf_tap = Tap { layer, units: 0..1 };
    let lf_tap = Tap { layer, units: 1..2 };
    let out = train_composite(net, &scaled, hf_tap, lf_tap, cfg)?;
    let log = StageLog::from_outcome("gpmimic", &out);
    Ok(MfModel::assemble(
        Components::Gpmimic {
            network: out.network,
            config: cfg.clone(),
        },
        scaler,
        vec![log],
    ))
}

/// Settings for the plain HF-only network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleFidelityConfig {
    pub depth: usize,
    pub width: usize,
    pub initializer: Initializer,
    pub train: TrainConfig,
    pub seed: u64,
}

impl Default for SingleFidelityConfig {
    fn default() -> Self {
        Self {
            depth: 2,
            width: 32,
            initializer: Initializer::GlorotUniform,
            train: TrainConfig::default(),
            seed: 0,
        }
    }
}

impl SingleFidelityConfig {
    pub fn spec(&self, input_dim: usize) -> NetworkSpec {
        NetworkSpec::new(input_dim, vec![LayerSpec::tanh(self.width); self.depth], 1)
            .with_initializer(self.initializer)
            .with_seed(self.seed)
    }
}

/// Regression on HF samples alone.
pub fn build_single_fidelity(inputs: &Matrix, outputs: &[f64], cfg: &SingleFidelityConfig) -> Result<MfModel> {
    if inputs.rows() != outputs.len() {
        return Err(Error::DimensionMismatch {
            expected: inputs.rows(),
            got: outputs.len(),
        });
    }
    if inputs.rows() == 0 {
        return Err(Error::EmptyData);
    }
    let scaler = DataScaler {
        x: MinMaxScaler::fit(inputs)?,
        y_hf: MinMaxScaler::fit_values(outputs)?,
        y_lf: MinMaxScaler::identity(1),
    };
    fit_single_fidelity(inputs, outputs, cfg, scaler)
}

/// Regression on the HF part of `data`. A scaler in `opts` is used for the
/// inputs and HF outputs; the LF samples are ignored.
pub fn build_single_fidelity_with(data: &MfDataset, cfg: &SingleFidelityConfig, opts: &FitOptions) -> Result<MfModel> {
    match opts.scaler {
        Some(s) => {
            let scaler = DataScaler {
                x: s.x.clone(),
                y_hf: s.y_hf.clone(),
                y_lf: MinMaxScaler::identity(1),
            };
            fit_single_fidelity(data.hf_inputs(), data.hf_outputs(), cfg, scaler)
        }
        None => build_single_fidelity(data.hf_inputs(), data.hf_outputs(), cfg),
    }
}

fn fit_single_fidelity(
    inputs: &Matrix,
    outputs: &[f64],
    cfg: &SingleFidelityConfig,
    scaler: DataScaler,
) -> Result<MfModel> {
    let xs = scaler.x.transform(inputs)?;
    let ys = Matrix::column_vector(&scaler.y_hf.transform_values(outputs)?);
    let net = Network::init(cfg.spec(inputs.cols()))?;
    let out = crate::nn::train(net, &xs, &ys, &cfg.train)?;
    let log = StageLog::from_outcome("single_fidelity", &out);
    Ok(MfModel::assemble(
        Components::SingleFidelity {
            network: out.network,
            config: cfg.clone(),
        },
        scaler,
        vec![log],
    ))
}
