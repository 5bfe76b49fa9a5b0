use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{Components, FitOptions, MfModel, StageLog};
use crate::dataset::MfDataset;
use crate::error::{Error, Result};
use crate::nn::{train, Initializer, LayerSpec, Network, NetworkSpec, TrainConfig};
use crate::numerics::{cholesky, derive_seed, solve_cholesky, stream_of, Matrix};

/// Settings for the sequentially trained architectures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultilevelConfig {
    /// Hidden widths of NN_LF (tanh).
    pub lf_hidden: Vec<usize>,
    pub lf_initializer: Initializer,
    pub lf_train: TrainConfig,
    /// Seed of the NN_LF stage. Kept apart from `seed` so the LF stage can be
    /// shared between configurations that only differ in later stages.
    pub lf_seed: u64,
    /// Width of the single tanh hidden layer of NN_HF.
    pub hf_width: usize,
    /// Width of the linear hidden layer of NN_lin (3-step only).
    pub lin_width: usize,
    /// Initializer of NN_HF and NN_lin.
    pub initializer: Initializer,
    pub hf_train: TrainConfig,
    pub lin_train: TrainConfig,
    /// Fit NN_lin by ridge regression instead of gradient descent.
    #[serde(default)]
    pub lin_closed_form: bool,
    pub seed: u64,
}

impl Default for MultilevelConfig {
    fn default() -> Self {
        Self {
            lf_hidden: vec![64, 64, 64],
            lf_initializer: Initializer::GlorotUniform,
            lf_train: TrainConfig::default(),
            lf_seed: 0,
            hf_width: 32,
            lin_width: 8,
            initializer: Initializer::GlorotUniform,
            hf_train: TrainConfig::default(),
            lin_train: TrainConfig::default(),
            lin_closed_form: false,
            seed: 0,
        }
    }
}

impl MultilevelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hf_width == 0 || self.lin_width == 0 || self.lf_hidden.contains(&0) {
            return Err(Error::InvalidConfig("layer widths must be positive".into()));
        }
        self.lf_train.validate()?;
        self.hf_train.validate()?;
        self.lin_train.validate()
    }

    pub fn lf_spec(&self, input_dim: usize) -> NetworkSpec {
        let hidden = self.lf_hidden.iter().map(|&w| LayerSpec::tanh(w)).collect();
        NetworkSpec::new(input_dim, hidden, 1)
            .with_initializer(self.lf_initializer)
            .with_seed(derive_seed(self.lf_seed, stream_of("nn_lf")))
    }

    pub fn lin_spec(&self, input_dim: usize) -> NetworkSpec {
        NetworkSpec::new(input_dim + 1, vec![LayerSpec::linear(self.lin_width)], 1)
            .with_initializer(self.initializer)
            .with_seed(derive_seed(self.seed, stream_of("nn_lin")))
    }

    /// NN_HF reads `x` plus `extra` derived features.
    pub fn hf_spec(&self, input_dim: usize, extra: usize) -> NetworkSpec {
        NetworkSpec::new(input_dim + extra, vec![LayerSpec::tanh(self.hf_width)], 1)
            .with_initializer(self.initializer)
            .with_seed(derive_seed(self.seed, stream_of("nn_hf")))
    }
}

#[derive(Clone, Debug, PartialEq)]
struct LfKey {
    spec: NetworkSpec,
    train: TrainConfig,
    inputs: Matrix,
    outputs: Vec<f64>,
}

/// Memo of trained NN_LF stages. Training is deterministic, so a hit is
/// exactly the network a fresh run would produce.
#[derive(Debug, Default)]
pub struct LfStageCache {
    entries: Mutex<Vec<(LfKey, Network, StageLog)>>,
}

const CACHE_CAPACITY: usize = 8;

impl LfStageCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().map(|e| e.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get_or_train(
        &self,
        key: LfKey,
        fit: impl FnOnce(&LfKey) -> Result<(Network, StageLog)>,
    ) -> Result<(Network, StageLog)> {
        if let Ok(entries) = self.entries.lock() {
            if let Some((_, net, log)) = entries.iter().find(|(k, _, _)| *k == key) {
                return Ok((net.clone(), log.clone()));
            }
        }
        let (net, log) = fit(&key)?;
        if let Ok(mut entries) = self.entries.lock() {
            if !entries.iter().any(|(k, _, _)| *k == key) {
                if entries.len() >= CACHE_CAPACITY {
                    entries.remove(0);
                }
                entries.push((key, net.clone(), log.clone()));
            }
        }
        Ok((net, log))
    }
}

fn train_lf_stage(
    scaled: &MfDataset,
    cfg: &MultilevelConfig,
    cache: Option<&LfStageCache>,
) -> Result<(Network, StageLog)> {
    let key = LfKey {
        spec: cfg.lf_spec(scaled.input_dim()),
        train: cfg.lf_train.clone(),
        inputs: scaled.lf_inputs().clone(),
        outputs: scaled.lf_outputs().to_vec(),
    };
    let fit = |key: &LfKey| -> Result<(Network, StageLog)> {
        let net = Network::init(key.spec.clone())?;
        let y = Matrix::column_vector(&key.outputs);
        let out = train(net, &key.inputs, &y, &key.train).map_err(|e| e.in_stage("nn_lf"))?;
        let log = StageLog::from_outcome("nn_lf", &out);
        Ok((out.network, log))
    };
    match cache {
        Some(cache) => cache.get_or_train(key, fit),
        None => fit(&key),
    }
}

/// Appends the single output column of `net(inputs)` to `inputs`.
pub(crate) fn augment(net: &Network, inputs: &Matrix) -> Result<Matrix> {
    let extra = net.predict_batch(inputs)?;
    inputs.hstack(&extra)
}

pub fn build_two_step(data: &MfDataset, cfg: &MultilevelConfig) -> Result<MfModel> {
    build_two_step_with(data, cfg, &FitOptions::default())
}

pub fn build_two_step_with(data: &MfDataset, cfg: &MultilevelConfig, opts: &FitOptions) -> Result<MfModel> {
    cfg.validate()?;
    let (scaled, scaler) = opts.prepare(data)?;
    let (lf, lf_log) = train_lf_stage(&scaled, cfg, opts.lf_cache)?;
    let (hf, hf_log) = fit_hf_stage(&scaled, &[&lf], cfg)?;
    Ok(MfModel::assemble(
        Components::TwoStep {
            lf,
            hf,
            config: cfg.clone(),
        },
        scaler,
        vec![lf_log, hf_log],
    ))
}

pub fn build_three_step(data: &MfDataset, cfg: &MultilevelConfig) -> Result<MfModel> {
    build_three_step_with(data, cfg, &FitOptions::default())
}

pub fn build_three_step_with(data: &MfDataset, cfg: &MultilevelConfig, opts: &FitOptions) -> Result<MfModel> {
    cfg.validate()?;
    let (scaled, scaler) = opts.prepare(data)?;
    let (lf, lf_log) = train_lf_stage(&scaled, cfg, opts.lf_cache)?;
    let z = augment(&lf, scaled.hf_inputs())?;
    let y = Matrix::column_vector(scaled.hf_outputs());
    let (lin, lin_log) = if cfg.lin_closed_form {
        let net = fit_lin_ridge(&z, scaled.hf_outputs(), cfg)?;
        let log = StageLog {
            stage: "nn_lin".into(),
            epochs: 0,
            best_loss: crate::nn::loss(&net, &z, &y, cfg.lin_train.l2_penalty)?,
            history: Vec::new(),
        };
        (net, log)
    } else {
        let net = Network::init(cfg.lin_spec(data.input_dim()))?;
        let out = train(net, &z, &y, &cfg.lin_train).map_err(|e| e.in_stage("nn_lin"))?;
        let log = StageLog::from_outcome("nn_lin", &out);
        (out.network, log)
    };
    let (hf, hf_log) = fit_hf_stage(&scaled, &[&lf, &lin], cfg)?;
    Ok(MfModel::assemble(
        Components::ThreeStep {
            lf,
            lin,
            hf,
            config: cfg.clone(),
        },
        scaler,
        vec![lf_log, lin_log, hf_log],
    ))
}

/// Trains NN_HF on the HF inputs augmented by each of `chain` in turn.
fn fit_hf_stage(scaled: &MfDataset, chain: &[&Network], cfg: &MultilevelConfig) -> Result<(Network, StageLog)> {
    let mut z = scaled.hf_inputs().clone();
    for net in chain {
        z = augment(net, &z)?;
    }
    let net = Network::init(cfg.hf_spec(scaled.input_dim(), chain.len()))?;
    let y = Matrix::column_vector(scaled.hf_outputs());
    let out = train(net, &z, &y, &cfg.hf_train).map_err(|e| e.in_stage("nn_hf"))?;
    let log = StageLog::from_outcome("nn_hf", &out);
    Ok((out.network, log))
}

/// Ridge fit of NN_lin. The hidden layer copies its inputs (identity block)
/// and the output layer holds the regression coefficients.
fn fit_lin_ridge(z: &Matrix, y: &[f64], cfg: &MultilevelConfig) -> Result<Network> {
    let p = z.cols();
    if cfg.lin_width < p {
        return Err(Error::InvalidConfig(format!(
            "closed-form NN_lin needs width ≥ {p}, got {}",
            cfg.lin_width
        )));
    }
    let n = z.rows() as f64;
    let mean_z: Vec<f64> = (0..p).map(|j| z.column(j).iter().sum::<f64>() / n).collect();
    let mean_y = y.iter().sum::<f64>() / n;
    // Normal equations of (1/N)‖y − Zβ − c‖² + λ‖β‖² on centred data.
    let mut a = Matrix::zeros(p, p);
    let mut b = vec![0.0; p];
    for (row, &yi) in z.row_iter().zip(y) {
        for i in 0..p {
            let zi = row[i] - mean_z[i];
            b[i] += zi * (yi - mean_y) / n;
            for j in 0..p {
                a.as_mut_slice()[i * p + j] += zi * (row[j] - mean_z[j]) / n;
            }
        }
    }
    a.add_diagonal(cfg.lin_train.l2_penalty.max(1e-12));
    let l = cholesky(&a, 0.0)?;
    let beta = solve_cholesky(&l, &b)?;
    let intercept = mean_y - beta.iter().zip(&mean_z).map(|(b, m)| b * m).sum::<f64>();

    let mut net = Network::init(cfg.lin_spec(p - 1))?;
    let w = cfg.lin_width;
    let hidden = Matrix::from_fn(w, p, |i, j| if i == j { 1.0 } else { 0.0 });
    net.set_layer(0, &hidden, &vec![0.0; w])?;
    let out = Matrix::from_fn(1, w, |_, j| if j < p { beta[j] } else { 0.0 });
    net.set_layer(1, &out, &[intercept])?;
    Ok(net)
}

impl MfModel {
    /// Retrains only the final NN_HF stage of a multilevel model, leaving
    /// NN_LF (and NN_lin) untouched.
    pub fn refit_hf_stage(&self, data: &MfDataset, hf_train: &TrainConfig, seed: u64) -> Result<MfModel> {
        // The earlier stages were trained under the stored scaler.
        let scaler = self.scaler().clone();
        let scaled = data.scaled(&scaler)?;
        match self.components() {
            Components::TwoStep { lf, config, .. } => {
                let cfg = MultilevelConfig {
                    hf_train: hf_train.clone(),
                    seed,
                    ..config.clone()
                };
                let (hf, log) = fit_hf_stage(&scaled, &[lf], &cfg)?;
                Ok(MfModel::assemble(
                    Components::TwoStep {
                        lf: lf.clone(),
                        hf,
                        config: cfg,
                    },
                    scaler,
                    vec![log],
                ))
            }
            Components::ThreeStep { lf, lin, config, .. } => {
                let cfg = MultilevelConfig {
                    hf_train: hf_train.clone(),
                    seed,
                    ..config.clone()
                };
                let (hf, log) = fit_hf_stage(&scaled, &[lf, lin], &cfg)?;
                Ok(MfModel::assemble(
                    Components::ThreeStep {
                        lf: lf.clone(),
                        lin: lin.clone(),
                        hf,
                        config: cfg,
                    },
                    scaler,
                    vec![log],
                ))
            }
            _ => Err(Error::InvalidConfig(
                "only multilevel models have separate stages".into(),
            )),
        }
    }
}
