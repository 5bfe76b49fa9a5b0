use serde::{Deserialize, Serialize};

use super::loss::{l2_penalty, Objective, Supervised};
use super::network::Network;
use super::optim::{OptimizerKind, OptimizerState};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub l2_penalty: f64,
    pub max_epochs: usize,
    /// Epochs without an improvement larger than `early_stop_min_delta`
    /// before stopping; 0 disables early stopping.
    pub early_stop_patience: usize,
    pub early_stop_min_delta: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerKind::Adam,
            learning_rate: 1e-3,
            l2_penalty: 0.0,
            max_epochs: 20_000,
            early_stop_patience: 500,
            early_stop_min_delta: 1e-9,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.l2_penalty >= 0.0 && self.l2_penalty.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "l2 penalty must be non-negative, got {}",
                self.l2_penalty
            )));
        }
        if !(self.early_stop_min_delta >= 0.0) {
            return Err(Error::InvalidConfig("early-stop delta must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters with the lowest recorded loss.
    pub network: Network,
    /// Loss of the parameters at the start of each epoch.
    pub history: Vec<f64>,
    pub best_epoch: Option<usize>,
    pub best_loss: f64,
}

/// Full-batch regression training on `(inputs, targets)`.
pub fn train(net: Network, inputs: &Matrix, targets: &Matrix, cfg: &TrainConfig) -> Result<TrainOutcome> {
    if inputs.rows() == 0 {
        return Err(Error::EmptyData);
    }
    train_with(net, &mut Supervised { inputs, targets }, cfg)
}

/// Full-batch gradient training of an arbitrary objective plus `λ‖W‖²`.
pub fn train_with<O: Objective + ?Sized>(
    mut net: Network,
    objective: &mut O,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let n = net.num_params();
    let mut state = OptimizerState::new(cfg.optimizer, n);
    let mut grad = vec![0.0; n];
    let mut best = net.params().to_vec();
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = None;
    let mut history = Vec::with_capacity(cfg.max_epochs.min(100_000));
    let mut stalled = 0usize;

    for epoch in 0..cfg.max_epochs {
        grad.fill(0.0);
        let data = objective.data_loss_and_grad(&net, &mut grad)?;
        let loss = data + l2_penalty(&net, cfg.l2_penalty, Some(&mut grad));
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::DivergedTraining { epoch, stage: None });
        }
        history.push(loss);

        let improved = loss < best_loss - cfg.early_stop_min_delta;
        if loss < best_loss {
            best_loss = loss;
            best_epoch = Some(epoch);
            best.copy_from_slice(net.params());
        }
        if improved {
            stalled = 0;
        } else {
            stalled += 1;
            if cfg.early_stop_patience > 0 && stalled >= cfg.early_stop_patience {
                break;
            }
        }
        state.step(net.params_mut(), &grad, cfg.learning_rate);
    }

    net.params_mut().copy_from_slice(&best);
    Ok(TrainOutcome {
        network: net,
        history,
        best_epoch,
        best_loss,
    })
}
