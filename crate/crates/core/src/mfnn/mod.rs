//! Multi-fidelity neural-network architectures.
//!
//! All-in-one models (Intermediate, GPmimic) train one network on the
//! α-weighted HF/LF loss. Multilevel models (2-step, 3-step) train a chain
//! of networks one stage at a time. Every model predicts the HF output.

mod all_in_one;
mod multilevel;

pub use all_in_one::{
    build_gpmimic, build_gpmimic_with, build_intermediate, build_intermediate_with, build_single_fidelity,
    build_single_fidelity_with, gpmimic_spec, intermediate_lf_tap, intermediate_spec, train_composite, AllInOneConfig,
    SingleFidelityConfig, INTERMEDIATE_FIXED_LAYERS, INTERMEDIATE_WIDTH,
};
pub use multilevel::{
    build_three_step, build_three_step_with, build_two_step, build_two_step_with, LfStageCache, MultilevelConfig,
};

use serde::{Deserialize, Serialize};

use crate::dataset::{DataScaler, MfDataset};
use crate::error::{Error, Result};
use crate::nn::{Network, TrainOutcome};
use crate::numerics::Matrix;
use multilevel::augment;

pub const MODEL_FORMAT: &str = "mufide-model-v1";

/// Trained networks of each architecture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum Components {
    Intermediate {
        network: Network,
        config: AllInOneConfig,
    },
    Gpmimic {
        network: Network,
        config: AllInOneConfig,
    },
    TwoStep {
        lf: Network,
        hf: Network,
        config: MultilevelConfig,
    },
    ThreeStep {
        lf: Network,
        lin: Network,
        hf: Network,
        config: MultilevelConfig,
    },
    SingleFidelity {
        network: Network,
        config: SingleFidelityConfig,
    },
}

impl Components {
    pub fn variant_name(&self) -> &'static str {
        match self {
            Components::Intermediate { .. } => "intermediate",
            Components::Gpmimic { .. } => "gpmimic",
            Components::TwoStep { .. } => "two_step",
            Components::ThreeStep { .. } => "three_step",
            Components::SingleFidelity { .. } => "single_fidelity",
        }
    }

    fn input_dim(&self) -> usize {
        match self {
            Components::Intermediate { network, .. }
            | Components::Gpmimic { network, .. }
            | Components::SingleFidelity { network, .. } => network.input_dim(),
            Components::TwoStep { lf, .. } | Components::ThreeStep { lf, .. } => lf.input_dim(),
        }
    }
}

/// Optional inputs shared by the `build_*_with` functions.
#[derive(Clone, Copy, Debug, Default)]
pub struct FitOptions<'a> {
    /// Fixed scaler; `None` fits one to the training data.
    pub scaler: Option<&'a DataScaler>,
    /// NN_LF stages shared between multilevel fits.
    pub lf_cache: Option<&'a LfStageCache>,
}

impl FitOptions<'_> {
    pub(crate) fn prepare(&self, data: &MfDataset) -> Result<(MfDataset, DataScaler)> {
        match self.scaler {
            Some(s) => {
                if s.x.dim() != data.input_dim() {
                    return Err(Error::DimensionMismatch {
                        expected: s.x.dim(),
                        got: data.input_dim(),
                    });
                }
                Ok((data.scaled(s)?, s.clone()))
            }
            None => data.normalized(),
        }
    }
}

/// Loss record of one training stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageLog {
    pub stage: String,
    pub epochs: usize,
    pub best_loss: f64,
    #[serde(skip)]
    pub history: Vec<f64>,
}

impl StageLog {
    pub(crate) fn from_outcome(stage: &str, out: &TrainOutcome) -> Self {
        Self {
            stage: stage.to_string(),
            epochs: out.history.len(),
            best_loss: out.best_loss,
            history: out.history.clone(),
        }
    }
}

/// A trained multi-fidelity network model with its data scaling.
#[derive(Clone, Debug, PartialEq)]
pub struct MfModel {
    components: Components,
    scaler: DataScaler,
    training: Vec<StageLog>,
}

impl MfModel {
    pub(crate) fn assemble(components: Components, scaler: DataScaler, training: Vec<StageLog>) -> Self {
        Self {
            components,
            scaler,
            training,
        }
    }

    pub fn components(&self) -> &Components {
        &self.components
    }

    pub fn variant_name(&self) -> &'static str {
        self.components.variant_name()
    }

    pub fn scaler(&self) -> &DataScaler {
        &self.scaler
    }

    pub fn training(&self) -> &[StageLog] {
        &self.training
    }

    pub fn input_dim(&self) -> usize {
        self.components.input_dim()
    }

    /// HF prediction at one raw input.
    pub fn predict_hf(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let row = Matrix::from_vec(1, x.len(), x.to_vec())?;
        Ok(self.predict_hf_batch(&row)?[0])
    }

    /// HF predictions at each row of `inputs`, in raw units.
    pub fn predict_hf_batch(&self, inputs: &Matrix) -> Result<Vec<f64>> {
        if inputs.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: inputs.cols(),
            });
        }
        let scaled = self.scaler.x.transform(inputs)?;
        let y = self.predict_scaled(&scaled)?;
        self.scaler.y_hf.inverse_transform_values(&y)
    }

    /// HF predictions on already-scaled inputs, in scaled output units.
    pub fn predict_scaled(&self, inputs: &Matrix) -> Result<Vec<f64>> {
        let out = match &self.components {
            Components::Intermediate { network, .. } | Components::SingleFidelity { network, .. } => {
                network.predict_batch(inputs)?
            }
            Components::Gpmimic { network, .. } => {
                let both = network.predict_batch(inputs)?;
                Matrix::column_vector(&both.column(0))
            }
            Components::TwoStep { lf, hf, .. } => hf.predict_batch(&augment(lf, inputs)?)?,
            Components::ThreeStep { lf, lin, hf, .. } => {
                let z = augment(lf, inputs)?;
                hf.predict_batch(&augment(lin, &z)?)?
            }
        };
        Ok(out.into_vec())
    }

    /// LF prediction in raw units, for architectures that produce one.
    pub fn predict_lf_batch(&self, inputs: &Matrix) -> Result<Option<Vec<f64>>> {
        let scaled = self.scaler.x.transform(inputs)?;
        let lf = match &self.components {
            Components::Intermediate { network, .. } => {
                let tap = intermediate_lf_tap();
                let acts = network.forward_to(&scaled, tap.layer)?;
                acts.post[tap.layer].column(tap.units.start)
            }
            Components::Gpmimic { network, .. } => network.predict_batch(&scaled)?.column(1),
            Components::TwoStep { lf, .. } | Components::ThreeStep { lf, .. } => lf.predict_batch(&scaled)?.into_vec(),
            Components::SingleFidelity { .. } => return Ok(None),
        };
        Ok(Some(self.scaler.y_lf.inverse_transform_values(&lf)?))
    }

    /// GPmimic latent pair `(u1, u2)` at scaled inputs.
    pub fn gpmimic_latent(&self, scaled_inputs: &Matrix) -> Result<Matrix> {
        match &self.components {
            Components::Gpmimic { network, .. } => {
                let last = network.output_layer() - 1;
                let acts = network.forward_to(scaled_inputs, last)?;
                Ok(acts.post[last].clone())
            }
            _ => Err(Error::InvalidConfig("not a GPmimic model".into())),
        }
    }

    /// GPmimic head applied to a latent pair: scaled `(y_HF, y_LF)`.
    pub fn gpmimic_head(&self, u: [f64; 2]) -> Result<[f64; 2]> {
        match &self.components {
            Components::Gpmimic { network, .. } => {
                let l = network.output_layer();
                let w = network.weights(l);
                let b = network.biases(l);
                Ok([
                    w[(0, 0)] * u[0] + w[(0, 1)] * u[1] + b[0],
                    w[(1, 0)] * u[0] + w[(1, 1)] * u[1] + b[1],
                ])
            }
            _ => Err(Error::InvalidConfig("not a GPmimic model".into())),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format: String,
    #[serde(flatten)]
    components: Components,
    scaler: DataScaler,
    #[serde(default)]
    training: Vec<StageLog>,
}

impl Serialize for MfModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ModelDocument {
            format: MODEL_FORMAT.to_string(),
            components: self.components.clone(),
            scaler: self.scaler.clone(),
            training: self.training.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MfModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = ModelDocument::deserialize(d)?;
        if doc.format != MODEL_FORMAT {
            return Err(serde::de::Error::custom(format!(
                "expected format `{MODEL_FORMAT}`, found `{}`",
                doc.format
            )));
        }
        if doc.scaler.x.dim() != doc.components.input_dim() {
            return Err(serde::de::Error::custom("scaler and network dimensions differ"));
        }
        Ok(MfModel {
            components: doc.components,
            scaler: doc.scaler,
            training: doc.training,
        })
    }
}

#[cfg(test)]
mod tests;
