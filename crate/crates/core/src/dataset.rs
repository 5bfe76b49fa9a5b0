//! Bi-fidelity training data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, MinMaxScaler};

/// HF and LF samples of one problem. Outputs are scalar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MfDataset {
    hf_inputs: Matrix,
    hf_outputs: Vec<f64>,
    lf_inputs: Matrix,
    lf_outputs: Vec<f64>,
}

impl MfDataset {
    pub fn new(hf_inputs: Matrix, hf_outputs: Vec<f64>, lf_inputs: Matrix, lf_outputs: Vec<f64>) -> Result<Self> {
        if hf_inputs.rows() == 0 || lf_inputs.rows() == 0 || hf_inputs.cols() == 0 {
            return Err(Error::EmptyData);
        }
        if hf_inputs.cols() != lf_inputs.cols() {
            return Err(Error::DimensionMismatch {
                expected: hf_inputs.cols(),
                got: lf_inputs.cols(),
            });
        }
        for (x, y) in [(&hf_inputs, &hf_outputs), (&lf_inputs, &lf_outputs)] {
            if x.rows() != y.len() {
                return Err(Error::DimensionMismatch {
                    expected: x.rows(),
                    got: y.len(),
                });
            }
        }
        if !hf_inputs.all_finite() || !lf_inputs.all_finite() {
            return Err(Error::NonFinite("dataset inputs"));
        }
        if hf_outputs.iter().chain(&lf_outputs).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset outputs"));
        }
        Ok(Self {
            hf_inputs,
            hf_outputs,
            lf_inputs,
            lf_outputs,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.hf_inputs.cols()
    }

    pub fn n_hf(&self) -> usize {
        self.hf_outputs.len()
    }

    pub fn n_lf(&self) -> usize {
        self.lf_outputs.len()
    }

    pub fn hf_inputs(&self) -> &Matrix {
        &self.hf_inputs
    }

    pub fn hf_outputs(&self) -> &[f64] {
        &self.hf_outputs
    }

    pub fn lf_inputs(&self) -> &Matrix {
        &self.lf_inputs
    }

    pub fn lf_outputs(&self) -> &[f64] {
        &self.lf_outputs
    }

    /// Keeps the listed HF samples and every LF sample.
    pub fn select_hf(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptyData);
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n_hf()) {
            return Err(Error::DimensionMismatch {
                expected: self.n_hf(),
                got: bad,
            });
        }
        Ok(Self {
            hf_inputs: self.hf_inputs.select_rows(indices),
            hf_outputs: indices.iter().map(|&i| self.hf_outputs[i]).collect(),
            lf_inputs: self.lf_inputs.clone(),
            lf_outputs: self.lf_outputs.clone(),
        })
    }

    /// Copy of the data mapped through `scaler`.
    pub fn scaled(&self, scaler: &DataScaler) -> Result<Self> {
        Ok(Self {
            hf_inputs: scaler.x.transform(&self.hf_inputs)?,
            hf_outputs: scaler.y_hf.transform_values(&self.hf_outputs)?,
            lf_inputs: scaler.x.transform(&self.lf_inputs)?,
            lf_outputs: scaler.y_lf.transform_values(&self.lf_outputs)?,
        })
    }

    /// Data min-max scaled to `[0, 1]` together with the fitted scaler.
    pub fn normalized(&self) -> Result<(Self, DataScaler)> {
        let scaler = DataScaler::fit(self)?;
        Ok((self.scaled(&scaler)?, scaler))
    }
}

/// Min-max maps for inputs (fitted on HF ∪ LF) and for each output level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataScaler {
    pub x: MinMaxScaler,
    pub y_hf: MinMaxScaler,
    pub y_lf: MinMaxScaler,
}

impl DataScaler {
    pub fn fit(data: &MfDataset) -> Result<Self> {
        Ok(Self {
            x: MinMaxScaler::fit(&data.hf_inputs.vstack(&data.lf_inputs)?)?,
            y_hf: MinMaxScaler::fit_values(&data.hf_outputs)?,
            y_lf: MinMaxScaler::fit_values(&data.lf_outputs)?,
        })
    }

    pub fn identity(input_dim: usize) -> Self {
        Self {
            x: MinMaxScaler::identity(input_dim),
            y_hf: MinMaxScaler::identity(1),
            y_lf: MinMaxScaler::identity(1),
        }
    }
}
