use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Per-column affine map onto `[0, 1]`.
///
/// Constant columns (`max == min`) map to 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    min: Vec<f64>,
    max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(data: &Matrix) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyData);
        }
        if !data.all_finite() {
            return Err(Error::NonFinite("scaler input"));
        }
        let mut min = data.row(0).to_vec();
        let mut max = min.clone();
        for row in data.row_iter().skip(1) {
            for (d, &v) in row.iter().enumerate() {
                min[d] = min[d].min(v);
                max[d] = max[d].max(v);
            }
        }
        Ok(Self { min, max })
    }

    /// Fits a one-dimensional scaler.
    pub fn fit_values(values: &[f64]) -> Result<Self> {
        Self::fit(&Matrix::column_vector(values))
    }

    /// Builds a scaler from explicit bounds.
    pub fn from_bounds(min: Vec<f64>, max: Vec<f64>) -> Result<Self> {
        if min.len() != max.len() {
            return Err(Error::DimensionMismatch {
                expected: min.len(),
                got: max.len(),
            });
        }
        if min
            .iter()
            .zip(&max)
            .any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite())
        {
            return Err(Error::InvalidConfig("scaler requires finite min <= max".into()));
        }
        Ok(Self { min, max })
    }

    /// Identity map on `dim` columns.
    pub fn identity(dim: usize) -> Self {
        Self {
            min: vec![0.0; dim],
            max: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn min(&self) -> &[f64] {
        &self.min
    }

    pub fn max(&self) -> &[f64] {
        &self.max
    }

    /// Width of column `d`; zero for constant columns.
    pub fn span(&self, d: usize) -> f64 {
        self.max[d] - self.min[d]
    }

    #[inline]
    pub fn scale(&self, d: usize, v: f64) -> f64 {
        let span = self.span(d);
        if span > 0.0 {
            (v - self.min[d]) / span
        } else {
            0.0
        }
    }

    #[inline]
    pub fn unscale(&self, d: usize, v: f64) -> f64 {
        self.min[d] + v * self.span(d)
    }

    pub fn transform_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        Ok(x.iter().enumerate().map(|(d, &v)| self.scale(d, v)).collect())
    }

    pub fn inverse_transform_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        Ok(x.iter().enumerate().map(|(d, &v)| self.unscale(d, v)).collect())
    }

    pub fn transform(&self, data: &Matrix) -> Result<Matrix> {
        self.check_dim(data.cols())?;
        Ok(Matrix::from_fn(data.rows(), data.cols(), |i, d| {
            self.scale(d, data[(i, d)])
        }))
    }

    pub fn inverse_transform(&self, data: &Matrix) -> Result<Matrix> {
        self.check_dim(data.cols())?;
        Ok(Matrix::from_fn(data.rows(), data.cols(), |i, d| {
            self.unscale(d, data[(i, d)])
        }))
    }

    /// Scales a single-column series.
    pub fn transform_values(&self, values: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(1)?;
        Ok(values.iter().map(|&v| self.scale(0, v)).collect())
    }

    pub fn inverse_transform_values(&self, values: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(1)?;
        Ok(values.iter().map(|&v| self.unscale(0, v)).collect())
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }
}
