use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Test-set accuracy of one model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    /// `None` when the targets are constant.
    pub r2: Option<f64>,
    pub n_test: usize,
    /// Seconds spent on tuning and the final fit.
    #[serde(default)]
    pub elapsed: f64,
}

/// Coefficient of determination `1 − SS_res / SS_tot`.
pub fn r2_score(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    check_lengths(predictions, targets)?;
    let n = targets.len() as f64;
    let mean = targets.iter().sum::<f64>() / n;
    let ss_tot: f64 = targets.iter().map(|y| (y - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::DegenerateTargets);
    }
    let ss_res: f64 = targets.iter().zip(predictions).map(|(y, f)| (y - f).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

fn check_lengths(predictions: &[f64], targets: &[f64]) -> Result<()> {
    if predictions.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: targets.len(),
            got: predictions.len(),
        });
    }
    if targets.len() < 2 {
        return Err(Error::EmptyData);
    }
    Ok(())
}

/// MSE and R² of `predictions`. Constant targets leave `r2` empty.
pub fn compute_metrics(predictions: &[f64], targets: &[f64]) -> Result<Metrics> {
    check_lengths(predictions, targets)?;
    let mse = targets
        .iter()
        .zip(predictions)
        .map(|(y, f)| (y - f).powi(2))
        .sum::<f64>()
        / targets.len() as f64;
    let r2 = match r2_score(predictions, targets) {
        Ok(v) => Some(v),
        Err(Error::DegenerateTargets) => None,
        Err(e) => return Err(e),
    };
    Ok(Metrics {
        mse,
        r2,
        n_test: targets.len(),
        elapsed: 0.0,
    })
}
