use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::MfDataset;
use crate::error::{Error, Result};
use crate::numerics::{derive_seed, Matrix, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CvMode {
    Kfold { k: usize },
    Loocv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvPlan {
    #[serde(flatten)]
    pub mode: CvMode,
    pub seed: u64,
}

impl CvPlan {
    pub fn kfold(k: usize, seed: u64) -> Self {
        Self {
            mode: CvMode::Kfold { k },
            seed,
        }
    }

    pub fn loocv(seed: u64) -> Self {
        Self {
            mode: CvMode::Loocv,
            seed,
        }
    }

    /// Leave-one-out for at most 10 HF samples, 5-fold otherwise.
    pub fn for_sample_count(n_hf: usize, seed: u64) -> Self {
        if n_hf <= 10 {
            Self::loocv(seed)
        } else {
            Self::kfold(5, seed)
        }
    }
}

/// One `(train, validation)` index pair.
pub type Fold = (Vec<usize>, Vec<usize>);

/// Shuffled partition of `0..n` into validation sets whose sizes differ by
/// at most one.
pub fn make_folds(n: usize, plan: &CvPlan) -> Result<Vec<Fold>> {
    let k = match plan.mode {
        CvMode::Kfold { k } => k,
        CvMode::Loocv => n,
    };
    if n < 2 {
        return Err(Error::InvalidPlan(format!("need at least 2 samples, got {n}")));
    }
    if k < 2 || k > n {
        return Err(Error::InvalidPlan(format!("{k} folds for {n} samples")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    Rng::new(plan.seed).shuffle(&mut order);
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        let mut val = order[start..start + len].to_vec();
        val.sort_unstable();
        let mut train: Vec<usize> = order[..start].iter().chain(&order[start + len..]).copied().collect();
        train.sort_unstable();
        folds.push((train, val));
        start += len;
    }
    Ok(folds)
}

/// Anything that predicts HF outputs for rows of raw inputs.
pub trait HfPredictor {
    fn predict_hf(&self, inputs: &Matrix) -> Result<Vec<f64>>;
}

impl<F: Fn(&Matrix) -> Result<Vec<f64>>> HfPredictor for F {
    fn predict_hf(&self, inputs: &Matrix) -> Result<Vec<f64>> {
        self(inputs)
    }
}

/// Mean over folds of the held-out HF MSE. Folds split the HF samples only;
/// every fold trains with the full LF set. `build` receives the fold data
/// and a seed derived from `(seed, fold index)`. Any failing fold fails the
/// whole evaluation.
pub fn cross_validate<P, B>(build: B, data: &MfDataset, plan: &CvPlan, seed: u64) -> Result<f64>
where
    P: HfPredictor,
    B: Fn(&MfDataset, u64) -> Result<P> + Sync,
{
    let folds = make_folds(data.n_hf(), plan)?;
    let mses: Vec<Result<f64>> = folds
        .par_iter()
        .enumerate()
        .map(|(i, (train, val))| {
            let fold_data = data.select_hf(train)?;
            let model = build(&fold_data, derive_seed(seed, i as u64))?;
            let x = data.hf_inputs().select_rows(val);
            let pred = model.predict_hf(&x)?;
            if pred.len() != val.len() {
                return Err(Error::DimensionMismatch {
                    expected: val.len(),
                    got: pred.len(),
                });
            }
            let sse: f64 = val
                .iter()
                .zip(&pred)
                .map(|(&j, p)| (data.hf_outputs()[j] - p).powi(2))
                .sum();
            Ok(sse / val.len() as f64)
        })
        .collect();
    let mut total = 0.0;
    for m in mses {
        total += m?;
    }
    let mean = total / folds.len() as f64;
    if mean.is_finite() {
        Ok(mean)
    } else {
        Err(Error::NonFinite("cross-validation error"))
    }
}
