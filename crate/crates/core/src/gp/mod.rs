//! Gaussian-process regression and bi-fidelity co-kriging.

mod cokriging;
mod fit;
mod gpr;
mod kernel;

pub use cokriging::{CoKrigingModel, Level, Lmc};
pub use fit::{fit_cokriging, fit_gpr, nelder_mead, GpFitOptions};
pub use gpr::{GprModel, DEFAULT_NOISE_STD, JITTER_MAX, JITTER_START};
pub use kernel::{Kernel, KernelFamily, DEFAULT_NNGP_DEPTH};

use serde::{Deserialize, Serialize};

use crate::dataset::{DataScaler, MfDataset};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, MinMaxScaler};

pub const GP_FORMAT: &str = "mufide-gp-v1";

#[derive(Clone, Debug)]
pub enum FittedGp {
    Gpr(GprModel),
    CoKriging(CoKrigingModel),
}

/// A fitted GP working on min-max scaled data, predicting in raw units.
#[derive(Clone, Debug)]
pub struct GpSurrogate {
    model: FittedGp,
    scaler: DataScaler,
}

impl GpSurrogate {
    /// Single-fidelity GPR on the HF samples.
    pub fn fit_single(inputs: &Matrix, outputs: &[f64], family: KernelFamily, opts: &GpFitOptions) -> Result<Self> {
        let scaler = DataScaler {
            x: MinMaxScaler::fit(inputs)?,
            y_hf: MinMaxScaler::fit_values(outputs)?,
            y_lf: MinMaxScaler::identity(1),
        };
        let x = scaler.x.transform(inputs)?;
        let y = scaler.y_hf.transform_values(outputs)?;
        let model = fit_gpr(family, &x, &y, opts)?;
        Ok(Self {
            model: FittedGp::Gpr(model),
            scaler,
        })
    }

    /// AR(1) co-kriging. With `families = None` both kernels are tried as
    /// RBF and as NNGP and the higher marginal likelihood wins.
    pub fn fit_cokriging(data: &MfDataset, families: Option<[KernelFamily; 2]>, opts: &GpFitOptions) -> Result<Self> {
        let (scaled, scaler) = data.normalized()?;
        let lf = (scaled.lf_inputs(), scaled.lf_outputs());
        let hf = (scaled.hf_inputs(), scaled.hf_outputs());
        let candidates = match families {
            Some(f) => vec![f],
            None => vec![
                [KernelFamily::nngp(), KernelFamily::nngp()],
                [KernelFamily::Rbf, KernelFamily::Rbf],
            ],
        };
        let mut best: Option<CoKrigingModel> = None;
        let mut last_err = None;
        for fam in candidates {
            match fit_cokriging(fam, lf, hf, opts) {
                Ok(m) => {
                    let better = best
                        .as_ref()
                        .is_none_or(|b| m.log_marginal_likelihood() > b.log_marginal_likelihood());
                    if better {
                        best = Some(m);
                    }
                }
                Err(e) => last_err = Some(e),
            }
        }
        match best {
            Some(m) => Ok(Self {
                model: FittedGp::CoKriging(m),
                scaler,
            }),
            None => Err(last_err.unwrap_or_else(|| Error::OptimizationFailed("no kernel family".into()))),
        }
    }

    pub fn model(&self) -> &FittedGp {
        &self.model
    }

    pub fn scaler(&self) -> &DataScaler {
        &self.scaler
    }

    pub fn input_dim(&self) -> usize {
        self.scaler.x.dim()
    }

    pub fn kind_name(&self) -> &'static str {
        match self.model {
            FittedGp::Gpr(_) => "gpr",
            FittedGp::CoKriging(_) => "cokriging",
        }
    }

    /// HF posterior means and variances in raw units.
    pub fn predict_hf_batch(&self, inputs: &Matrix) -> Result<(Vec<f64>, Vec<f64>)> {
        if inputs.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: inputs.cols(),
            });
        }
        let x = self.scaler.x.transform(inputs)?;
        let (m, v) = match &self.model {
            FittedGp::Gpr(g) => g.predict(&x)?,
            FittedGp::CoKriging(c) => c.predict(&x)?,
        };
        let span = self.scaler.y_hf.span(0);
        let means = self.scaler.y_hf.inverse_transform_values(&m)?;
        Ok((means, v.into_iter().map(|v| v * span * span).collect()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.document())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: GpDocument = serde_json::from_str(text)?;
        if doc.format != GP_FORMAT {
            return Err(Error::Format(format!(
                "expected format `{GP_FORMAT}`, found `{}`",
                doc.format
            )));
        }
        let model = match doc.model {
            GpState::Gpr {
                kernel,
                noise_std,
                inputs,
                outputs,
            } => FittedGp::Gpr(GprModel::fit(kernel, inputs, outputs, noise_std)?),
            GpState::Cokriging {
                lmc,
                noise_std,
                lf_inputs,
                lf_outputs,
                hf_inputs,
                hf_outputs,
            } => FittedGp::CoKriging(CoKrigingModel::fit(
                lmc,
                noise_std,
                (lf_inputs, lf_outputs),
                (hf_inputs, hf_outputs),
            )?),
        };
        Ok(Self {
            model,
            scaler: doc.scaler,
        })
    }

    fn document(&self) -> GpDocument {
        let model = match &self.model {
            FittedGp::Gpr(g) => GpState::Gpr {
                kernel: g.kernel().clone(),
                noise_std: g.noise_std(),
                inputs: g.inputs().clone(),
                outputs: g.outputs().to_vec(),
            },
            FittedGp::CoKriging(c) => GpState::Cokriging {
                lmc: c.lmc().clone(),
                noise_std: c.noise_std(),
                lf_inputs: c.lf_data().0.clone(),
                lf_outputs: c.lf_data().1.to_vec(),
                hf_inputs: c.hf_data().0.clone(),
                hf_outputs: c.hf_data().1.to_vec(),
            },
        };
        GpDocument {
            format: GP_FORMAT.to_string(),
            model,
            scaler: self.scaler.clone(),
        }
    }
}

/// Parameters and training data; the factorization is rebuilt on load.
#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum GpState {
    Gpr {
        kernel: Kernel,
        noise_std: f64,
        inputs: Matrix,
        outputs: Vec<f64>,
    },
    Cokriging {
        lmc: Lmc,
        noise_std: [f64; 2],
        lf_inputs: Matrix,
        lf_outputs: Vec<f64>,
        hf_inputs: Matrix,
        hf_outputs: Vec<f64>,
    },
}

#[derive(Serialize, Deserialize)]
struct GpDocument {
    format: String,
    model: GpState,
    scaler: DataScaler,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case1() -> MfDataset {
        let f = |x: f64| (6.0 * x - 2.0).powi(2) * (12.0 * x - 4.0).sin();
        let xh: Vec<f64> = (0..5).map(|i| i as f64 / 4.0).collect();
        let xl: Vec<f64> = (0..32).map(|i| i as f64 / 31.0).collect();
        MfDataset::new(
            Matrix::column_vector(&xh),
            xh.iter().map(|&x| f(x)).collect(),
            Matrix::column_vector(&xl),
            xl.iter().map(|&x| 0.5 * f(x) + 10.0 * (x - 0.5) + 5.0).collect(),
        )
        .unwrap()
    }

    #[test]
    fn json_round_trip_preserves_predictions() {
        let data = case1();
        let gp = GpSurrogate::fit_cokriging(
            &data,
            Some([KernelFamily::Rbf; 2]),
            &GpFitOptions {
                starts: 2,
                ..GpFitOptions::default()
            },
        )
        .unwrap();
        let text = gp.to_json().unwrap();
        assert!(text.contains(GP_FORMAT));
        let back = GpSurrogate::from_json(&text).unwrap();
        let s = Matrix::column_vector(&[0.1, 0.45, 0.8]);
        assert_eq!(gp.predict_hf_batch(&s).unwrap(), back.predict_hf_batch(&s).unwrap());
        assert!(GpSurrogate::from_json(&text.replace(GP_FORMAT, "other")).is_err());
    }

    #[test]
    fn single_fidelity_gpr_interpolates_raw_data() {
        let data = case1();
        let gp = GpSurrogate::fit_single(
            data.hf_inputs(),
            data.hf_outputs(),
            KernelFamily::Rbf,
            &GpFitOptions::default(),
        )
        .unwrap();
        let (m, _) = gp.predict_hf_batch(data.hf_inputs()).unwrap();
        for (p, y) in m.iter().zip(data.hf_outputs()) {
            assert!((p - y).abs() < 1e-3 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn wrong_dimension_rejected() {
        let data = case1();
        let gp = GpSurrogate::fit_single(
            data.hf_inputs(),
            data.hf_outputs(),
            KernelFamily::Rbf,
            &GpFitOptions::default(),
        )
        .unwrap();
        assert!(gp.predict_hf_batch(&Matrix::zeros(1, 2)).is_err());
    }
}
