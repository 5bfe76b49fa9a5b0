use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{dot, Matrix};

/// Arcsine arguments may overshoot ±1 by this much before it is an error.
const ARCSIN_TOLERANCE: f64 = 1e-12;

/// Covariance functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    /// `σ²·exp(−½ Σ_d (x_d − x'_d)²/ℓ_d²)`.
    Rbf {
        signal_variance: f64,
        lengthscales: Vec<f64>,
    },
    /// Infinitely wide erf network of `depth` layers.
    NngpErf { sigma_b2: f64, sigma_w2: f64, depth: usize },
}

/// Kernel shape without parameter values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelFamily {
    Rbf,
    NngpErf { depth: usize },
}

pub const DEFAULT_NNGP_DEPTH: usize = 3;

impl KernelFamily {
    pub fn nngp() -> Self {
        KernelFamily::NngpErf {
            depth: DEFAULT_NNGP_DEPTH,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelFamily::Rbf => "rbf",
            KernelFamily::NngpErf { .. } => "nngp_erf",
        }
    }

    /// Number of positive parameters for inputs of dimension `dim`.
    pub fn num_params(&self, dim: usize) -> usize {
        match self {
            KernelFamily::Rbf => 1 + dim,
            KernelFamily::NngpErf { .. } => 2,
        }
    }

    /// Builds a kernel from positive parameters in [`Kernel::params`] order.
    pub fn with_params(&self, params: &[f64]) -> Kernel {
        match *self {
            KernelFamily::Rbf => Kernel::Rbf {
                signal_variance: params[0],
                lengthscales: params[1..].to_vec(),
            },
            KernelFamily::NngpErf { depth } => Kernel::NngpErf {
                sigma_b2: params[0],
                sigma_w2: params[1],
                depth,
            },
        }
    }
}

impl Kernel {
    pub fn rbf(signal_variance: f64, lengthscales: Vec<f64>) -> Self {
        Kernel::Rbf {
            signal_variance,
            lengthscales,
        }
    }

    pub fn nngp_erf(sigma_b2: f64, sigma_w2: f64, depth: usize) -> Self {
        Kernel::NngpErf {
            sigma_b2,
            sigma_w2,
            depth,
        }
    }

    pub fn family(&self) -> KernelFamily {
        match self {
            Kernel::Rbf { .. } => KernelFamily::Rbf,
            Kernel::NngpErf { depth, .. } => KernelFamily::NngpErf { depth: *depth },
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match self {
            Kernel::Rbf {
                signal_variance,
                lengthscales,
            } => std::iter::once(*signal_variance)
                .chain(lengthscales.iter().copied())
                .collect(),
            Kernel::NngpErf { sigma_b2, sigma_w2, .. } => vec![*sigma_b2, *sigma_w2],
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Kernel::Rbf {
                signal_variance,
                lengthscales,
            } => {
                if lengthscales.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: lengthscales.len(),
                    });
                }
                if !(*signal_variance > 0.0) || lengthscales.iter().any(|l| !(*l > 0.0)) {
                    return Err(Error::InvalidConfig("rbf parameters must be positive".into()));
                }
            }
            Kernel::NngpErf {
                sigma_b2,
                sigma_w2,
                depth,
            } => {
                if !(*sigma_b2 >= 0.0) || !(*sigma_w2 > 0.0) || *depth == 0 {
                    return Err(Error::InvalidConfig(
                        "nngp needs σ_b² ≥ 0, σ_w² > 0 and depth ≥ 1".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// `κ(x, x')`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self {
            Kernel::Rbf {
                signal_variance,
                lengthscales,
            } => {
                let mut s = 0.0;
                for ((a, b), l) in x.iter().zip(y).zip(lengthscales) {
                    let d = (a - b) / l;
                    s += d * d;
                }
                Ok(signal_variance * (-0.5 * s).exp())
            }
            Kernel::NngpErf {
                sigma_b2,
                sigma_w2,
                depth,
            } => {
                let d = x.len() as f64;
                let mut kxy = sigma_b2 + sigma_w2 * dot(x, y) / d;
                let mut kxx = sigma_b2 + sigma_w2 * dot(x, x) / d;
                let mut kyy = sigma_b2 + sigma_w2 * dot(y, y) / d;
                for _ in 1..*depth {
                    let arg = 2.0 * kxy / ((1.0 + 2.0 * kxx) * (1.0 + 2.0 * kyy)).sqrt();
                    kxy = sigma_b2 + sigma_w2 * erf_expectation(arg)?;
                    kxx = sigma_b2 + sigma_w2 * erf_expectation(2.0 * kxx / (1.0 + 2.0 * kxx))?;
                    kyy = sigma_b2 + sigma_w2 * erf_expectation(2.0 * kyy / (1.0 + 2.0 * kyy))?;
                }
                Ok(kxy)
            }
        }
    }

    /// Gram matrix `κ(A, B)`.
    pub fn matrix(&self, a: &Matrix, b: &Matrix) -> Result<Matrix> {
        if a.cols() != b.cols() {
            return Err(Error::DimensionMismatch {
                expected: a.cols(),
                got: b.cols(),
            });
        }
        self.validate(a.cols())?;
        let mut k = Matrix::zeros(a.rows(), b.rows());
        for i in 0..a.rows() {
            for j in 0..b.rows() {
                k.as_mut_slice()[i * b.rows() + j] = self.eval(a.row(i), b.row(j))?;
            }
        }
        Ok(k)
    }

    /// Symmetric Gram matrix `κ(A, A)`, evaluated on one triangle.
    pub fn gram(&self, a: &Matrix) -> Result<Matrix> {
        self.validate(a.cols())?;
        let n = a.rows();
        let mut k = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = self.eval(a.row(i), a.row(j))?;
                k.as_mut_slice()[i * n + j] = v;
                k.as_mut_slice()[j * n + i] = v;
            }
        }
        Ok(k)
    }

    /// `κ(x, x)` for each row.
    pub fn diag(&self, a: &Matrix) -> Result<Vec<f64>> {
        a.row_iter().map(|r| self.eval(r, r)).collect()
    }
}

/// `(2/π)·arcsin(arg)`, the erf-activation expectation.
fn erf_expectation(arg: f64) -> Result<f64> {
    if !arg.is_finite() || arg.abs() > 1.0 + ARCSIN_TOLERANCE {
        return Err(Error::DomainError(format!("arcsine argument {arg} outside [-1, 1]")));
    }
    Ok(std::f64::consts::FRAC_2_PI * arg.clamp(-1.0, 1.0).asin())
}
