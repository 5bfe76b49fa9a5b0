use super::kernel::Kernel;
use crate::error::{Error, Result};
use crate::numerics::{cholesky_escalating, dot, log_det, solve_cholesky, solve_lower, Matrix};

/// Observation noise standard deviation used unless overridden.
pub const DEFAULT_NOISE_STD: f64 = 1e-5;
pub const JITTER_START: f64 = 1e-10;
pub const JITTER_MAX: f64 = 1e-6;

/// Single-output GP posterior.
#[derive(Clone, Debug)]
pub struct GprModel {
    kernel: Kernel,
    noise_std: f64,
    inputs: Matrix,
    outputs: Vec<f64>,
    chol: Matrix,
    alpha: Vec<f64>,
    jitter: f64,
}

impl GprModel {
    pub fn fit(kernel: Kernel, inputs: Matrix, outputs: Vec<f64>, noise_std: f64) -> Result<Self> {
        if inputs.rows() == 0 {
            return Err(Error::EmptyData);
        }
        if inputs.rows() != outputs.len() {
            return Err(Error::DimensionMismatch {
                expected: inputs.rows(),
                got: outputs.len(),
            });
        }
        if !(noise_std >= 0.0) {
            return Err(Error::InvalidConfig("noise std must be non-negative".into()));
        }
        let mut k = kernel.gram(&inputs)?;
        k.add_diagonal(noise_std * noise_std);
        let (chol, jitter) = cholesky_escalating(&k, JITTER_START, JITTER_MAX)?;
        let alpha = solve_cholesky(&chol, &outputs)?;
        Ok(Self {
            kernel,
            noise_std,
            inputs,
            outputs,
            chol,
            alpha,
            jitter,
        })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn inputs(&self) -> &Matrix {
        &self.inputs
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    /// Diagonal jitter that was needed on top of the noise.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `log p(y | X)`.
    pub fn log_marginal_likelihood(&self) -> f64 {
        log_marginal_likelihood(&self.chol, &self.alpha, &self.outputs)
    }

    /// Posterior means and variances at each row of `test`.
    pub fn predict(&self, test: &Matrix) -> Result<(Vec<f64>, Vec<f64>)> {
        let ks = self.kernel.matrix(test, &self.inputs)?;
        let prior = self.kernel.diag(test)?;
        posterior(&self.chol, &self.alpha, &ks, &prior)
    }
}

pub(crate) fn log_marginal_likelihood(chol: &Matrix, alpha: &[f64], y: &[f64]) -> f64 {
    let n = y.len() as f64;
    -0.5 * dot(y, alpha) - 0.5 * log_det(chol) - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
}

/// Mean `k*ᵀα` and variance `k** − ‖L⁻¹k*‖²` for each row of `cross`.
pub(crate) fn posterior(
    chol: &Matrix,
    alpha: &[f64],
    cross: &Matrix,
    prior_var: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut means = Vec::with_capacity(cross.rows());
    let mut vars = Vec::with_capacity(cross.rows());
    for (row, &prior) in cross.row_iter().zip(prior_var) {
        means.push(dot(row, alpha));
        let v = solve_lower(chol, row)?;
        // Cancellation can leave tiny negative values near training points.
        vars.push((prior - dot(&v, &v)).max(0.0));
    }
    Ok((means, vars))
}
