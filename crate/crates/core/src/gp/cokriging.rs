use serde::{Deserialize, Serialize};

use super::gpr::{log_marginal_likelihood, posterior, JITTER_MAX, JITTER_START};
use super::kernel::Kernel;
use crate::error::{Error, Result};
use crate::numerics::{cholesky_escalating, solve_cholesky, Matrix};

/// Fidelity index used by [`Lmc`]: LF is level 0, HF is level 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    Lf = 0,
    Hf = 1,
}

/// Two-level linear model of coregionalization. Level `i` is
/// `f_i = Σ_j mixing[i][j]·u_j` with independent `u_j ~ GP(0, κ_j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lmc {
    pub kernels: [Kernel; 2],
    pub mixing: [[f64; 2]; 2],
}

impl Lmc {
    /// `f_L = u1`, `f_H = ρ·u1 + u2`.
    pub fn ar1(k1: Kernel, k2: Kernel, rho: f64) -> Self {
        Self {
            kernels: [k1, k2],
            mixing: [[1.0, 0.0], [rho, 1.0]],
        }
    }

    /// `ρ` under the AR(1) parameterization.
    pub fn rho(&self) -> f64 {
        self.mixing[1][0]
    }

    /// `Cov(f_a(A), f_b(B)) = Σ_j mixing[a][j]·mixing[b][j]·κ_j(A, B)`.
    pub fn cross(&self, a: Level, xa: &Matrix, b: Level, xb: &Matrix) -> Result<Matrix> {
        let mut out = Matrix::zeros(xa.rows(), xb.rows());
        for j in 0..2 {
            let w = self.mixing[a as usize][j] * self.mixing[b as usize][j];
            if w == 0.0 {
                continue;
            }
            let k = self.kernels[j].matrix(xa, xb)?;
            for (o, v) in out.as_mut_slice().iter_mut().zip(k.as_slice()) {
                *o += w * v;
            }
        }
        Ok(out)
    }

    fn diag(&self, level: Level, x: &Matrix) -> Result<Vec<f64>> {
        let mut out = vec![0.0; x.rows()];
        for j in 0..2 {
            let w = self.mixing[level as usize][j].powi(2);
            if w == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(self.kernels[j].diag(x)?) {
                *o += w * v;
            }
        }
        Ok(out)
    }
}

/// Bi-fidelity GP conditioned on stacked `[y_L; y_H]`.
#[derive(Clone, Debug)]
pub struct CoKrigingModel {
    lmc: Lmc,
    noise_std: [f64; 2],
    lf_inputs: Matrix,
    lf_outputs: Vec<f64>,
    hf_inputs: Matrix,
    hf_outputs: Vec<f64>,
    chol: Matrix,
    alpha: Vec<f64>,
    stacked: Vec<f64>,
}

impl CoKrigingModel {
    pub fn fit(lmc: Lmc, noise_std: [f64; 2], lf: (Matrix, Vec<f64>), hf: (Matrix, Vec<f64>)) -> Result<Self> {
        let (lf_inputs, lf_outputs) = lf;
        let (hf_inputs, hf_outputs) = hf;
        if lf_inputs.rows() == 0 || hf_inputs.rows() == 0 {
            return Err(Error::EmptyData);
        }
        if lf_inputs.cols() != hf_inputs.cols() {
            return Err(Error::DimensionMismatch {
                expected: lf_inputs.cols(),
                got: hf_inputs.cols(),
            });
        }
        if lf_inputs.rows() != lf_outputs.len() || hf_inputs.rows() != hf_outputs.len() {
            return Err(Error::DimensionMismatch {
                expected: lf_inputs.rows() + hf_inputs.rows(),
                got: lf_outputs.len() + hf_outputs.len(),
            });
        }
        if noise_std.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::InvalidConfig("noise std must be non-negative".into()));
        }
        let (nl, nh) = (lf_inputs.rows(), hf_inputs.rows());
        let n = nl + nh;
        let kll = lmc.cross(Level::Lf, &lf_inputs, Level::Lf, &lf_inputs)?;
        let klh = lmc.cross(Level::Lf, &lf_inputs, Level::Hf, &hf_inputs)?;
        let khh = lmc.cross(Level::Hf, &hf_inputs, Level::Hf, &hf_inputs)?;
        let mut k = Matrix::zeros(n, n);
        {
            let m = k.as_mut_slice();
            for i in 0..nl {
                for j in 0..nl {
                    m[i * n + j] = kll[(i, j)];
                }
                for j in 0..nh {
                    m[i * n + nl + j] = klh[(i, j)];
                    m[(nl + j) * n + i] = klh[(i, j)];
                }
            }
            for i in 0..nh {
                for j in 0..nh {
                    m[(nl + i) * n + nl + j] = khh[(i, j)];
                }
            }
            for i in 0..n {
                let s = if i < nl { noise_std[0] } else { noise_std[1] };
                m[i * n + i] += s * s;
            }
        }
        let (chol, _) = cholesky_escalating(&k, JITTER_START, JITTER_MAX)?;
        let stacked: Vec<f64> = lf_outputs.iter().chain(&hf_outputs).copied().collect();
        let alpha = solve_cholesky(&chol, &stacked)?;
        Ok(Self {
            lmc,
            noise_std,
            lf_inputs,
            lf_outputs,
            hf_inputs,
            hf_outputs,
            chol,
            alpha,
            stacked,
        })
    }

    pub fn lmc(&self) -> &Lmc {
        &self.lmc
    }

    pub fn noise_std(&self) -> [f64; 2] {
        self.noise_std
    }

    pub fn lf_data(&self) -> (&Matrix, &[f64]) {
        (&self.lf_inputs, &self.lf_outputs)
    }

    pub fn hf_data(&self) -> (&Matrix, &[f64]) {
        (&self.hf_inputs, &self.hf_outputs)
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        log_marginal_likelihood(&self.chol, &self.alpha, &self.stacked)
    }

    /// Posterior of `level` at each row of `test`.
    pub fn predict_level(&self, level: Level, test: &Matrix) -> Result<(Vec<f64>, Vec<f64>)> {
        let to_lf = self.lmc.cross(level, test, Level::Lf, &self.lf_inputs)?;
        let to_hf = self.lmc.cross(level, test, Level::Hf, &self.hf_inputs)?;
        let cross = to_lf.hstack(&to_hf)?;
        let prior = self.lmc.diag(level, test)?;
        posterior(&self.chol, &self.alpha, &cross, &prior)
    }

    /// HF posterior means and variances.
    pub fn predict(&self, test: &Matrix) -> Result<(Vec<f64>, Vec<f64>)> {
        self.predict_level(Level::Hf, test)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::GprModel;
    use crate::numerics::Rng;

    #[test]
    fn rho_zero_decouples_levels() {
        let mut rng = Rng::new(2);
        let xl = Matrix::from_fn(12, 1, |_, _| rng.uniform());
        let yl: Vec<f64> = (0..12).map(|_| rng.normal()).collect();
        let xh = Matrix::from_fn(5, 1, |_, _| rng.uniform());
        let yh: Vec<f64> = (0..5).map(|_| rng.normal()).collect();
        let k1 = Kernel::rbf(1.3, vec![0.2]);
        let k2 = Kernel::nngp_erf(0.4, 2.0, 3);
        let ck = CoKrigingModel::fit(
            Lmc::ar1(k1, k2.clone(), 0.0),
            [1e-5, 1e-5],
            (xl, yl),
            (xh.clone(), yh.clone()),
        )
        .unwrap();
        let gp = GprModel::fit(k2, xh, yh, 1e-5).unwrap();
        let s = Matrix::from_fn(30, 1, |_, _| rng.uniform_range(-0.2, 1.2));
        let (m1, v1) = ck.predict(&s).unwrap();
        let (m2, v2) = gp.predict(&s).unwrap();
        for i in 0..30 {
            assert!((m1[i] - m2[i]).abs() < 1e-8);
            assert!((v1[i] - v2[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn exact_linear_correlation_transfers_to_hf() {
        // y_H = 2·y_L; HF observed at a few LF sites only.
        let f = |x: f64| (6.0 * x).sin();
        let xs: Vec<f64> = (0..20).map(|i| i as f64 / 19.0).collect();
        let xh = vec![xs[0], xs[7], xs[13], xs[19]];
        let k1 = Kernel::rbf(1.0, vec![0.2]);
        let k2 = Kernel::rbf(1e-4, vec![1.0]);
        let ck = CoKrigingModel::fit(
            Lmc::ar1(k1, k2, 2.0),
            [1e-5, 1e-5],
            (Matrix::column_vector(&xs), xs.iter().map(|&x| f(x)).collect()),
            (Matrix::column_vector(&xh), xh.iter().map(|&x| 2.0 * f(x)).collect()),
        )
        .unwrap();
        let held: Vec<f64> = xs
            .iter()
            .enumerate()
            .filter(|(i, _)| ![0, 7, 13, 19].contains(i))
            .map(|(_, &x)| x)
            .collect();
        let (m, _) = ck.predict(&Matrix::column_vector(&held)).unwrap();
        let mse = held.iter().zip(&m).map(|(&x, p)| (2.0 * f(x) - p).powi(2)).sum::<f64>() / held.len() as f64;
        assert!(mse < 1e-4, "mse {mse}");
    }

    #[test]
    fn joint_covariance_blocks() {
        let k1 = Kernel::rbf(1.0, vec![1.0]);
        let k2 = Kernel::rbf(0.5, vec![1.0]);
        let lmc = Lmc::ar1(k1, k2, 3.0);
        let x = Matrix::column_vector(&[0.0]);
        let y = Matrix::column_vector(&[1.0]);
        let e = (-0.5f64).exp();
        assert!((lmc.cross(Level::Lf, &x, Level::Hf, &y).unwrap()[(0, 0)] - 3.0 * e).abs() < 1e-15);
        assert!((lmc.cross(Level::Hf, &x, Level::Hf, &y).unwrap()[(0, 0)] - (9.0 * e + 0.5 * e)).abs() < 1e-14);
        assert!((lmc.cross(Level::Lf, &x, Level::Lf, &y).unwrap()[(0, 0)] - e).abs() < 1e-15);
    }

    #[test]
    fn empty_level_rejected() {
        let lmc = Lmc::ar1(Kernel::rbf(1.0, vec![1.0]), Kernel::rbf(1.0, vec![1.0]), 1.0);
        let r = CoKrigingModel::fit(
            lmc,
            [0.0, 0.0],
            (Matrix::zeros(0, 1), vec![]),
            (Matrix::column_vector(&[0.0]), vec![1.0]),
        );
        assert!(matches!(r, Err(Error::EmptyData)));
    }
}
