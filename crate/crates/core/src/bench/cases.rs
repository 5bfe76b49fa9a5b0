use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::MfDataset;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};

/// The four analytic benchmark problems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseId {
    LinearCorrelation,
    Discontinuous,
    NonlinearCorrelation,
    HighDim20,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fidelity {
    Hf,
    Lf,
}

impl CaseId {
    pub const ALL: [CaseId; 4] = [
        CaseId::LinearCorrelation,
        CaseId::Discontinuous,
        CaseId::NonlinearCorrelation,
        CaseId::HighDim20,
    ];

    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            CaseId::LinearCorrelation => "linear_correlation",
            CaseId::Discontinuous => "discontinuous",
            CaseId::NonlinearCorrelation => "nonlinear_correlation",
            CaseId::HighDim20 => "high_dim_20",
        }
    }

    pub fn input_dim(self) -> usize {
        match self {
            CaseId::HighDim20 => 20,
            _ => 1,
        }
    }

    /// Bounds of every input coordinate.
    pub fn domain(self) -> (f64, f64) {
        match self {
            CaseId::HighDim20 => (-3.0, 3.0),
            _ => (0.0, 1.0),
        }
    }

    /// Training epochs used by the benchmark runner.
    pub fn default_epochs(self) -> usize {
        match self {
            CaseId::HighDim20 => 3000,
            _ => 20000,
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseId {
    type Err = Error;

    /// Accepts the case number (`1`–`4`) or its name.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        CaseId::ALL
            .into_iter()
            .find(|c| s == c.number().to_string() || s.eq_ignore_ascii_case(c.name()))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown benchmark case `{s}`")))
    }
}

fn forrester(x: f64) -> f64 {
    (6.0 * x - 2.0).powi(2) * (12.0 * x - 4.0).sin()
}

fn discontinuous_lf(x: f64) -> f64 {
    let base = 0.5 * forrester(x) + 10.0 * (x - 0.5) - 5.0;
    if x > 0.5 {
        base + 3.0
    } else {
        base
    }
}

/// Evaluates one fidelity of a case at `x`.
pub fn eval_case(id: CaseId, fidelity: Fidelity, x: &[f64]) -> Result<f64> {
    if x.len() != id.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: id.input_dim(),
            got: x.len(),
        });
    }
    let (lo, hi) = id.domain();
    if x.iter().any(|v| !(lo..=hi).contains(v)) {
        return Err(Error::OutOfDomain {
            case: id.name(),
            x: x.to_vec(),
        });
    }
    let v = match id {
        CaseId::LinearCorrelation => {
            let h = forrester(x[0]);
            match fidelity {
                Fidelity::Hf => h,
                Fidelity::Lf => 0.5 * h + 10.0 * (x[0] - 0.5) + 5.0,
            }
        }
        CaseId::Discontinuous => {
            let x = x[0];
            if x == 0.5 {
                return Err(Error::AtDiscontinuity(id.name()));
            }
            let l = discontinuous_lf(x);
            match fidelity {
                Fidelity::Lf => l,
                Fidelity::Hf => {
                    let h = 2.0 * l - 20.0 * (x - 1.0);
                    if x > 0.5 {
                        h + 4.0
                    } else {
                        h
                    }
                }
            }
        }
        CaseId::NonlinearCorrelation => {
            let l = (8.0 * PI * x[0]).sin();
            match fidelity {
                Fidelity::Lf => l,
                Fidelity::Hf => (x[0] - SQRT_2) * l * l,
            }
        }
        CaseId::HighDim20 => {
            let h = (x[0] - 1.0).powi(2) + x.windows(2).map(|w| (2.0 * w[1] * w[1] - w[0]).powi(2)).sum::<f64>();
            match fidelity {
                Fidelity::Hf => h,
                Fidelity::Lf => 0.8 * h - x.windows(2).map(|w| 0.4 * w[0] * w[1]).sum::<f64>() - 50.0,
            }
        }
    };
    Ok(v)
}

/// `n` equally spaced points on `[lo, hi]`, both ends included.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Sample and test sizes of a case.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub n_hf: usize,
    /// LF count before the extra cluster of the discontinuous case.
    pub n_lf: usize,
    pub n_test: usize,
}

/// Extra LF points placed on `[0.45, 0.55]` for the discontinuous case.
pub const DISCONTINUITY_CLUSTER: usize = 10;

impl SamplingPlan {
    pub fn default_for(id: CaseId) -> Self {
        let (n_hf, n_lf, n_test) = match id {
            CaseId::LinearCorrelation => (5, 32, 1000),
            CaseId::Discontinuous => (8, 32, 1000),
            CaseId::NonlinearCorrelation => (15, 42, 1000),
            CaseId::HighDim20 => (5000, 30000, 10000),
        };
        Self { n_hf, n_lf, n_test }
    }
}

fn evaluate_all(id: CaseId, fidelity: Fidelity, xs: &Matrix) -> Result<Vec<f64>> {
    xs.row_iter().map(|x| eval_case(id, fidelity, x)).collect()
}

fn uniform_points(id: CaseId, n: usize, rng: &mut Rng) -> Matrix {
    let (lo, hi) = id.domain();
    Matrix::from_fn(n, id.input_dim(), |_, _| rng.uniform_range(lo, hi))
}

fn grid_points(id: CaseId, n: usize) -> Matrix {
    let (lo, hi) = id.domain();
    let mut xs = linspace(lo, hi, n);
    if id == CaseId::Discontinuous {
        xs.retain(|&x| x != 0.5);
    }
    Matrix::column_vector(&xs)
}

/// Training data of a case. One-dimensional cases use equally spaced
/// points and ignore `rng`; the 20-D case draws uniform points.
pub fn sample_case(id: CaseId, plan: &SamplingPlan, rng: &mut Rng) -> Result<MfDataset> {
    let (hf_x, lf_x) = match id {
        CaseId::HighDim20 => {
            let hf = uniform_points(id, plan.n_hf, rng);
            let lf = uniform_points(id, plan.n_lf, rng);
            (hf, lf)
        }
        CaseId::Discontinuous => {
            let lf = grid_points(id, plan.n_lf);
            let mut cluster = linspace(0.45, 0.55, DISCONTINUITY_CLUSTER);
            cluster.retain(|&x| x != 0.5);
            (grid_points(id, plan.n_hf), lf.vstack(&Matrix::column_vector(&cluster))?)
        }
        _ => (grid_points(id, plan.n_hf), grid_points(id, plan.n_lf)),
    };
    let hf_y = evaluate_all(id, Fidelity::Hf, &hf_x)?;
    let lf_y = evaluate_all(id, Fidelity::Lf, &lf_x)?;
    MfDataset::new(hf_x, hf_y, lf_x, lf_y)
}

/// Test inputs and HF targets: a uniform grid in 1-D, random points in 20-D.
pub fn test_set(id: CaseId, plan: &SamplingPlan, rng: &mut Rng) -> Result<(Matrix, Vec<f64>)> {
    let x = match id {
        CaseId::HighDim20 => uniform_points(id, plan.n_test, rng),
        _ => grid_points(id, plan.n_test),
    };
    let y = evaluate_all(id, Fidelity::Hf, &x)?;
    Ok((x, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hf(id: CaseId, x: &[f64]) -> f64 {
        eval_case(id, Fidelity::Hf, x).unwrap()
    }

    fn lf(id: CaseId, x: &[f64]) -> f64 {
        eval_case(id, Fidelity::Lf, x).unwrap()
    }

    #[test]
    fn reference_values() {
        assert!(hf(CaseId::LinearCorrelation, &[1.0 / 3.0]).abs() < 1e-15);
        // 4·sin(−4)
        assert!((hf(CaseId::LinearCorrelation, &[0.0]) - 3.027_209_981_231_713).abs() < 1e-12);
        assert!(lf(CaseId::NonlinearCorrelation, &[0.25]).abs() < 1e-15);
        assert_eq!(hf(CaseId::HighDim20, &[0.0; 20]), 1.0);
        assert_eq!(lf(CaseId::HighDim20, &[0.0; 20]), -49.2);
        assert!((lf(CaseId::Discontinuous, &[0.25]) - -7.605_183_873_100_987).abs() < 1e-12);
        assert!((hf(CaseId::Discontinuous, &[0.25]) - -0.210_367_746_201_975).abs() < 1e-12);
    }

    #[test]
    fn domain_and_discontinuity_errors() {
        assert!(matches!(
            eval_case(CaseId::Discontinuous, Fidelity::Hf, &[0.5]),
            Err(Error::AtDiscontinuity(_))
        ));
        assert!(matches!(
            eval_case(CaseId::LinearCorrelation, Fidelity::Hf, &[1.5]),
            Err(Error::OutOfDomain { .. })
        ));
        assert!(matches!(
            eval_case(CaseId::HighDim20, Fidelity::Hf, &[0.0; 3]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn case_names_parse() {
        assert_eq!("1".parse::<CaseId>().unwrap(), CaseId::LinearCorrelation);
        assert_eq!("high_dim_20".parse::<CaseId>().unwrap(), CaseId::HighDim20);
        assert!("9".parse::<CaseId>().is_err());
    }

    #[test]
    fn sample_counts_and_grids() {
        let mut rng = Rng::new(0);
        let d = sample_case(
            CaseId::LinearCorrelation,
            &SamplingPlan::default_for(CaseId::LinearCorrelation),
            &mut rng,
        )
        .unwrap();
        assert_eq!(d.hf_inputs().column(0), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(d.n_lf(), 32);
        let d = sample_case(
            CaseId::Discontinuous,
            &SamplingPlan::default_for(CaseId::Discontinuous),
            &mut rng,
        )
        .unwrap();
        assert_eq!((d.n_hf(), d.n_lf()), (8, 42));
        let d = sample_case(
            CaseId::NonlinearCorrelation,
            &SamplingPlan::default_for(CaseId::NonlinearCorrelation),
            &mut rng,
        )
        .unwrap();
        assert_eq!((d.n_hf(), d.n_lf()), (15, 42));
        let (x, _) = test_set(
            CaseId::Discontinuous,
            &SamplingPlan::default_for(CaseId::Discontinuous),
            &mut rng,
        )
        .unwrap();
        assert!(x.column(0).iter().all(|&v| v != 0.5));
    }

    #[test]
    fn grid_spacing_is_constant() {
        let xs = linspace(0.0, 1.0, 1000);
        assert_eq!((xs[0], xs[999]), (0.0, 1.0));
        let h = 1.0 / 999.0;
        assert!(xs.windows(2).all(|w| ((w[1] - w[0]) - h).abs() < 1e-15));
    }

    #[test]
    fn high_dim_sampling_is_seeded() {
        let plan = SamplingPlan {
            n_hf: 20,
            n_lf: 50,
            n_test: 10,
        };
        let a = sample_case(CaseId::HighDim20, &plan, &mut Rng::new(5)).unwrap();
        let b = sample_case(CaseId::HighDim20, &plan, &mut Rng::new(5)).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.n_hf(), a.n_lf(), a.input_dim()), (20, 50, 20));
    }
}
