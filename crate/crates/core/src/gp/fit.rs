use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cokriging::{CoKrigingModel, Lmc};
use super::gpr::{GprModel, DEFAULT_NOISE_STD};
use super::kernel::KernelFamily;
use crate::error::{Error, Result};
use crate::numerics::{derive_seed, Matrix, Rng};

/// Marginal-likelihood search settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpFitOptions {
    pub starts: usize,
    /// Bounds on every positive kernel parameter.
    pub lower: f64,
    pub upper: f64,
    pub noise_std: f64,
    pub max_evals: usize,
    pub seed: u64,
}

impl Default for GpFitOptions {
    fn default() -> Self {
        Self {
            starts: 8,
            lower: 1e-4,
            upper: 1e4,
            noise_std: DEFAULT_NOISE_STD,
            max_evals: 1500,
            seed: 0,
        }
    }
}

impl GpFitOptions {
    fn validate(&self) -> Result<()> {
        if self.starts == 0 || !(self.lower > 0.0 && self.lower < self.upper) {
            return Err(Error::InvalidConfig(
                "need at least one start and 0 < lower < upper".into(),
            ));
        }
        Ok(())
    }
}

/// Minimizes `f` by the Nelder–Mead simplex method from `x0` with an
/// initial simplex of edge `step`. Returns the best point and value.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    max_evals: usize,
    tol: f64,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = eval(&x);
        simplex.push((x, v));
    }
    let mut evals = n + 1;
    if n == 0 {
        let (x, v) = simplex.pop().unwrap();
        return (x, v);
    }
    let point = |c: &[f64], toward: &[f64], t: f64| -> Vec<f64> {
        c.iter().zip(toward).map(|(a, b)| a + t * (b - a)).collect()
    };

    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[n].1);
        let spread = if best.is_finite() && worst.is_finite() {
            (worst - best).abs()
        } else {
            f64::INFINITY
        };
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread <= tol * (1.0 + best.abs()) && diameter <= tol.sqrt() {
            break;
        }

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let worst_x = simplex[n].0.clone();
        let reflected = point(&centroid, &worst_x, -1.0);
        let fr = eval(&reflected);
        evals += 1;
        if fr < simplex[0].1 {
            let expanded = point(&centroid, &worst_x, -2.0);
            let fe = eval(&expanded);
            evals += 1;
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let (target, ft) = if fr < simplex[n].1 {
                (reflected, fr)
            } else {
                (worst_x, simplex[n].1)
            };
            let contracted = point(&centroid, &target, 0.5);
            let fc = eval(&contracted);
            evals += 1;
            if fc < ft {
                simplex[n] = (contracted, fc);
            } else {
                let anchor = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let x = point(&anchor, &entry.0, 0.5);
                    let v = eval(&x);
                    *entry = (x, v);
                }
                evals += n;
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

/// Runs Nelder–Mead from each start (in parallel) and keeps the best;
/// ties go to the earliest start.
fn multi_start(starts: Vec<Vec<f64>>, objective: impl Fn(&[f64]) -> f64 + Sync, max_evals: usize) -> Result<Vec<f64>> {
    let results: Vec<(Vec<f64>, f64)> = starts
        .par_iter()
        .map(|x0| nelder_mead(&objective, x0, 1.0, max_evals, 1e-10))
        .collect();
    results
        .into_iter()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(x, _)| x)
        .ok_or_else(|| Error::OptimizationFailed("no start produced a finite likelihood".into()))
}

fn to_positive(theta: &[f64], opts: &GpFitOptions) -> Vec<f64> {
    let (lo, hi) = (opts.lower.ln(), opts.upper.ln());
    theta.iter().map(|t| t.clamp(lo, hi).exp()).collect()
}

fn random_log_point(rng: &mut Rng, k: usize, opts: &GpFitOptions) -> Vec<f64> {
    // Starts are drawn from the central part of the box; the simplex can
    // still walk out to the bounds.
    let (lo, hi) = (opts.lower.ln().max(-5.0), opts.upper.ln().min(5.0));
    (0..k).map(|_| rng.uniform_range(lo, hi)).collect()
}

/// Single-output GP with kernel parameters maximizing the marginal likelihood.
pub fn fit_gpr(family: KernelFamily, inputs: &Matrix, outputs: &[f64], opts: &GpFitOptions) -> Result<GprModel> {
    opts.validate()?;
    if inputs.rows() == 0 {
        return Err(Error::EmptyData);
    }
    let k = family.num_params(inputs.cols());
    let mut rng = Rng::new(derive_seed(opts.seed, 0x6770));
    let mut starts = vec![vec![0.0; k]];
    while starts.len() < opts.starts {
        starts.push(random_log_point(&mut rng, k, opts));
    }
    let objective = |theta: &[f64]| {
        let kernel = family.with_params(&to_positive(theta, opts));
        match GprModel::fit(kernel, inputs.clone(), outputs.to_vec(), opts.noise_std) {
            Ok(gp) => -gp.log_marginal_likelihood(),
            Err(_) => f64::INFINITY,
        }
    };
    let best = multi_start(starts, objective, opts.max_evals)?;
    GprModel::fit(
        family.with_params(&to_positive(&best, opts)),
        inputs.clone(),
        outputs.to_vec(),
        opts.noise_std,
    )
}

/// Least-squares slope of HF outputs on the nearest LF outputs.
fn initial_rho(lf: (&Matrix, &[f64]), hf: (&Matrix, &[f64])) -> f64 {
    let paired: Vec<(f64, f64)> =
        hf.0.row_iter()
            .zip(hf.1)
            .map(|(x, &yh)| {
                let nearest = (0..lf.0.rows())
                    .min_by(|&a, &b| {
                        let da: f64 = lf.0.row(a).iter().zip(x).map(|(p, q)| (p - q).powi(2)).sum();
                        let db: f64 = lf.0.row(b).iter().zip(x).map(|(p, q)| (p - q).powi(2)).sum();
                        da.total_cmp(&db)
                    })
                    .unwrap_or(0);
                (lf.1[nearest], yh)
            })
            .collect();
    let n = paired.len() as f64;
    let (ml, mh) = paired.iter().fold((0.0, 0.0), |(a, b), (l, h)| (a + l / n, b + h / n));
    let cov: f64 = paired.iter().map(|(l, h)| (l - ml) * (h - mh)).sum();
    let var: f64 = paired.iter().map(|(l, _)| (l - ml).powi(2)).sum();
    if var > 0.0 && (cov / var).is_finite() {
        cov / var
    } else {
        1.0
    }
}

/// AR(1) co-kriging with `κ1`, `κ2` and `ρ` fitted jointly by marginal likelihood.
pub fn fit_cokriging(
    families: [KernelFamily; 2],
    lf: (&Matrix, &[f64]),
    hf: (&Matrix, &[f64]),
    opts: &GpFitOptions,
) -> Result<CoKrigingModel> {
    opts.validate()?;
    if lf.0.rows() == 0 || hf.0.rows() == 0 {
        return Err(Error::EmptyData);
    }
    let dim = lf.0.cols();
    let (k1, k2) = (families[0].num_params(dim), families[1].num_params(dim));
    let rho0 = initial_rho(lf, hf);
    let mut rng = Rng::new(derive_seed(opts.seed, 0x636b));
    let mut starts = vec![{
        let mut s = vec![0.0; k1 + k2];
        s.push(rho0);
        s
    }];
    while starts.len() < opts.starts {
        let mut s = random_log_point(&mut rng, k1 + k2, opts);
        s.push(rho0 + rng.normal() * rho0.abs().max(1.0));
        starts.push(s);
    }
    let noise = [opts.noise_std, opts.noise_std];
    let build = |theta: &[f64]| -> Result<CoKrigingModel> {
        let p = to_positive(&theta[..k1 + k2], opts);
        let lmc = Lmc::ar1(
            families[0].with_params(&p[..k1]),
            families[1].with_params(&p[k1..]),
            theta[k1 + k2],
        );
        CoKrigingModel::fit(lmc, noise, (lf.0.clone(), lf.1.to_vec()), (hf.0.clone(), hf.1.to_vec()))
    };
    let objective = |theta: &[f64]| match build(theta) {
        Ok(m) => -m.log_marginal_likelihood(),
        Err(_) => f64::INFINITY,
    };
    let best = multi_start(starts, objective, opts.max_evals)?;
    build(&best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::Kernel;
    use crate::numerics::cholesky_escalating;

    #[test]
    fn nelder_mead_finds_rosenbrock_minimum() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let (x, v) = nelder_mead(f, &[-1.2, 1.0], 0.5, 10_000, 1e-14);
        assert!(v < 1e-8, "{v}");
        assert!((x[0] - 1.0).abs() < 1e-3 && (x[1] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn nelder_mead_tolerates_infinite_regions() {
        let f = |x: &[f64]| {
            if x[0] < 0.0 {
                f64::INFINITY
            } else {
                (x[0] - 2.0).powi(2)
            }
        };
        let (x, _) = nelder_mead(f, &[1.0], 1.0, 500, 1e-12);
        assert!((x[0] - 2.0).abs() < 1e-4);
    }

    #[test]
    fn recovers_rbf_lengthscale() {
        let n = 60;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let x = Matrix::column_vector(&xs);
        let truth = Kernel::rbf(1.0, vec![0.2]);
        let (l, _) = cholesky_escalating(&truth.gram(&x).unwrap(), 1e-10, 1e-6).unwrap();
        let mut rng = Rng::new(17);
        let z: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let y = l.matvec(&z).unwrap();
        let gp = fit_gpr(KernelFamily::Rbf, &x, &y, &GpFitOptions::default()).unwrap();
        let Kernel::Rbf { lengthscales, .. } = gp.kernel() else {
            panic!()
        };
        assert!(lengthscales[0] > 0.1 && lengthscales[0] < 0.4, "{}", lengthscales[0]);
    }

    #[test]
    fn constant_zero_outputs_pick_small_variance() {
        let x = Matrix::column_vector(&[0.0, 0.3, 0.6, 0.9]);
        let gp = fit_gpr(KernelFamily::Rbf, &x, &[0.0; 4], &GpFitOptions::default()).unwrap();
        let Kernel::Rbf { signal_variance, .. } = gp.kernel() else {
            panic!()
        };
        assert!((*signal_variance - 1e-4).abs() < 1e-9, "{signal_variance}");
    }

    #[test]
    fn fitting_is_deterministic() {
        let x = Matrix::column_vector(&[0.0, 0.2, 0.5, 0.7, 1.0]);
        let y = [0.1, 0.5, -0.3, 0.2, 0.9];
        let opts = GpFitOptions {
            starts: 1,
            seed: 4,
            ..GpFitOptions::default()
        };
        let a = fit_gpr(KernelFamily::nngp(), &x, &y, &opts).unwrap();
        let b = fit_gpr(KernelFamily::nngp(), &x, &y, &opts).unwrap();
        assert_eq!(a.kernel(), b.kernel());
    }

    #[test]
    fn cokriging_fit_finds_linear_relation() {
        let f = |x: f64| (6.0 * x - 2.0).powi(2) * (12.0 * x - 4.0).sin();
        let xl: Vec<f64> = (0..21).map(|i| i as f64 / 20.0).collect();
        let xh = [0.0, 0.25, 0.5, 0.75, 1.0];
        let yl: Vec<f64> = xl.iter().map(|&x| f(x) / 10.0).collect();
        let yh: Vec<f64> = xh.iter().map(|&x| 2.0 * f(x) / 10.0).collect();
        let m = fit_cokriging(
            [KernelFamily::Rbf, KernelFamily::Rbf],
            (&Matrix::column_vector(&xl), &yl),
            (&Matrix::column_vector(&xh), &yh),
            &GpFitOptions::default(),
        )
        .unwrap();
        assert!((m.lmc().rho() - 2.0).abs() < 0.1, "rho {}", m.lmc().rho());
    }
}
