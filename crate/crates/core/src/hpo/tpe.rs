use serde::{Deserialize, Serialize};

use super::space::{Config, Dimension, SearchSpace, Value};
use super::trial::Trial;
use crate::numerics::Rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TpeSettings {
    /// Fraction of ok trials forming the good set.
    pub gamma: f64,
    /// Ok trials required before densities replace the prior.
    pub n_startup: usize,
    pub n_candidates: usize,
}

impl Default for TpeSettings {
    fn default() -> Self {
        Self {
            gamma: 0.25,
            n_startup: 10,
            n_candidates: 24,
        }
    }
}

/// Size of the good set for `n_ok` finished trials.
pub fn good_set_size(gamma: f64, n_ok: usize) -> usize {
    ((gamma * n_ok as f64).ceil() as usize).max(1)
}

/// Next configuration to evaluate given the trials so far.
pub fn tpe_suggest(space: &SearchSpace, history: &[Trial], settings: &TpeSettings, rng: &mut Rng) -> Config {
    let mut ok: Vec<&Trial> = history.iter().filter(|t| t.is_ok()).collect();
    if ok.len() < settings.n_startup.max(1) || !(settings.gamma > 0.0 && settings.gamma < 1.0) {
        return space.sample(rng);
    }
    ok.sort_by(|a, b| a.score().total_cmp(&b.score()));
    let n_good = good_set_size(settings.gamma, ok.len()).min(ok.len());
    let good: Vec<&Config> = ok[..n_good].iter().map(|t| &t.config).collect();
    let bad: Vec<&Config> = ok[n_good..]
        .iter()
        .map(|t| &t.config)
        .chain(history.iter().filter(|t| !t.is_ok()).map(|t| &t.config))
        .collect();

    let models: Vec<(DimModel, DimModel)> = space
        .dims
        .iter()
        .map(|(name, dim)| {
            (
                DimModel::fit(dim, good.iter().filter_map(|c| c.get(name))),
                DimModel::fit(dim, bad.iter().filter_map(|c| c.get(name))),
            )
        })
        .collect();

    let mut best: Option<(f64, Config)> = None;
    for _ in 0..settings.n_candidates.max(1) {
        let mut config = Config::new();
        let mut score = 0.0;
        for ((name, dim), (l, g)) in space.dims.iter().zip(&models) {
            let v = l.sample(dim, rng);
            score += l.log_density(dim, &v) - g.log_density(dim, &v);
            config.insert(name.clone(), v);
        }
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, config));
        }
    }
    best.map(|(_, c)| c).unwrap_or_else(|| space.sample(rng))
}

/// Parzen density of one dimension.
enum DimModel {
    /// Truncated Gaussian mixture in internal coordinates (log for log
    /// dimensions). The first component is the prior.
    Continuous {
        lo: f64,
        hi: f64,
        mus: Vec<f64>,
        sigmas: Vec<f64>,
    },
    Categorical {
        probs: Vec<f64>,
    },
}

fn internal_bounds(dim: &Dimension) -> (f64, f64) {
    match dim {
        Dimension::Uniform { lo, hi } => (*lo, *hi),
        Dimension::LogUniform { lo, hi } => (lo.ln(), hi.ln()),
        Dimension::UniformInt { lo, hi } => (*lo as f64 - 0.5, *hi as f64 + 0.5),
        Dimension::Categorical { .. } => (0.0, 1.0),
    }
}

fn to_internal(dim: &Dimension, v: &Value) -> Option<f64> {
    match dim {
        Dimension::LogUniform { .. } => v.as_f64().filter(|x| *x > 0.0).map(f64::ln),
        _ => v.as_f64(),
    }
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

impl DimModel {
    fn fit<'a>(dim: &Dimension, values: impl Iterator<Item = &'a Value>) -> Self {
        if let Dimension::Categorical { choices } = dim {
            let mut counts = vec![1.0; choices.len()];
            for v in values {
                if let Some(i) = v.as_str().and_then(|s| choices.iter().position(|c| c == s)) {
                    counts[i] += 1.0;
                }
            }
            let total: f64 = counts.iter().sum();
            return DimModel::Categorical {
                probs: counts.into_iter().map(|c| c / total).collect(),
            };
        }
        let (lo, hi) = internal_bounds(dim);
        let range = hi - lo;
        let prior_mu = 0.5 * (lo + hi);
        let mut points: Vec<f64> = values.filter_map(|v| to_internal(dim, v)).collect();
        points.sort_by(f64::total_cmp);
        let mut mus = vec![prior_mu];
        let mut sigmas = vec![range];
        // Bandwidth: the larger gap to a sorted neighbour (the prior mean
        // and the bounds act as neighbours at the ends).
        let mut with_prior = points.clone();
        with_prior.push(prior_mu);
        with_prior.sort_by(f64::total_cmp);
        for &p in &points {
            let i = with_prior.iter().position(|&q| q == p).unwrap_or(0);
            let left = if i > 0 { p - with_prior[i - 1] } else { p - lo };
            let right = if i + 1 < with_prior.len() {
                with_prior[i + 1] - p
            } else {
                hi - p
            };
            mus.push(p);
            sigmas.push(left.max(right).clamp(0.01 * range, range));
        }
        DimModel::Continuous { lo, hi, mus, sigmas }
    }

    fn sample(&self, dim: &Dimension, rng: &mut Rng) -> Value {
        match self {
            DimModel::Categorical { probs } => {
                let Dimension::Categorical { choices } = dim else {
                    unreachable!()
                };
                let u = rng.uniform();
                let mut acc = 0.0;
                for (c, p) in choices.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return Value::Choice(c.clone());
                    }
                }
                Value::Choice(choices[choices.len() - 1].clone())
            }
            DimModel::Continuous { lo, hi, mus, sigmas } => {
                let k = rng.below(mus.len());
                let mut x = mus[k];
                for _ in 0..64 {
                    let draw = mus[k] + sigmas[k] * rng.normal();
                    if (*lo..=*hi).contains(&draw) {
                        x = draw;
                        break;
                    }
                }
                let x = x.clamp(*lo, *hi);
                match dim {
                    Dimension::Uniform { lo, hi } => Value::Real(x.clamp(*lo, *hi)),
                    Dimension::LogUniform { lo, hi } => Value::Real(x.exp().clamp(*lo, *hi)),
                    Dimension::UniformInt { lo, hi } => Value::Int((x.round() as i64).clamp(*lo, *hi)),
                    Dimension::Categorical { .. } => unreachable!(),
                }
            }
        }
    }

    fn log_density(&self, dim: &Dimension, v: &Value) -> f64 {
        match self {
            DimModel::Categorical { probs } => {
                let Dimension::Categorical { choices } = dim else {
                    unreachable!()
                };
                v.as_str()
                    .and_then(|s| choices.iter().position(|c| c == s))
                    .map(|i| probs[i].ln())
                    .unwrap_or(f64::NEG_INFINITY)
            }
            DimModel::Continuous { lo, hi, mus, sigmas } => {
                let Some(x) = to_internal(dim, v) else {
                    return f64::NEG_INFINITY;
                };
                let w = 1.0 / mus.len() as f64;
                let mut p = 0.0;
                for (m, s) in mus.iter().zip(sigmas) {
                    let mass = normal_cdf((hi - m) / s) - normal_cdf((lo - m) / s);
                    let z = (x - m) / s;
                    let pdf = (-0.5 * z * z).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
                    p += w * pdf / mass.max(1e-300);
                }
                p.max(1e-300).ln()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hpo::trial::TrialStatus;

    fn trial(index: usize, config: Config, objective: Option<f64>) -> Trial {
        Trial {
            index,
            config,
            objective,
            status: if objective.is_some() {
                TrialStatus::Ok
            } else {
                TrialStatus::Failed
            },
            seed: 0,
            wall_time: 0.0,
            error: None,
        }
    }

    fn space() -> SearchSpace {
        SearchSpace::new()
            .with("x", Dimension::Uniform { lo: 0.0, hi: 1.0 })
            .with("lr", Dimension::LogUniform { lo: 1e-4, hi: 1e-1 })
            .with("w", Dimension::UniformInt { lo: 10, hi: 120 })
            .with(
                "opt",
                Dimension::Categorical {
                    choices: vec!["adam".into(), "adamax".into()],
                },
            )
    }

    #[test]
    fn good_set_sizes() {
        assert_eq!(good_set_size(0.25, 20), 5);
        assert_eq!(good_set_size(0.25, 1), 1);
        assert_eq!(good_set_size(0.25, 3), 1);
        assert_eq!(good_set_size(0.25, 5), 2);
    }

    #[test]
    fn empty_history_samples_prior() {
        let s = space();
        let mut rng = Rng::new(1);
        let c = tpe_suggest(&s, &[], &TpeSettings::default(), &mut rng);
        assert!(s.contains(&c));
    }

    #[test]
    fn suggestions_stay_in_domain_with_ties_and_failures() {
        let s = space();
        let mut rng = Rng::new(2);
        let mut history = Vec::new();
        for i in 0..30 {
            let c = s.sample(&mut rng);
            let obj = if i % 7 == 0 { None } else { Some(1.0) };
            history.push(trial(i, c, obj));
        }
        for _ in 0..200 {
            let c = tpe_suggest(&s, &history, &TpeSettings::default(), &mut rng);
            assert!(s.contains(&c), "{c:?}");
        }
    }

    #[test]
    fn concentrates_near_good_region() {
        let s = SearchSpace::new().with("x", Dimension::Uniform { lo: 0.0, hi: 1.0 });
        let mut rng = Rng::new(3);
        let history: Vec<Trial> = (0..40)
            .map(|i| {
                let x = i as f64 / 39.0;
                let mut c = Config::new();
                c.insert("x".into(), Value::Real(x));
                trial(i, c, Some((x - 0.3).powi(2)))
            })
            .collect();
        let xs: Vec<f64> = (0..100)
            .map(|_| {
                tpe_suggest(&s, &history, &TpeSettings::default(), &mut rng)["x"]
                    .as_f64()
                    .unwrap()
            })
            .collect();
        let near = xs.iter().filter(|x| (**x - 0.3).abs() < 0.15).count();
        assert!(near > 80, "{near}");
    }
}
