//! Cross-validation, tree-structured Parzen search and per-architecture
//! search spaces.

mod cv;
mod space;
mod tpe;
mod trial;

pub use cv::{cross_validate, make_folds, CvMode, CvPlan, Fold, HfPredictor};
pub use space::{Config, Dimension, SearchSpace, Value};
pub use tpe::{good_set_size, tpe_suggest, TpeSettings};
pub use trial::{optimize, read_trials, write_trials, HpoOutcome, HpoSettings, Trial, TrialStatus, TRIALS_FORMAT};

use crate::model::ModelKind;

pub const INITIALIZER: &str = "initializer";
pub const OPTIMIZER: &str = "optimizer";
pub const LEARNING_RATE: &str = "learning_rate";
pub const L2_PENALTY: &str = "l2_penalty";
pub const ALPHA: &str = "alpha";
pub const DEPTH: &str = "depth";
pub const WIDTH: &str = "width";
pub const LIN_WIDTH: &str = "lin_width";

fn choices(names: &[&str]) -> Dimension {
    Dimension::Categorical {
        choices: names.iter().map(|s| s.to_string()).collect(),
    }
}

/// Tuned dimensions of each architecture. GP models have no dimensions;
/// their kernel parameters come from the marginal likelihood.
pub fn default_search_space(kind: ModelKind) -> SearchSpace {
    if kind.is_gp() {
        return SearchSpace::new();
    }
    let width = Dimension::UniformInt { lo: 10, hi: 120 };
    let depth = Dimension::UniformInt { lo: 1, hi: 4 };
    let mut space = SearchSpace::new()
        .with(
            INITIALIZER,
            choices(&["uniform", "normal", "glorot_uniform", "glorot_normal"]),
        )
        .with(OPTIMIZER, choices(&["adam", "adamax"]))
        .with(LEARNING_RATE, Dimension::LogUniform { lo: 1e-4, hi: 1e-1 })
        .with(L2_PENALTY, Dimension::LogUniform { lo: 1e-8, hi: 1e-1 });
    match kind {
        ModelKind::Intermediate | ModelKind::Gpmimic => {
            space = space
                .with(ALPHA, Dimension::LogUniform { lo: 1e-4, hi: 1.0 })
                .with(DEPTH, depth)
                .with(WIDTH, width);
        }
        ModelKind::SingleFidelity => space = space.with(DEPTH, depth).with(WIDTH, width),
        ModelKind::TwoStep => space = space.with(WIDTH, width),
        ModelKind::ThreeStep => space = space.with(WIDTH, width.clone()).with(LIN_WIDTH, width),
        ModelKind::CoKriging | ModelKind::Gpr => unreachable!(),
    }
    space
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Result;
    use crate::numerics::Rng;

    #[test]
    fn alpha_only_for_all_in_one() {
        assert!(default_search_space(ModelKind::Intermediate).get(ALPHA).is_some());
        assert!(default_search_space(ModelKind::Gpmimic).get(ALPHA).is_some());
        assert!(default_search_space(ModelKind::TwoStep).get(ALPHA).is_none());
        assert!(default_search_space(ModelKind::ThreeStep).get(ALPHA).is_none());
        assert!(default_search_space(ModelKind::ThreeStep).get(LIN_WIDTH).is_some());
        assert!(default_search_space(ModelKind::TwoStep).get(DEPTH).is_none());
        assert!(default_search_space(ModelKind::CoKriging).is_empty());
    }

    #[test]
    fn reported_tuned_values_are_in_range() {
        let s = default_search_space(ModelKind::Intermediate);
        let mut c = Config::new();
        c.insert(INITIALIZER.into(), Value::Choice("glorot_normal".into()));
        c.insert(OPTIMIZER.into(), Value::Choice("adam".into()));
        c.insert(LEARNING_RATE.into(), Value::Real(6.35e-3));
        c.insert(L2_PENALTY.into(), Value::Real(2.28e-3));
        c.insert(ALPHA.into(), Value::Real(0.5));
        c.insert(DEPTH.into(), Value::Int(2));
        c.insert(WIDTH.into(), Value::Int(59));
        assert!(s.contains(&c));
        c.insert(L2_PENALTY.into(), Value::Real(7.33e-2));
        assert!(s.contains(&c));
        // A zero penalty cannot be drawn from a log-uniform prior.
        c.insert(L2_PENALTY.into(), Value::Real(0.0));
        assert!(!s.contains(&c));
    }

    fn best_of(n_startup: usize, seed: u64) -> Result<f64> {
        let space = SearchSpace::new().with("x", Dimension::Uniform { lo: 0.0, hi: 1.0 });
        let settings = HpoSettings {
            budget: 50,
            tpe: TpeSettings {
                n_startup,
                ..TpeSettings::default()
            },
            seed,
        };
        let out = optimize(&space, |c, _| Ok((c["x"].as_f64().unwrap() - 0.3).powi(2)), &settings)?;
        Ok(out.best.score())
    }

    #[test]
    fn tpe_beats_random_search_on_quadratic() {
        let mut wins = 0;
        let mut tpe = Vec::new();
        let mut random = Vec::new();
        let mut rng = Rng::new(99);
        for _ in 0..20 {
            let seed = rng.next_u64();
            let a = best_of(10, seed).unwrap();
            let b = best_of(usize::MAX, seed).unwrap();
            wins += usize::from(a < b);
            tpe.push(a);
            random.push(b);
        }
        tpe.sort_by(f64::total_cmp);
        random.sort_by(f64::total_cmp);
        assert!(tpe[10] < random[10]);
        // One-sided sign test at p < 0.05 over 20 pairs needs 15 wins.
        assert!(wins >= 15, "{wins}");
    }
}
