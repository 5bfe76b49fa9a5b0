use super::*;
use crate::dataset::MfDataset;
use crate::nn::{train_with, Composite, OptimizerKind, Tap, Term, TrainConfig};
use crate::numerics::Rng;

fn quick(epochs: usize, lr: f64) -> TrainConfig {
    TrainConfig {
        learning_rate: lr,
        max_epochs: epochs,
        ..TrainConfig::default()
    }
}

fn linspace(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

fn dataset(f_hf: impl Fn(f64) -> f64, f_lf: impl Fn(f64) -> f64, n_hf: usize, n_lf: usize) -> MfDataset {
    let xh = linspace(n_hf);
    let xl = linspace(n_lf);
    MfDataset::new(
        Matrix::column_vector(&xh),
        xh.iter().map(|&x| f_hf(x)).collect(),
        Matrix::column_vector(&xl),
        xl.iter().map(|&x| f_lf(x)).collect(),
    )
    .unwrap()
}

fn forrester(x: f64) -> f64 {
    (6.0 * x - 2.0).powi(2) * (12.0 * x - 4.0).sin()
}

fn small_multilevel(epochs: usize) -> MultilevelConfig {
    MultilevelConfig {
        lf_hidden: vec![16, 16],
        lf_train: quick(epochs, 5e-3),
        hf_width: 8,
        lin_width: 4,
        hf_train: quick(epochs, 5e-3),
        lin_train: quick(epochs, 5e-3),
        seed: 3,
        ..MultilevelConfig::default()
    }
}

#[test]
fn alpha_one_matches_hf_only_training() {
    let data = dataset(forrester, |x| 0.5 * forrester(x) + 10.0 * (x - 0.5) + 5.0, 5, 12);
    let (scaled, _) = data.normalized().unwrap();
    let cfg = AllInOneConfig {
        alpha: 1.0,
        depth: 1,
        width: 8,
        train: TrainConfig {
            l2_penalty: 1e-4,
            ..quick(60, 1e-2)
        },
        seed: 4,
        ..AllInOneConfig::default()
    };
    let model = build_intermediate(&data, &cfg).unwrap();

    let net = Network::init(intermediate_spec(1, &cfg)).unwrap();
    let y = Matrix::column_vector(scaled.hf_outputs());
    let mut hf_only = Composite::new(vec![Term {
        inputs: scaled.hf_inputs(),
        targets: &y,
        tap: Tap::output(&net),
        weight: 1.0,
    }]);
    let reference = train_with(net, &mut hf_only, &cfg.train).unwrap();
    let history = &model.training()[0].history;
    assert_eq!(history.len(), reference.history.len());
    for (a, b) in history.iter().zip(&reference.history) {
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn alpha_zero_matches_lf_only_training() {
    let data = dataset(forrester, |x| 0.5 * forrester(x) + 10.0 * (x - 0.5) + 5.0, 5, 12);
    let (scaled, _) = data.normalized().unwrap();
    let cfg = AllInOneConfig {
        alpha: 0.0,
        depth: 1,
        width: 6,
        train: quick(60, 1e-2),
        seed: 5,
        ..AllInOneConfig::default()
    };
    let model = build_gpmimic(&data, &cfg).unwrap();

    let net = Network::init(gpmimic_spec(1, &cfg)).unwrap();
    let y = Matrix::column_vector(scaled.lf_outputs());
    let mut lf_only = Composite::new(vec![Term {
        inputs: scaled.lf_inputs(),
        targets: &y,
        tap: Tap {
            layer: net.output_layer(),
            units: 1..2,
        },
        weight: 1.0,
    }]);
    let reference = train_with(net, &mut lf_only, &cfg.train).unwrap();
    for (a, b) in model.training()[0].history.iter().zip(&reference.history) {
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn intermediate_lf_unit_is_linear_and_has_65_values() {
    let spec = intermediate_spec(1, &AllInOneConfig::default());
    let net = Network::init(spec).unwrap();
    let tap = intermediate_lf_tap();
    assert_eq!(net.layer_width(tap.layer), INTERMEDIATE_WIDTH + 1);
    assert_eq!(
        net.unit_activation(tap.layer, INTERMEDIATE_WIDTH),
        crate::nn::Activation::Linear
    );
    assert_eq!(net.unit_activation(tap.layer, 0), crate::nn::Activation::Tanh);
}

#[test]
fn gpmimic_head_is_affine_in_latents() {
    let data = dataset(forrester, |x| 0.5 * forrester(x), 4, 8);
    let cfg = AllInOneConfig {
        depth: 1,
        width: 4,
        train: quick(20, 1e-2),
        ..AllInOneConfig::default()
    };
    let model = build_gpmimic(&data, &cfg).unwrap();
    // u1(x) = x, u2(x) = 1 injected through the head.
    let at = |x: f64| model.gpmimic_head([x, 1.0]).unwrap();
    let (p0, p1, p2) = (at(0.0), at(1.0), at(2.5));
    for k in 0..2 {
        let slope = p1[k] - p0[k];
        assert!((p2[k] - (p0[k] + 2.5 * slope)).abs() <= 1e-12);
    }
    // The head reproduces the network outputs from the actual latents.
    let x = Matrix::column_vector(&[0.1, 0.7]);
    let scaled = model.scaler().x.transform(&x).unwrap();
    let u = model.gpmimic_latent(&scaled).unwrap();
    let direct = model.predict_scaled(&scaled).unwrap();
    for i in 0..2 {
        let h = model.gpmimic_head([u[(i, 0)], u[(i, 1)]]).unwrap();
        assert!((h[0] - direct[i]).abs() <= 1e-12);
    }
}

#[test]
fn three_step_lin_stage_is_affine() {
    let data = dataset(forrester, |x| 0.5 * forrester(x) + 10.0 * (x - 0.5) + 5.0, 5, 16);
    let model = build_three_step(&data, &small_multilevel(200)).unwrap();
    let Components::ThreeStep { lin, .. } = model.components() else {
        panic!("wrong variant");
    };
    let mut rng = Rng::new(8);
    let f = |v: &[f64]| lin.predict(v).unwrap()[0];
    for _ in 0..20 {
        let a = [rng.normal(), rng.normal()];
        let b = [rng.normal(), rng.normal()];
        let s = [a[0] + b[0], a[1] + b[1]];
        assert!((f(&a) + f(&b) - f(&[0.0, 0.0]) - f(&s)).abs() <= 1e-9);
    }
}

#[test]
fn refitting_final_stage_keeps_earlier_stages() {
    let data = dataset(forrester, |x| 0.5 * forrester(x) + 10.0 * (x - 0.5) + 5.0, 5, 16);
    let model = build_three_step(&data, &small_multilevel(100)).unwrap();
    let refit = model.refit_hf_stage(&data, &quick(50, 1e-2), 99).unwrap();
    let (
        Components::ThreeStep {
            lf: a, lin: b, hf: c, ..
        },
        Components::ThreeStep {
            lf: a2,
            lin: b2,
            hf: c2,
            ..
        },
    ) = (model.components(), refit.components())
    else {
        panic!("wrong variant");
    };
    assert_eq!(a.params(), a2.params());
    assert_eq!(b.params(), b2.params());
    assert_ne!(c.params(), c2.params());
}

#[test]
fn builds_are_deterministic() {
    let data = dataset(forrester, |x| 0.5 * forrester(x), 5, 16);
    let cfg = small_multilevel(100);
    assert_eq!(
        build_two_step(&data, &cfg).unwrap(),
        build_two_step(&data, &cfg).unwrap()
    );
    let ai = AllInOneConfig {
        train: quick(30, 1e-2),
        ..AllInOneConfig::default()
    };
    assert_eq!(
        build_intermediate(&data, &ai).unwrap(),
        build_intermediate(&data, &ai).unwrap()
    );
}

#[test]
fn lf_cache_returns_identical_stage() {
    let data = dataset(forrester, |x| 0.5 * forrester(x), 5, 16);
    let cache = LfStageCache::new();
    let cfg = small_multilevel(80);
    let opts = FitOptions {
        lf_cache: Some(&cache),
        ..FitOptions::default()
    };
    let cached = build_two_step_with(&data, &cfg, &opts).unwrap();
    assert_eq!(cache.len(), 1);
    let again = build_two_step_with(&data, &cfg, &opts).unwrap();
    assert_eq!(cache.len(), 1);
    let fresh = build_two_step(&data, &cfg).unwrap();
    assert_eq!(cached.components(), fresh.components());
    assert_eq!(again.components(), fresh.components());
}

#[test]
fn fixed_scaler_is_kept() {
    let data = dataset(forrester, |x| 0.5 * forrester(x), 5, 16);
    let scaler = DataScaler::identity(1);
    let opts = FitOptions {
        scaler: Some(&scaler),
        ..FitOptions::default()
    };
    let ml = small_multilevel(20);
    assert_eq!(build_three_step_with(&data, &ml, &opts).unwrap().scaler(), &scaler);
    let sf = SingleFidelityConfig {
        depth: 1,
        width: 4,
        train: quick(20, 1e-2),
        ..SingleFidelityConfig::default()
    };
    assert_eq!(build_single_fidelity_with(&data, &sf, &opts).unwrap().scaler(), &scaler);
    let wrong = DataScaler::identity(2);
    let bad = FitOptions {
        scaler: Some(&wrong),
        ..FitOptions::default()
    };
    assert!(build_two_step_with(&data, &ml, &bad).is_err());
}

#[test]
fn two_step_recovers_identical_fidelities() {
    let f = |x: f64| (2.0 * std::f64::consts::PI * x).sin();
    let data = dataset(f, f, 6, 30);
    let cfg = MultilevelConfig {
        lf_hidden: vec![32, 32],
        lf_train: quick(8000, 5e-3),
        hf_width: 16,
        hf_train: quick(4000, 5e-3),
        ..MultilevelConfig::default()
    };
    let model = build_two_step(&data, &cfg).unwrap();
    let grid = linspace(200);
    let pred = model.predict_hf_batch(&Matrix::column_vector(&grid)).unwrap();
    let mse = grid.iter().zip(&pred).map(|(&x, p)| (f(x) - p).powi(2)).sum::<f64>() / 200.0;
    assert!(mse < 1e-3, "mse {mse}");
}

#[test]
fn closed_form_lin_stage_solves_ridge_problem() {
    let data = dataset(forrester, |x| 0.5 * forrester(x) + 10.0 * (x - 0.5) + 5.0, 5, 16);
    let cfg = MultilevelConfig {
        lin_closed_form: true,
        lin_width: 2,
        lin_train: TrainConfig {
            l2_penalty: 0.0,
            ..TrainConfig::default()
        },
        ..small_multilevel(300)
    };
    let model = build_three_step(&data, &cfg).unwrap();
    let Components::ThreeStep { lf, lin, .. } = model.components() else {
        panic!("wrong variant");
    };
    // Least squares leaves a residual orthogonal to every regressor.
    let (scaled, _) = data.normalized().unwrap();
    let z = augment(lf, scaled.hf_inputs()).unwrap();
    let pred = lin.predict_batch(&z).unwrap().into_vec();
    let r: Vec<f64> = pred.iter().zip(scaled.hf_outputs()).map(|(p, y)| p - y).collect();
    assert!(r.iter().sum::<f64>().abs() < 1e-9);
    for j in 0..2 {
        let dot: f64 = z.column(j).iter().zip(&r).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-9, "{dot}");
    }
    let too_narrow = MultilevelConfig { lin_width: 1, ..cfg };
    assert!(matches!(
        build_three_step(&data, &too_narrow),
        Err(Error::InvalidConfig(_))
    ));
}

#[test]
fn single_fidelity_fits_constant_exactly() {
    let x = Matrix::column_vector(&linspace(5));
    let model = build_single_fidelity(
        &x,
        &[3.0; 5],
        &SingleFidelityConfig {
            train: quick(10, 1e-2),
            ..SingleFidelityConfig::default()
        },
    )
    .unwrap();
    for v in [0.0, 0.3, 1.0] {
        assert!((model.predict_hf(&[v]).unwrap() - 3.0).abs() < 1e-4);
    }
}

#[test]
fn single_point_affine_net_interpolates() {
    let x = Matrix::column_vector(&[0.4]);
    let cfg = SingleFidelityConfig {
        depth: 0,
        train: quick(2000, 1e-2),
        ..SingleFidelityConfig::default()
    };
    let model = build_single_fidelity(&x, &[2.0], &cfg).unwrap();
    assert!((model.predict_hf(&[0.4]).unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn identity_target_and_dimension_check() {
    let x = Matrix::column_vector(&linspace(11));
    let cfg = SingleFidelityConfig {
        depth: 1,
        width: 8,
        train: TrainConfig {
            optimizer: OptimizerKind::Adam,
            ..quick(3000, 1e-2)
        },
        ..SingleFidelityConfig::default()
    };
    let model = build_single_fidelity(&x, &linspace(11), &cfg).unwrap();
    assert!((model.predict_hf(&[0.5]).unwrap() - 0.5).abs() < 1e-2);
    assert!(matches!(
        model.predict_hf(&[0.5, 0.1]),
        Err(Error::DimensionMismatch { .. })
    ));
}

#[test]
fn raw_and_scaled_paths_agree() {
    let data = dataset(|x| 40.0 * x - 7.0, |x| 3.0 * x, 4, 9);
    let model = build_two_step(&data, &small_multilevel(50)).unwrap();
    let s = model.scaler();
    for x in [0.0, 0.21, 0.77, 1.0] {
        let raw = model.predict_hf(&[x]).unwrap();
        let xs = Matrix::column_vector(&[s.x.scale(0, x)]);
        let ys = model.predict_scaled(&xs).unwrap()[0];
        assert!((raw - s.y_hf.unscale(0, ys)).abs() <= 1e-10);
    }
}

#[test]
fn model_json_round_trip() {
    let data = dataset(forrester, |x| 0.5 * forrester(x), 4, 8);
    let model = build_three_step(&data, &small_multilevel(20)).unwrap();
    let text = model.to_json().unwrap();
    assert!(text.contains(MODEL_FORMAT));
    assert!(text.contains("\"variant\": \"three_step\""));
    let back = MfModel::from_json(&text).unwrap();
    assert_eq!(back.components(), model.components());
    assert_eq!(back.predict_hf(&[0.3]).unwrap(), model.predict_hf(&[0.3]).unwrap());
    assert!(MfModel::from_json(&text.replace(MODEL_FORMAT, "mufide-model-v0")).is_err());
}

#[test]
fn invalid_alpha_rejected() {
    let data = dataset(forrester, forrester, 3, 5);
    let cfg = AllInOneConfig {
        alpha: 1.5,
        ..AllInOneConfig::default()
    };
    assert!(matches!(build_intermediate(&data, &cfg), Err(Error::InvalidConfig(_))));
}
