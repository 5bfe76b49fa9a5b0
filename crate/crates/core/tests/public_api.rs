use mufide::bench::{sample_case, test_set, CaseId, SamplingPlan};
use mufide::dataset::MfDataset;
use mufide::model::{ModelConfig, ModelKind, Surrogate};
use mufide::numerics::{Matrix, Rng};
use mufide::Error;

fn small_case(id: CaseId) -> (MfDataset, Matrix) {
    let plan = SamplingPlan::default_for(id);
    let data = sample_case(id, &plan, &mut Rng::new(11)).unwrap();
    let plan = SamplingPlan { n_test: 25, ..plan };
    let (x, _) = test_set(id, &plan, &mut Rng::new(12)).unwrap();
    (data, x)
}

#[test]
fn every_model_survives_a_json_round_trip() {
    let (data, x) = small_case(CaseId::NonlinearCorrelation);
    for kind in ModelKind::ALL {
        let cfg = ModelConfig::default_for(kind, 4).with_all_epochs(60);
        let model = cfg.fit(&data).unwrap();
        assert_eq!(model.input_dim(), 1);
        let before = model.predict_hf_batch(&x).unwrap();
        let back = Surrogate::from_json(&model.to_json().unwrap()).unwrap();
        let after = back.predict_hf_batch(&x).unwrap();
        assert_eq!(before, after, "{kind}");
        assert!(before.iter().all(|v| v.is_finite()), "{kind}");
    }
}

#[test]
fn fitting_is_reproducible() {
    let (data, x) = small_case(CaseId::Discontinuous);
    for kind in [ModelKind::Gpmimic, ModelKind::ThreeStep, ModelKind::CoKriging] {
        let cfg = ModelConfig::default_for(kind, 9).with_all_epochs(80);
        let a = cfg.fit(&data).unwrap().predict_hf_batch(&x).unwrap();
        let b = cfg.fit(&data).unwrap().predict_hf_batch(&x).unwrap();
        assert_eq!(a, b, "{kind}");
    }
}

#[test]
fn wrong_input_width_is_rejected() {
    let (data, _) = small_case(CaseId::LinearCorrelation);
    let model = ModelConfig::default_for(ModelKind::TwoStep, 0)
        .with_all_epochs(20)
        .fit(&data)
        .unwrap();
    let wide = Matrix::zeros(3, 2);
    assert!(matches!(
        model.predict_hf_batch(&wide),
        Err(Error::DimensionMismatch { .. })
    ));
}

#[test]
fn truncated_model_json_is_an_error() {
    let (data, _) = small_case(CaseId::LinearCorrelation);
    let text = ModelConfig::default_for(ModelKind::Gpr, 0)
        .fit(&data)
        .unwrap()
        .to_json()
        .unwrap();
    assert!(Surrogate::from_json(&text[..text.len() / 3]).is_err());
}
