use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use mufide::bench::{eval_case, CaseId, Fidelity};
use mufide::gp::{fit_gpr, GpFitOptions, GprModel, Kernel, KernelFamily};
use mufide::hpo::{default_search_space, tpe_suggest, TpeSettings, Trial, TrialStatus};
use mufide::model::ModelKind;
use mufide::nn::{loss_and_grad, train, TrainConfig};
use mufide::numerics::{cholesky, Rng};
use mufide_bench::{case_data, regression_data, tanh_network};

fn network(c: &mut Criterion) {
    let mut group = c.benchmark_group("nn");
    for (rows, width) in [(37, 32), (37, 64), (400, 64)] {
        let (x, y) = regression_data(rows, 1, 1);
        let net = tanh_network(1, 3, width, 2);
        group.bench_with_input(
            BenchmarkId::new("loss_and_grad", format!("{rows}x{width}")),
            &net,
            |b, net| b.iter(|| black_box(loss_and_grad(net, &x, &y, 1e-6).unwrap())),
        );
    }
    let (x, y) = regression_data(37, 1, 3);
    let cfg = TrainConfig {
        max_epochs: 100,
        early_stop_patience: 0,
        ..TrainConfig::default()
    };
    group.bench_function("train_100_epochs_3x32", |b| {
        b.iter(|| black_box(train(tanh_network(1, 3, 32, 4), &x, &y, &cfg).unwrap()))
    });
    group.finish();
}

fn gaussian_process(c: &mut Criterion) {
    let mut group = c.benchmark_group("gp");
    for n in [32, 128, 512] {
        let (x, y) = regression_data(n, 2, 5);
        let kernel = Kernel::nngp_erf(1.0, 2.0, 3);
        let gram = kernel.gram(&x).unwrap();
        group.bench_with_input(BenchmarkId::new("nngp_gram", n), &x, |b, x| {
            b.iter(|| black_box(kernel.gram(x)))
        });
        group.bench_with_input(BenchmarkId::new("cholesky", n), &gram, |b, g| {
            b.iter(|| black_box(cholesky(g, 1e-8).unwrap()))
        });
        let y = y.column(0);
        group.bench_with_input(BenchmarkId::new("gpr_fit_fixed", n), &n, |b, _| {
            b.iter(|| black_box(GprModel::fit(Kernel::rbf(1.0, vec![0.3, 0.3]), x.clone(), y.clone(), 1e-5).unwrap()))
        });
    }
    let data = case_data(CaseId::LinearCorrelation);
    let opts = GpFitOptions {
        starts: 2,
        ..GpFitOptions::default()
    };
    group.sample_size(10);
    group.bench_function("gpr_marginal_likelihood_fit_case1_lf", |b| {
        b.iter(|| black_box(fit_gpr(KernelFamily::Rbf, data.lf_inputs(), data.lf_outputs(), &opts).unwrap()))
    });
    group.finish();
}

fn search(c: &mut Criterion) {
    let space = default_search_space(ModelKind::ThreeStep);
    let mut rng = Rng::new(6);
    let history: Vec<Trial> = (0..60)
        .map(|i| Trial {
            index: i,
            config: space.sample(&mut rng),
            objective: Some(rng.uniform()),
            status: TrialStatus::Ok,
            seed: i as u64,
            wall_time: 0.0,
            error: None,
        })
        .collect();
    c.bench_function("tpe_suggest_60_trials", |b| {
        b.iter(|| black_box(tpe_suggest(&space, &history, &TpeSettings::default(), &mut rng)))
    });
}

fn benchmark_functions(c: &mut Criterion) {
    let mut rng = Rng::new(7);
    let points: Vec<Vec<f64>> = (0..1000)
        .map(|_| (0..20).map(|_| rng.uniform_range(-3.0, 3.0)).collect())
        .collect();
    c.bench_function("eval_high_dim_hf_1000", |b| {
        b.iter(|| {
            points
                .iter()
                .map(|x| eval_case(CaseId::HighDim20, Fidelity::Hf, x).unwrap())
                .sum::<f64>()
        })
    });
}

criterion_group!(benches, network, gaussian_process, search, benchmark_functions);
criterion_main!(benches);
