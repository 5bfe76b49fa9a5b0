//! Shared inputs for the criterion benchmarks.

use mufide::bench::{sample_case, CaseId, SamplingPlan};
use mufide::dataset::MfDataset;
use mufide::nn::{LayerSpec, Network, NetworkSpec};
use mufide::numerics::{Matrix, Rng};

/// `n` rows of `d` uniform inputs on `[0, 1]` and a smooth target.
pub fn regression_data(n: usize, d: usize, seed: u64) -> (Matrix, Matrix) {
    let mut rng = Rng::new(seed);
    let x = Matrix::from_fn(n, d, |_, _| rng.uniform());
    let y = Matrix::from_fn(n, 1, |i, _| x.row(i).iter().map(|v| (3.0 * v).sin()).sum());
    (x, y)
}

/// A tanh network with `depth` hidden layers of `width` units.
pub fn tanh_network(d: usize, depth: usize, width: usize, seed: u64) -> Network {
    let spec = NetworkSpec::new(d, vec![LayerSpec::tanh(width); depth], 1).with_seed(seed);
    Network::init(spec).expect("valid network spec")
}

/// Training data of a benchmark case at its default sizes (1-D cases).
pub fn case_data(case: CaseId) -> MfDataset {
    sample_case(case, &SamplingPlan::default_for(case), &mut Rng::new(0)).expect("case sampling")
}
