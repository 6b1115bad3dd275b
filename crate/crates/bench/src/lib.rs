//! Benchmark inputs shared by the criterion targets.

use fbarron::experiments::sample_dataset;
use fbarron::train::{init_net, Dataset};
use fbarron::zoo::make_cubic;
use fbarron::{DomainSpec, FunctionalSpec, NetForm, ShallowNet};

/// Cubic functional with weights `2^{-i}`, `i = 1..=n`.
pub fn cubic(n: usize) -> FunctionalSpec {
    let s: Vec<f64> = (1..=n as i32).map(|i| 2f64.powi(-i)).collect();
    make_cubic(&s).expect("valid weights")
}

/// `count` labelled samples of [`cubic`] on the bounded domain.
pub fn cubic_data(n: usize, count: usize, seed: u64) -> Dataset {
    sample_dataset(&cubic(n), &DomainSpec::Bound, n, count, seed).expect("valid sizes")
}

/// Randomly initialized dense network.
pub fn dense_net(n_inputs: usize, width: usize, seed: u64) -> ShallowNet {
    init_net(NetForm::Dense, n_inputs, width, 0.0, 1.0, seed).expect("valid shape")
}
