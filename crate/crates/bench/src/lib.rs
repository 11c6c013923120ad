//! Fixed inputs shared by the benchmarks.

use shlab_core::queue::sample_inputs;
use shlab_core::{BinarySeq, DensityVector, Window};

/// Arrival and service streams on `[0, len)` at densities `alpha` and `alpha + beta`.
pub fn queue_streams(len: i64, alpha: f64, beta: f64) -> (BinarySeq, BinarySeq) {
    let d = DensityVector::new(vec![alpha, beta]).unwrap();
    let mut xs = sample_inputs(&d, Window::int(0, len - 1).unwrap(), 17).unwrap();
    let s = xs.pop().unwrap();
    (xs.pop().unwrap(), s)
}

/// `k` equal densities summing to `total`.
pub fn even_densities(k: usize, total: f64) -> DensityVector {
    DensityVector::new(vec![total / k as f64; k]).unwrap()
}
