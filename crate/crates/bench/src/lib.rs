//! Inputs shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rumboost::data::{bin_columns, BinnedDataset};
use rumboost::Matrix;

/// `k` uniform columns of `n` rows, binned, with gradients and Hessians of a
/// binary logit at random probabilities.
pub fn tree_inputs(n: usize, k: usize, max_bins: usize, seed: u64) -> (BinnedDataset, Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.gen_range(0.0..100.0)).collect()).collect();
    let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
    let binned = bin_columns(&refs, max_bins, 3).expect("finite columns");
    let mut grad = Vec::with_capacity(n);
    let mut hess = Vec::with_capacity(n);
    for r in 0..n {
        let p: f64 = rng.gen_range(0.05..0.95);
        // make the gradient depend on the first column so splits have signal
        let y = if cols[0][r] > 50.0 { 1.0 } else { 0.0 };
        grad.push(p - y);
        hess.push(p * (1.0 - p));
    }
    (binned, grad, hess)
}

/// Random utilities in `[-3, 3)`.
pub fn utilities(n: usize, j: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_vec(n, j, (0..n * j).map(|_| rng.gen_range(-3.0..3.0)).collect()).expect("shape matches")
}

/// Random choices over `j` alternatives.
pub fn choices(n: usize, j: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(0..j)).collect()
}
