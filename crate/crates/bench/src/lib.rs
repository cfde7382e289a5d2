//! Fixed inputs shared by the benchmarks.

use mmv_core::threshold::orthogonal_halves_matrix;
use mmv_core::{generate_instance, ProblemConfig, SignalValueMatrix, SimRng, SparseInstance, WMode};

/// The two-row matrix `[[2, 2], [−2, 2]]` used throughout the experiments.
pub fn two_row_w() -> SignalValueMatrix {
    SignalValueMatrix::from_rows(&[vec![2.0, 2.0], vec![-2.0, 2.0]], WMode::Strict)
        .expect("valid W")
}

/// A `k × 2` orthogonal-halves matrix with `k` up to 20 (the enumeration
/// limit of the threshold).
pub fn wide_w(k: usize) -> SignalValueMatrix {
    orthogonal_halves_matrix(k).expect("even k")
}

/// One seeded instance of [`two_row_w`] with `σa² = 1`, `σz² = 0.1`.
pub fn instance(m: usize, n: usize, seed: u64) -> (SparseInstance, ProblemConfig) {
    let cfg = ProblemConfig::new(m, n, 1.0, 0.1, seed).with_epsilon(0.4);
    let inst = generate_instance(&two_row_w(), &cfg, &mut SimRng::new(seed)).expect("valid config");
    (inst, cfg)
}
