//! Shared fixtures for the benchmarks.

use landing_core::problems::{Procrustes, Side};
use landing_core::{Matrix, RngState};

/// A Procrustes instance of size `p` and a start point near the manifold.
pub fn procrustes_fixture(p: usize, seed: u64) -> (Procrustes<f64>, Matrix<f64>) {
    let mut rng = RngState::new(seed);
    let problem =
        Procrustes::random(p, Side::Right, &mut rng).expect("random instance is well posed");
    let x = problem.start_point(&mut rng);
    (problem, x)
}
