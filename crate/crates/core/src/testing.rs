//! Random instances and comparison helpers shared by the `verify` suites,
//! the tests and the examples. Every generator is driven by an explicit seed.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::CMatrix;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Complex matrix with entries uniform in the square `[-scale, scale]^2`.
pub fn random_complex_matrix(rng: &mut TestRng, dim: usize, scale: f64) -> CMatrix {
    DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(
            rng.random_range(-scale..scale),
            rng.random_range(-scale..scale),
        )
    })
}

/// Hermitian matrix `(M + M^dagger) / 2` with `M` from [`random_complex_matrix`].
pub fn random_hermitian(rng: &mut TestRng, dim: usize, scale: f64) -> CMatrix {
    let m = random_complex_matrix(rng, dim, scale);
    (&m + m.adjoint()).map(|z| z * 0.5)
}

/// `dim` energies uniform in `[lo, hi)`, sorted, pairwise separated by at least `min_gap`.
pub fn random_spectrum(rng: &mut TestRng, dim: usize, lo: f64, hi: f64, min_gap: f64) -> Vec<f64> {
    loop {
        let mut e: Vec<f64> = (0..dim).map(|_| rng.random_range(lo..hi)).collect();
        e.sort_by(f64::total_cmp);
        if e.windows(2).all(|w| w[1] - w[0] >= min_gap) {
            return e;
        }
    }
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `max|a - b| / max(max|b|, floor)`.
pub fn rel_max_diff(a: &CMatrix, b: &CMatrix, floor: f64) -> f64 {
    let scale = b.iter().map(|z| z.norm()).fold(floor, f64::max);
    max_abs_diff(a, b) / scale
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}
