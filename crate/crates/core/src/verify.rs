//! Seeded invariant suites, runnable from the command line as `verify`.
//!
//! Each suite draws random systems from a seeded generator, checks one
//! family of identities or oracle agreements, and reports how many checks
//! passed and the worst residual seen.

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::binomial::{binomial_remainder, expand_f, EnumerationLimits, Layout};
use crate::coeffs::{coeff_closed, coeff_def, coeff_rec, identity_eval, EnergyVector};
use crate::divided_exp::{divided_difference_exp, explicit_phase_sum};
use crate::dynamics::{
    evolve_density_exact, stationary_consistency, tdpt_coeffs, DensityMatrix, StateVector,
};
use crate::expm::dense_exp;
use crate::lattice::{
    evolve_wavefunction, evolve_wavefunction_exact, gaussian_packet, LatticeSystem,
};
use crate::propagator::{
    term_matrix, truncated_propagator, truncation_bound, vanloan_terms, PathOptions,
    SplitHamiltonian,
};
use crate::scalar::ratio;
use crate::testing::{
    max_abs_diff, random_complex_matrix, random_hermitian, random_spectrum, rel_max_diff, rng,
    spectral_norm, TestRng,
};
use crate::DEFAULT_DEGENERACY_TOL;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub checks: usize,
    pub passed: usize,
    pub worst_residual: f64,
    pub tolerance: f64,
}

impl SuiteReport {
    fn new(name: &str, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            checks: 0,
            passed: 0,
            worst_residual: 0.0,
            tolerance,
        }
    }

    fn record(&mut self, residual: f64) {
        self.checks += 1;
        if residual <= self.tolerance {
            self.passed += 1;
        }
        if residual.is_nan() || residual > self.worst_residual {
            self.worst_residual = residual;
        }
    }

    fn record_exact(&mut self, ok: bool) {
        self.record(if ok { 0.0 } else { 1.0 });
    }

    pub fn ok(&self) -> bool {
        self.checks > 0 && self.passed == self.checks
    }
}

fn random_rational_energies(r: &mut TestRng, len: usize) -> EnergyVector<BigRational> {
    let mut values: Vec<BigRational> = Vec::with_capacity(len);
    while values.len() < len {
        let v = ratio(r.random_range(-60..=60), r.random_range(1..=7));
        if !values.contains(&v) {
            values.push(v);
        }
    }
    EnergyVector::new(values).expect("at least two finite values")
}

fn random_split(r: &mut TestRng, dim: usize, h1_scale: f64) -> SplitHamiltonian {
    let e = random_spectrum(r, dim, -1.0, 1.0, 0.05);
    SplitHamiltonian::new(e, random_hermitian(r, dim, h1_scale)).expect("random Hermitian")
}

/// Partition identity in exact arithmetic.
pub fn identity_suite(seed: u64) -> SuiteReport {
    let mut rep = SuiteReport::new("identity", 0.0);
    let mut r = rng(seed);
    for _ in 0..100 {
        let len = r.random_range(2..=7);
        let e = random_rational_energies(&mut r, len);
        for k in 0..len as u32 {
            let v = identity_eval(&e, k, 0.0).expect("distinct energies");
            let expect = if k as usize + 1 == len {
                BigRational::one()
            } else {
                BigRational::zero()
            };
            rep.record_exact(v == expect);
        }
    }
    rep
}

/// Enumeration, recurrence and closed form agree exactly.
pub fn coefficient_suite(seed: u64) -> SuiteReport {
    let mut rep = SuiteReport::new("coefficients", 0.0);
    let mut r = rng(seed);
    for _ in 0..20 {
        let len = r.random_range(2..=5);
        let e = random_rational_energies(&mut r, len);
        for n in 0..=8 {
            let d = coeff_def(&e, n).expect("n >= 0");
            let rec = coeff_rec(&e, n, 0.0).expect("distinct energies");
            let closed = coeff_closed(&e, n, 0.0).expect("distinct energies");
            rep.record_exact(d == rec && rec == closed);
        }
    }
    rep
}

/// `(A+B)^n - A^n` against the ordered-product expansion.
pub fn binomial_suite(seed: u64) -> SuiteReport {
    let mut rep = SuiteReport::new("binomial", 1e-10);
    let mut r = rng(seed);
    for _ in 0..20 {
        let dim = r.random_range(1..=4);
        let a = random_complex_matrix(&mut r, dim, 1.0);
        let b = random_complex_matrix(&mut r, dim, 1.0);
        for n in 1..=6 {
            let f = expand_f(&a, &b, n, Layout::Forward, EnumerationLimits::default())
                .expect("within limits");
            let rem = binomial_remainder(&a, &b, n).expect("n >= 0");
            rep.record(rel_max_diff(&f, &rem, 1.0));
        }
    }
    rep
}

/// Explicit sum against the stable route for well-separated nodes.
pub fn divided_exp_suite(seed: u64) -> SuiteReport {
    let mut rep = SuiteReport::new("divided-exp", 1e-9);
    let mut r = rng(seed);
    for _ in 0..100 {
        let len = r.random_range(2..=6);
        let nodes = random_spectrum(&mut r, len, -3.0, 3.0, 0.3);
        let t = r.random_range(0.1..4.0);
        let e = EnergyVector::new(nodes.clone()).expect("finite");
        rep.record((explicit_phase_sum(&e, t) - divided_difference_exp(&nodes, t)).norm());
    }
    rep
}

/// Path sums against the block-matrix exponential, including degenerate spectra.
pub fn propagator_suite(seed: u64) -> SuiteReport {
    let mut rep = SuiteReport::new("propagator", 1e-9);
    let mut r = rng(seed);
    let opts = PathOptions::default();
    for case in 0..12 {
        let dim = r.random_range(2..=5);
        let mut h = random_split(&mut r, dim, 0.5);
        if case % 3 == 1 {
            let mut e = h.energies().to_vec();
            e[1] = e[0];
            h = SplitHamiltonian::new(e, h.h1().clone()).expect("Hermitian");
        }
        for &t in &[0.1, 1.0, 5.0] {
            let oracle = vanloan_terms(&h, 4, t);
            for (l, o) in oracle.iter().enumerate() {
                let term = term_matrix(&h, l, t, &opts).expect("within budget");
                rep.record(rel_max_diff(&term.matrix, &o.matrix, 1.0));
            }
        }
    }
    rep
}

/// Truncated propagator within the a-priori bound of the dense exponential.
pub fn convergence_suite(seed: u64) -> SuiteReport {
    let mut rep = SuiteReport::new("convergence", 1.0);
    let mut r = rng(seed);
    let opts = PathOptions::default();
    for _ in 0..8 {
        let dim = r.random_range(2..=4);
        let h = random_split(&mut r, dim, 0.3);
        let t = 0.8 / h.h1_norm().max(1e-12);
        let exact = dense_exp(&h.full(), t);
        for order in 0..=6 {
            let approx = truncated_propagator(&h, order, t, &opts).expect("within budget");
            let err = spectral_norm(&(&exact - &approx));
            // residual as a fraction of the allowed bound
            rep.record(err / (10.0 * truncation_bound(&h, order, t)).max(1e-14));
        }
    }
    rep
}

/// Exact eigenpairs satisfy the stationary relation.
pub fn stationary_suite(seed: u64) -> SuiteReport {
    let mut rep = SuiteReport::new("stationary", 1e-8);
    let mut r = rng(seed);
    for _ in 0..10 {
        let h = random_split(&mut r, 4, 0.4);
        for k in 1..=4 {
            let report = stationary_consistency(&h, k).expect("K >= 1");
            rep.record(report.max_residual);
        }
    }
    rep
}

/// Integrated amplitude recurrence equals propagator columns.
pub fn tdpt_suite(seed: u64) -> SuiteReport {
    let mut rep = SuiteReport::new("tdpt", 1e-9);
    let mut r = rng(seed);
    let opts = PathOptions::default();
    for _ in 0..6 {
        let dim = r.random_range(2..=4);
        let h = random_split(&mut r, dim, 0.5);
        let t = r.random_range(0.2..3.0);
        let alpha = r.random_range(0..dim);
        for l in 1..=3 {
            let tc = tdpt_coeffs(&h, alpha, l, t, DEFAULT_DEGENERACY_TOL).expect("valid alpha");
            let a = term_matrix(&h, l, t, &opts).expect("within budget").matrix;
            let diff = (0..dim)
                .map(|g| (tc.c[g] - a[(g, alpha)]).norm())
                .fold(0.0, f64::max);
            rep.record(diff);
        }
    }
    rep
}

/// Lattice series against the dense position-space exponential.
pub fn lattice_suite(seed: u64) -> SuiteReport {
    let mut rep = SuiteReport::new("lattice", 1e-6);
    let mut r = rng(seed);
    for _ in 0..4 {
        let v = r.random_range(0.05..0.25);
        let sys = LatticeSystem::cosine(16, 1.0, 1.0, v, 1).expect("valid lattice");
        let psi0 = gaussian_packet(&sys, r.random_range(0.0..1.0), 0.1, 0.0);
        let t = 0.5 / v;
        let a = evolve_wavefunction(&sys, &psi0, 4, t, &Default::default()).expect("within budget");
        let b = evolve_wavefunction_exact(&sys, &psi0, t).expect("matching length");
        rep.record(
            a.iter()
                .zip(&b)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max),
        );
    }
    rep
}

/// Exact density evolution keeps unit trace and Hermiticity.
pub fn density_suite(seed: u64) -> SuiteReport {
    let mut rep = SuiteReport::new("density", 1e-11);
    let mut r = rng(seed);
    for _ in 0..10 {
        let dim = r.random_range(2..=5);
        let h = random_split(&mut r, dim, 0.5);
        let rho0 = DensityMatrix::pure(&StateVector::basis(dim, r.random_range(0..dim)));
        let rho =
            evolve_density_exact(&h, &rho0, r.random_range(0.0..5.0)).expect("matching dimension");
        let trace_dev = (rho.trace() - Complex64::new(1.0, 0.0)).norm();
        rep.record(trace_dev.max(max_abs_diff(rho.matrix(), &rho.matrix().adjoint())));
    }
    rep
}

/// Every suite with seeds derived from `seed`.
pub fn run_all(seed: u64) -> Vec<SuiteReport> {
    let suites: [fn(u64) -> SuiteReport; 10] = [
        identity_suite,
        coefficient_suite,
        binomial_suite,
        divided_exp_suite,
        propagator_suite,
        convergence_suite,
        stationary_suite,
        tdpt_suite,
        lattice_suite,
        density_suite,
    ];
    suites
        .iter()
        .enumerate()
        .map(|(i, suite)| suite(seed.wrapping_add(i as u64)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass_on_default_seed() {
        for rep in run_all(0) {
            assert!(rep.ok(), "{rep:?}");
        }
    }

    #[test]
    fn suites_are_deterministic() {
        assert_eq!(propagator_suite(5), propagator_suite(5));
    }

    #[test]
    fn failures_are_counted() {
        let mut rep = SuiteReport::new("x", 1e-3);
        rep.record(1e-4);
        rep.record(1.0);
        assert_eq!((rep.checks, rep.passed, rep.worst_residual), (2, 1, 1.0));
        assert!(!rep.ok());
        rep.record(f64::NAN);
        assert!(rep.worst_residual.is_nan());
    }
}
