//! Stationary and time-dependent perturbation theory recovered from the series.

use qseries::dynamics::{identity_chain, stationary_consistency, tdpt_coeffs};
use qseries::propagator::{term_matrix, PathOptions, SplitHamiltonian};
use qseries::testing::{random_hermitian, rng};
use qseries::{Result, DEFAULT_DEGENERACY_TOL};

fn main() -> Result<()> {
    let mut r = rng(3);
    let h = SplitHamiltonian::new(
        vec![-1.0, -0.2, 0.4, 0.4, 1.3],
        random_hermitian(&mut r, 5, 0.4),
    )?;

    for k in 1..=4 {
        let rep = stationary_consistency(&h, k)?;
        println!("K={k}: max residual {:.2e}", rep.max_residual);
    }
    for k in 2..=4 {
        let chain = identity_chain(&h, k, DEFAULT_DEGENERACY_TOL)?;
        println!("K={k}: identity chain {:.2e}", chain.total());
    }

    let (alpha, t) = (1, 2.0);
    for l in 1..=4 {
        let tc = tdpt_coeffs(&h, alpha, l, t, DEFAULT_DEGENERACY_TOL)?;
        let a = term_matrix(&h, l, t, &PathOptions::default())?.matrix;
        let diff = (0..h.dim())
            .map(|g| (tc.c[g] - a[(g, alpha)]).norm())
            .fold(0.0, f64::max);
        println!("l={l}: |c^(l) - A_l e_alpha| = {diff:.2e}");
    }
    Ok(())
}
