//! Mixed-state evolution: `sum_{k+l<=L} A_k rho A_l^dagger` against the
//! exact conjugation.

use num_complex::Complex64;
use qseries::dynamics::{evolve_density, evolve_density_exact, DensityMatrix, SeriesOptions};
use qseries::propagator::SplitHamiltonian;
use qseries::testing::{max_abs_diff, random_hermitian, rng};
use qseries::{CMatrix, Result};

fn main() -> Result<()> {
    let mut r = rng(7);
    let h = SplitHamiltonian::new(vec![-0.6, 0.1, 0.9], random_hermitian(&mut r, 3, 0.3))?;
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let rho0 = DensityMatrix::new(CMatrix::from_row_slice(
        3,
        3,
        &[
            c(0.5, 0.0),
            c(0.1, 0.1),
            c(0.0, 0.0),
            c(0.1, -0.1),
            c(0.3, 0.0),
            c(0.05, 0.0),
            c(0.0, 0.0),
            c(0.05, 0.0),
            c(0.2, 0.0),
        ],
    ))?;
    let t = 2.5;
    let exact = evolve_density_exact(&h, &rho0, t)?;
    println!(
        "{:>3} {:>12} {:>12} {:>12}",
        "L", "|tr - 1|", "hermitian", "error"
    );
    for order in [0, 2, 4, 6, 8, 10] {
        let rho = evolve_density(&h, &rho0, order, t, &SeriesOptions::default())?;
        println!(
            "{order:>3} {:>12.3e} {:>12.3e} {:>12.3e}",
            (rho.trace() - c(1.0, 0.0)).norm(),
            rho.hermitian_deviation(),
            max_abs_diff(rho.matrix(), exact.matrix())
        );
    }
    Ok(())
}
