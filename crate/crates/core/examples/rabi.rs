//! Two-level system: truncated series against the exact propagator as the
//! order grows.

use num_complex::Complex64;
use qseries::dynamics::{evolve_state, evolve_state_exact, SeriesOptions, StateVector};
use qseries::propagator::{truncation_bound, Evaluator, SplitHamiltonian};
use qseries::{CMatrix, Result};

fn main() -> Result<()> {
    let g = 0.4;
    let h1 = CMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(0.0, 0.0),
            Complex64::new(g, 0.0),
            Complex64::new(g, 0.0),
            Complex64::new(0.0, 0.0),
        ],
    );
    let h = SplitHamiltonian::new(vec![0.0, 0.5], h1)?;
    let psi0 = StateVector::basis(2, 0);
    let t = 4.0;
    let exact = evolve_state_exact(&h, &psi0, t)?;
    let opts = SeriesOptions {
        evaluator: Evaluator::Paths,
        ..Default::default()
    };
    println!("P(1) exact = {:.12}", exact.amplitudes()[1].norm_sqr());
    println!("{:>3} {:>14} {:>12} {:>12}", "L", "P(1)", "error", "bound");
    for order in 0..=14 {
        let psi = evolve_state(&h, &psi0, order, t, &opts)?;
        let err = (psi.amplitudes() - exact.amplitudes()).norm();
        println!(
            "{order:>3} {:>14.10} {err:>12.3e} {:>12.3e}",
            psi.amplitudes()[1].norm_sqr(),
            truncation_bound(&h, order, t)
        );
    }
    Ok(())
}
