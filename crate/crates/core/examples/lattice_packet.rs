//! A Gaussian packet on a periodic lattice with a cosine potential.

use qseries::dynamics::SeriesOptions;
use qseries::lattice::{
    build_momentum_split, evolve_wavefunction, evolve_wavefunction_exact, gaussian_packet,
    LatticeSystem,
};
use qseries::propagator::{term_matrix, Evaluator, PathOptions};
use qseries::Result;

fn main() -> Result<()> {
    let sys = LatticeSystem::cosine(32, 1.0, 1.0, 0.25, 1)?;
    let psi0 = gaussian_packet(&sys, 0.5, 0.08, 0.0);
    let opts = SeriesOptions {
        evaluator: Evaluator::Paths,
        ..Default::default()
    };
    let h = build_momentum_split(&sys)?;
    let a4 = term_matrix(&h, 4, 1.0, &PathOptions::default())?;
    println!(
        "paths evaluated for A_4: {} (dense count {})",
        a4.paths_evaluated,
        32u64.pow(5)
    );

    println!("{:>5} {:>12} {:>12}", "t", "L=2 error", "L=4 error");
    for t in [0.25, 0.5, 1.0, 2.0] {
        let exact = evolve_wavefunction_exact(&sys, &psi0, t)?;
        let err = |order| -> Result<f64> {
            let psi = evolve_wavefunction(&sys, &psi0, order, t, &opts)?;
            Ok(psi
                .iter()
                .zip(&exact)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max))
        };
        println!("{t:>5} {:>12.3e} {:>12.3e}", err(2)?, err(4)?);
    }

    let psi = evolve_wavefunction(&sys, &psi0, 4, 2.0, &opts)?;
    for (x, z) in sys.positions().iter().zip(&psi).step_by(4) {
        println!("x={x:.3} |psi|^2={:.5}", z.norm_sqr());
    }
    Ok(())
}
