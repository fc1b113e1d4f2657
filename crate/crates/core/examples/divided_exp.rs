//! Divided differences of `e^{-ixt}`, through separated, nearly coincident
//! and coincident energies.

use qseries::coeffs::EnergyVector;
use qseries::divided_exp::{
    cluster, explicit_phase_sum, magnitude_bound, path_phase, phase_factor_confluent,
};
use qseries::{Result, DEFAULT_DEGENERACY_TOL};

fn main() -> Result<()> {
    let t = 1.7;
    println!("{:>10} {:>26} {:>26}", "gap", "stable", "explicit sum");
    for gap in [1e-1, 1e-4, 1e-7, 1e-10, 0.0] {
        let energies = vec![0.3, 0.3 + gap, -0.8];
        let stable = path_phase(&energies, t, DEFAULT_DEGENERACY_TOL);
        let explicit = if gap > 0.0 {
            format!(
                "{:.15e}",
                explicit_phase_sum(&EnergyVector::new(energies)?, t).re
            )
        } else {
            "undefined".into()
        };
        println!("{gap:>10.0e} {:>26.15e} {explicit:>26}", stable.re);
    }

    let spectrum = cluster(
        &EnergyVector::new(vec![1.0, 1.0 + 1e-12, 2.0, 1.0])?,
        DEFAULT_DEGENERACY_TOL,
    );
    println!("clusters {:?}", spectrum.nodes());
    let v = phase_factor_confluent(&spectrum, t);
    println!(
        "|f| = {:.6} <= t^l/l! = {:.6}",
        v.norm(),
        magnitude_bound(spectrum.order(), t)
    );
    Ok(())
}
