//! The coefficients `C_l^n` three ways, exactly and in floating point.

use qseries::coeffs::{
    coeff_closed, coeff_confluent, coeff_def, coeff_rec, identity_eval, EnergyVector,
};
use qseries::scalar::ratio;
use qseries::Result;

fn main() -> Result<()> {
    let exact = EnergyVector::new(vec![ratio(1, 2), ratio(-1, 3), ratio(2, 1), ratio(5, 7)])?;
    println!(
        "energies {:?}",
        exact
            .values()
            .iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
    );
    println!("{:>3} {:>24} {:>9}", "n", "C_3^n", "agree");
    for n in 0..=8 {
        let d = coeff_def(&exact, n)?;
        let r = coeff_rec(&exact, n, 0.0)?;
        let c = coeff_closed(&exact, n, 0.0)?;
        println!("{n:>3} {:>24} {:>9}", c.to_string(), d == r && r == c);
    }

    for k in 0..=3 {
        println!("identity K={k}: {}", identity_eval(&exact, k, 0.0)?);
    }

    // repeated energies: only the division-free form applies
    let tied = EnergyVector::new(vec![1.5, 1.5, 1.5])?;
    println!(
        "C_2^5(1.5, 1.5, 1.5) = {} (closed form: {:?})",
        coeff_confluent(&tied, 5),
        coeff_closed(&tied, 5, 1e-9).err()
    );
    Ok(())
}
