//! `(A + B)^n - A^n` as a sum of ordered products for non-commuting `A`, `B`.

use nalgebra::DMatrix;
use qseries::binomial::{binomial_remainder, expand_f, expand_f_rec, EnumerationLimits, Layout};
use qseries::Result;

fn main() -> Result<()> {
    let a = DMatrix::from_row_slice(3, 3, &[1i64, 2, 0, 0, -1, 3, 4, 0, 1]);
    let b = DMatrix::from_row_slice(3, 3, &[0i64, 1, 1, -2, 0, 0, 1, 1, 0]);
    for n in 1..=6 {
        let enumerated = expand_f(&a, &b, n, Layout::Forward, EnumerationLimits::default())?;
        let recursive = expand_f_rec(&a, &b, n)?;
        let direct = binomial_remainder(&a, &b, n)?;
        println!(
            "n={n}: enumeration == recursion == direct: {}",
            enumerated == recursive && recursive == direct
        );
    }
    let f3 = expand_f(&a, &b, 3, Layout::Symmetric, EnumerationLimits::default())?;
    println!("f^3(A, B) ={f3}");
    Ok(())
}
