//! Non-commutative binomial expansion `(A+B)^n = A^n + f^n(A,B)`.
//!
//! `f^n` collects every word with at least one `B`. Its order-`l` part (words
//! with exactly `l` factors of `B`) is
//! `sum (A^{k_1} B)(A^{k_2} B)...(A^{k_l} B) A^{n-l-sum k}` over
//! `0 <= k_i <= n-l` with the step function keeping the last exponent
//! non-negative.

use nalgebra::{ClosedAddAssign, ClosedMulAssign, ClosedSubAssign, DMatrix, Scalar};
use num_traits::{One, Zero};

use crate::coeffs::theta;
use crate::{Error, Result};

/// Element types the expansion runs over: complex floats, exact rationals, integers.
pub trait Ring: Scalar + Zero + One + ClosedAddAssign + ClosedMulAssign + ClosedSubAssign {}

impl<T: Scalar + Zero + One + ClosedAddAssign + ClosedMulAssign + ClosedSubAssign> Ring for T {}

/// Where the trailing power of `A` sits in each word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Layout {
    /// `(prod_i A^{k_i} B) A^{n-l-sum k}`.
    #[default]
    Forward,
    /// `(prod_{i<l} A^{k_i} B) A^{n-l-sum k} B A^{k_l}`, the relabelled form
    /// with the last free exponent moved behind the final `B`.
    Symmetric,
}

/// Hard caps on the brute-force enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationLimits {
    pub max_power: usize,
    pub max_dim: usize,
}

impl Default for EnumerationLimits {
    fn default() -> Self {
        Self {
            max_power: 12,
            max_dim: 8,
        }
    }
}

fn check_pair<T: Ring>(a: &DMatrix<T>, b: &DMatrix<T>, n: i64) -> Result<usize> {
    if !a.is_square() || !b.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "operators must be square, got {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "A is {:?} but B is {:?}",
            a.shape(),
            b.shape()
        )));
    }
    usize::try_from(n)
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Error::InvalidArgument(format!("power n = {n} must be at least 1")))
}

fn powers<T: Ring>(a: &DMatrix<T>, n: usize) -> Vec<DMatrix<T>> {
    let dim = a.nrows();
    let mut out = Vec::with_capacity(n + 1);
    out.push(DMatrix::identity(dim, dim));
    for i in 1..=n {
        out.push(&out[i - 1] * a);
    }
    out
}

/// `f^n(A, B)` by enumerating every word.
pub fn expand_f<T: Ring>(
    a: &DMatrix<T>,
    b: &DMatrix<T>,
    n: i64,
    layout: Layout,
    limits: EnumerationLimits,
) -> Result<DMatrix<T>> {
    let n = check_pair(a, b, n)?;
    if n > limits.max_power {
        return Err(Error::Budget {
            what: "binomial enumeration power",
            needed: n as u128,
            limit: limits.max_power as u128,
        });
    }
    if a.nrows() > limits.max_dim {
        return Err(Error::Budget {
            what: "binomial enumeration dimension",
            needed: a.nrows() as u128,
            limit: limits.max_dim as u128,
        });
    }
    let dim = a.nrows();
    let pa = powers(a, n);
    let mut total = DMatrix::zeros(dim, dim);
    for l in 1..=n {
        let span = n - l;
        let mut ks = vec![0usize; l];
        'odometer: loop {
            let used: usize = ks.iter().sum();
            if theta(span as i64 - used as i64) == 1 {
                let rest = span - used;
                let word = match layout {
                    Layout::Forward => {
                        let mut w = pa[rest].clone();
                        for &k in ks.iter().rev() {
                            w = &pa[k] * (b * w);
                        }
                        w
                    }
                    Layout::Symmetric => {
                        let mut w = &pa[rest] * (b * &pa[ks[l - 1]]);
                        for &k in ks[..l - 1].iter().rev() {
                            w = &pa[k] * (b * w);
                        }
                        w
                    }
                };
                total += word;
            }
            let mut pos = l;
            loop {
                if pos == 0 {
                    break 'odometer;
                }
                pos -= 1;
                if ks[pos] < span {
                    ks[pos] += 1;
                    break;
                }
                ks[pos] = 0;
            }
        }
    }
    Ok(total)
}

/// `f^n(A, B)` from `f^1 = B`, `f^{m+1} = B A^m + (A+B) f^m`.
pub fn expand_f_rec<T: Ring>(a: &DMatrix<T>, b: &DMatrix<T>, n: i64) -> Result<DMatrix<T>> {
    let n = check_pair(a, b, n)?;
    let sum = a + b;
    let mut a_pow = a.clone();
    let mut f = b.clone();
    for _ in 1..n {
        f = b * &a_pow + &sum * f;
        a_pow = &a_pow * a;
    }
    Ok(f)
}

/// `(A+B)^n - A^n` by direct powering.
pub fn binomial_remainder<T: Ring>(a: &DMatrix<T>, b: &DMatrix<T>, n: i64) -> Result<DMatrix<T>> {
    let n = check_pair(a, b, n)?;
    let sum = a + b;
    let lhs = powers(&sum, n).pop().unwrap();
    let rhs = powers(a, n).pop().unwrap();
    Ok(lhs - rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{max_abs_diff, random_complex_matrix, rng, spectral_norm};
    use crate::CMatrix;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn int(rows: &[&[i64]]) -> DMatrix<i64> {
        let n = rows.len();
        DMatrix::from_fn(n, n, |i, j| rows[i][j])
    }

    #[test]
    fn low_orders() {
        let a = int(&[&[1, 2], &[3, 4]]);
        let b = int(&[&[0, -1], &[5, 2]]);
        let lim = EnumerationLimits::default();
        assert_eq!(expand_f(&a, &b, 1, Layout::Forward, lim).unwrap(), b);
        let f2 = &a * &b + &b * (&a + &b);
        assert_eq!(expand_f(&a, &b, 2, Layout::Forward, lim).unwrap(), f2);
        assert_eq!(expand_f_rec(&a, &b, 1).unwrap(), b);
    }

    #[test]
    fn nilpotent_pair_squares_to_identity() {
        let a = int(&[&[0, 1], &[0, 0]]);
        let b = int(&[&[0, 0], &[1, 0]]);
        let f = expand_f(&a, &b, 2, Layout::Forward, EnumerationLimits::default()).unwrap();
        assert_eq!(f, DMatrix::identity(2, 2));
    }

    #[test]
    fn zero_perturbation() {
        let a = int(&[&[1, 2, 0], &[0, 3, 1], &[4, 0, 1]]);
        let b = DMatrix::zeros(3, 3);
        for n in 1..6 {
            assert_eq!(
                expand_f(&a, &b, n, Layout::Forward, EnumerationLimits::default()).unwrap(),
                b
            );
            assert_eq!(expand_f_rec(&a, &b, n).unwrap(), b);
        }
    }

    #[test]
    fn errors() {
        let a = int(&[&[1, 2], &[3, 4]]);
        let b3 = DMatrix::<i64>::zeros(3, 3);
        let lim = EnumerationLimits::default();
        assert!(matches!(
            expand_f(&a, &b3, 2, Layout::Forward, lim),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            expand_f(&a, &a, 0, Layout::Forward, lim),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            expand_f_rec(&a, &a, -2),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            expand_f(&a, &a, 13, Layout::Forward, lim),
            Err(Error::Budget { .. })
        ));
        let rect = DMatrix::<i64>::zeros(2, 3);
        assert!(matches!(
            expand_f_rec(&rect, &rect, 2),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn complex_cross_implementation() {
        let mut r = rng(11);
        let a = random_complex_matrix(&mut r, 3, 1.0);
        let b = random_complex_matrix(&mut r, 3, 1.0);
        let lim = EnumerationLimits::default();
        let enumerated = expand_f(&a, &b, 3, Layout::Forward, lim).unwrap();
        let rec = expand_f_rec(&a, &b, 3).unwrap();
        assert!(max_abs_diff(&enumerated, &rec) < 1e-13);
        for n in 1..=8 {
            let f = expand_f(&a, &b, n, Layout::Forward, lim).unwrap();
            let g = expand_f(&a, &b, n, Layout::Symmetric, lim).unwrap();
            let rem = binomial_remainder(&a, &b, n).unwrap();
            let scale = spectral_norm(&(&a + &b)).powi(n as i32);
            assert!(max_abs_diff(&f, &rem) <= 1e-10 * scale);
            assert!(max_abs_diff(&f, &g) <= 1e-12 * scale);
        }
    }

    #[test]
    fn commuting_pair_gives_classical_binomial() {
        // B = p(A) commutes with A
        let mut r = rng(5);
        let a: CMatrix = random_complex_matrix(&mut r, 4, 0.7);
        let b = &a * &a * Complex64::new(0.3, 0.1) + &a * Complex64::new(-0.5, 0.0);
        for n in 1..=7i64 {
            let f = expand_f(&a, &b, n, Layout::Forward, EnumerationLimits::default()).unwrap();
            let mut classic = CMatrix::zeros(4, 4);
            let mut binom = 1.0;
            for k in 1..=n {
                binom = binom * (n - k + 1) as f64 / k as f64;
                let term = a.pow((n - k) as u32) * b.pow(k as u32);
                classic += term * Complex64::new(binom, 0.0);
            }
            let scale = spectral_norm(&(&a + &b)).powi(n as i32).max(1.0);
            assert!(max_abs_diff(&f, &classic) <= 1e-11 * scale, "n = {n}");
        }
    }

    fn small_int_matrix(dim: usize) -> impl Strategy<Value = DMatrix<i64>> {
        proptest::collection::vec(-3i64..=3, dim * dim)
            .prop_map(move |v| DMatrix::from_row_slice(dim, dim, &v))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn exact_identity_over_integers(
            (a, b) in (1usize..=4).prop_flat_map(|d| (small_int_matrix(d), small_int_matrix(d))),
            n in 1i64..=6,
        ) {
            let lim = EnumerationLimits::default();
            let f = expand_f(&a, &b, n, Layout::Forward, lim).unwrap();
            prop_assert_eq!(&f, &binomial_remainder(&a, &b, n).unwrap());
            prop_assert_eq!(&f, &expand_f_rec(&a, &b, n).unwrap());
            prop_assert_eq!(&f, &expand_f(&a, &b, n, Layout::Symmetric, lim).unwrap());
        }
    }
}
