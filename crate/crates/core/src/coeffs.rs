//! Coefficients `C_l^n(E)` of the path expansion.
//!
//! For an energy vector `E = (E_1, ..., E_{l+1})`, `C_l^n` is the complete
//! homogeneous symmetric polynomial of degree `n - l` in the energies, i.e. the
//! divided difference of `x^n` over the nodes. Three routes are provided:
//!
//! - [`coeff_def`]: direct enumeration of the exponent tuples (the oracle);
//! - [`coeff_rec`]: the recurrence `C_l^n = sum_k C_{l-1}^{n-k-1} E_{l+1}^k`
//!   started from the geometric-series form of `C_1^n`;
//! - [`coeff_closed`]: `sum_i (-1)^{i-1} E_i^n / d_i`.
//!
//! [`coeff_confluent`] is the division-free continuous extension used when
//! energies repeat.

use crate::scalar::Field;
use crate::{Error, Result};

/// Step function with `theta(0) = 1`.
pub fn theta(x: i64) -> u8 {
    u8::from(x >= 0)
}

/// Strict step function with `theta_strict(0) = 0`.
pub fn theta_strict(x: i64) -> u8 {
    u8::from(x > 0)
}

/// Ordered energies `(E_1, ..., E_{l+1})` along an index path.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyVector<T>(Vec<T>);

impl<T: Field> EnergyVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "energy vector needs at least 2 entries, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite_value()) {
            return Err(Error::InvalidArgument(format!("energy {i} is not finite")));
        }
        Ok(Self(values))
    }

    /// The order `l` (entry count minus one).
    pub fn order(&self) -> usize {
        self.0.len() - 1
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }

    /// The leading `l` entries, `E[g, l-1]`. `None` when that would leave
    /// fewer than two entries.
    pub fn truncated(&self) -> Option<Self> {
        (self.0.len() > 2).then(|| Self(self.0[..self.0.len() - 1].to_vec()))
    }

    /// First pair of positions whose energies coincide under `tol`.
    pub fn first_coincidence(&self, tol: f64) -> Option<(usize, usize)> {
        let v = &self.0;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                if v[i].coincides(&v[j], tol) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    fn degenerate_error(&self, tol: f64) -> Option<Error> {
        self.first_coincidence(tol).map(|(i, j)| Error::Degenerate {
            first: i,
            second: j,
            value: self.0[i].to_f64_lossy(),
        })
    }
}

/// Products `d_i = prod_{j<i} (E_j - E_i) * prod_{k>i} (E_i - E_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Denominators<T>(Vec<T>);

impl<T: Field> Denominators<T> {
    pub fn of(e: &EnergyVector<T>) -> Self {
        let v = e.values();
        let d = (0..v.len())
            .map(|i| {
                let mut p = T::one();
                for ej in &v[..i] {
                    p = p * (ej.clone() - v[i].clone());
                }
                for ek in &v[i + 1..] {
                    p = p * (v[i].clone() - ek.clone());
                }
                p
            })
            .collect();
        Self(d)
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }
}

fn power_table<T: Field>(values: &[T], max_exp: usize) -> Vec<Vec<T>> {
    values
        .iter()
        .map(|x| {
            let mut row = Vec::with_capacity(max_exp + 1);
            let mut p = T::one();
            for _ in 0..=max_exp {
                row.push(p.clone());
                p = p * x.clone();
            }
            row
        })
        .collect()
}

fn check_power(n: i64) -> Result<usize> {
    usize::try_from(n).map_err(|_| Error::InvalidArgument(format!("power n = {n} is negative")))
}

/// `C_l^n` by enumerating every `(k_1, ..., k_l)` with `0 <= k_i <= n-l` and
/// `sum k_i + l <= n`, in lexicographic order.
pub fn coeff_def<T: Field>(e: &EnergyVector<T>, n: i64) -> Result<T> {
    let n = check_power(n)?;
    let l = e.order();
    if n < l {
        return Ok(T::zero());
    }
    let span = n - l;
    let v = e.values();
    let pw = power_table(v, span);

    let mut ks = vec![0usize; l];
    let mut terms = Vec::new();
    loop {
        let used: usize = ks.iter().sum();
        if theta(span as i64 - used as i64) == 1 {
            let mut term = pw[l][span - used].clone();
            for (i, &k) in ks.iter().enumerate() {
                term = pw[i][k].clone() * term;
            }
            terms.push(term);
        }
        // odometer: last index fastest
        let mut pos = l;
        loop {
            if pos == 0 {
                return Ok(T::sum_ordered(terms));
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

/// `C_l^n` from the recurrence over the last energy, seeded with
/// `C_1^m = (E_1^m - E_2^m) / (E_1 - E_2)`.
///
/// Only `E_1` and `E_2` are ever divided by, so only their coincidence is an
/// error.
pub fn coeff_rec<T: Field>(e: &EnergyVector<T>, n: i64, tol: f64) -> Result<T> {
    let n = check_power(n)?;
    let l = e.order();
    if n < l {
        return Ok(T::zero());
    }
    let v = e.values();
    if v[0].coincides(&v[1], tol) {
        return Err(Error::Degenerate {
            first: 0,
            second: 1,
            value: v[0].to_f64_lossy(),
        });
    }
    let pw = power_table(v, n);
    let gap = v[0].clone() - v[1].clone();

    // table[m] = C_j^m for the current j
    let mut table: Vec<T> = (0..=n)
        .map(|m| (pw[0][m].clone() - pw[1][m].clone()) / gap.clone())
        .collect();
    for j in 2..=l {
        let next: Vec<T> = (0..=n)
            .map(|m| {
                if m < j {
                    return T::zero();
                }
                T::sum_ordered((0..=m - j).map(|k| table[m - k - 1].clone() * pw[j][k].clone()))
            })
            .collect();
        table = next;
    }
    Ok(table[n].clone())
}

/// `sum_i (-1)^{i-1} E_i^n / d_i` over pairwise-distinct energies.
///
/// Valid for every `n >= 0`; it vanishes for `n < l` and equals 1 at `n = l`.
pub fn coeff_closed<T: Field>(e: &EnergyVector<T>, n: i64, tol: f64) -> Result<T> {
    let n = check_power(n)?;
    if let Some(err) = e.degenerate_error(tol) {
        return Err(err);
    }
    let d = Denominators::of(e);
    let terms = e
        .values()
        .iter()
        .zip(d.values())
        .enumerate()
        .map(|(i, (x, di))| {
            let term = x.pow(n as u32) / di.clone();
            if i % 2 == 0 {
                term
            } else {
                -term
            }
        });
    Ok(T::sum_ordered(terms))
}

/// Left-hand side of the alternating identity: `sum_i (-1)^{i-1} E_i^K / d_i`.
/// It is 0 for `0 <= K < l` and 1 for `K = l`.
pub fn identity_eval<T: Field>(e: &EnergyVector<T>, k: u32, tol: f64) -> Result<T> {
    coeff_closed(e, i64::from(k), tol)
}

/// Division-free `C_l^n`, valid for repeated energies: the complete homogeneous
/// polynomial `h_{n-l}(E_1, ..., E_{l+1})`, built with
/// `h_k(x_1..x_m) = h_k(x_1..x_{m-1}) + x_m h_{k-1}(x_1..x_m)`.
pub fn coeff_confluent<T: Field>(e: &EnergyVector<T>, n: u32) -> T {
    let l = e.order();
    let n = n as usize;
    if n < l {
        return T::zero();
    }
    let deg = n - l;
    let v = e.values();
    let mut h: Vec<T> = power_table(&v[..1], deg).remove(0);
    for x in &v[1..] {
        for k in 1..=deg {
            h[k] = h[k].clone() + x.clone() * h[k - 1].clone();
        }
    }
    h[deg].clone()
}

/// `C_l^n` for arbitrary energies: closed form when the nodes are pairwise
/// distinct under `tol`, the confluent form otherwise.
pub fn coeff_auto<T: Field>(e: &EnergyVector<T>, n: u32, tol: f64) -> T {
    match coeff_closed(e, i64::from(n), tol) {
        Ok(c) => c,
        Err(_) => coeff_confluent(e, n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use crate::DEFAULT_DEGENERACY_TOL as TOL;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn ev(v: &[f64]) -> EnergyVector<f64> {
        EnergyVector::new(v.to_vec()).unwrap()
    }

    fn rv(v: &[i64]) -> EnergyVector<BigRational> {
        EnergyVector::new(v.iter().map(|&x| ratio(x, 1)).collect()).unwrap()
    }

    #[test]
    fn step_functions() {
        assert_eq!(theta(0), 1);
        assert_eq!(theta(-1), 0);
        assert_eq!(theta(5), 1);
        assert_eq!(theta_strict(0), 0);
        assert_eq!(theta_strict(1), 1);
        assert_eq!(theta_strict(-3), 0);
    }

    #[test]
    fn energy_vector_validation() {
        assert!(EnergyVector::new(vec![1.0]).is_err());
        assert!(EnergyVector::new(vec![1.0, f64::NAN]).is_err());
        assert_eq!(ev(&[1.0, 2.0, 3.0]).order(), 2);
    }

    #[test]
    fn denominators_three_nodes() {
        let d = Denominators::of(&rv(&[3, 2, 1]));
        // d1 = (3-2)(3-1), d2 = (3-2)(2-1), d3 = (3-1)(2-1)
        assert_eq!(d.values(), &[ratio(2, 1), ratio(1, 1), ratio(2, 1)]);
    }

    #[test]
    fn definition_examples() {
        assert_eq!(coeff_def(&ev(&[2.0, 1.0]), 3).unwrap(), 7.0);
        assert_eq!(coeff_def(&ev(&[0.3, -1.7, 9.0]), 2).unwrap(), 1.0);
        assert_eq!(coeff_def(&ev(&[3.0, 2.0, 1.0]), 3).unwrap(), 6.0);
        assert_eq!(coeff_def(&ev(&[3.0, 2.0, 1.0]), 1).unwrap(), 0.0);
        assert!(coeff_def(&ev(&[3.0, 2.0]), -1).is_err());
    }

    #[test]
    fn recurrence_examples() {
        assert_eq!(coeff_rec(&rv(&[2, 1]), 3, TOL).unwrap(), ratio(7, 1));
        assert_eq!(coeff_rec(&rv(&[3, 2, 1]), 3, TOL).unwrap(), ratio(6, 1));
        assert_eq!(coeff_rec(&rv(&[5, 4]), 1, TOL).unwrap(), ratio(1, 1));
        assert!(matches!(
            coeff_rec(&ev(&[1.0, 1.0, 2.0]), 4, TOL),
            Err(Error::Degenerate {
                first: 0,
                second: 1,
                ..
            })
        ));
    }

    #[test]
    fn closed_examples() {
        let e = rv(&[3, 2, 1]);
        assert_eq!(coeff_closed(&e, 3, TOL).unwrap(), ratio(6, 1));
        assert_eq!(coeff_closed(&e, 2, TOL).unwrap(), ratio(1, 1));
        assert_eq!(coeff_closed(&e, 1, TOL).unwrap(), ratio(0, 1));
        assert!(matches!(
            coeff_closed(&ev(&[1.0, 2.0, 1.0]), 3, TOL),
            Err(Error::Degenerate {
                first: 0,
                second: 2,
                ..
            })
        ));
    }

    #[test]
    fn identity_two_nodes() {
        assert_eq!(identity_eval(&ev(&[7.0, 3.0]), 0, TOL).unwrap(), 0.0);
        assert_eq!(identity_eval(&ev(&[7.0, 3.0]), 1, TOL).unwrap(), 1.0);
    }

    #[test]
    fn identity_random_four_vector_float() {
        let e = ev(&[0.913, -0.271, 1.844, 0.052]);
        let r = identity_eval(&e, 2, TOL).unwrap();
        assert!(r.abs() < 1e-10, "{r}");
        let one = identity_eval(&e, 3, TOL).unwrap();
        assert!((one - 1.0).abs() < 1e-10, "{one}");
    }

    #[test]
    fn confluent_limit_of_first_order() {
        // C_1^n(E, E) = n E^{n-1}
        for n in 1..8u32 {
            let e = 1.3f64;
            let c = coeff_confluent(&ev(&[e, e]), n);
            let expect = n as f64 * e.powi(n as i32 - 1);
            assert!((c - expect).abs() < 1e-12 * expect.abs().max(1.0));
            let near = coeff_closed(&ev(&[e, e + 1e-7]), n as i64, TOL).unwrap();
            assert!(
                (near - c).abs() < 1e-5 * expect.abs().max(1.0),
                "{n}: {near} vs {c}"
            );
        }
        // confluent route sits below the threshold as well
        let close = ev(&[2.0, 2.0 + 1e-12]);
        assert!(coeff_closed(&close, 3, TOL).is_err());
        assert!((coeff_auto(&close, 3, TOL) - 12.0).abs() < 1e-8);
    }

    proptest! {
        #[test]
        fn three_routes_agree_exactly(
            raw in proptest::collection::btree_set(-40i64..40, 2..7),
            den in 1i64..7,
            n in 0i64..11,
        ) {
            let vals: Vec<BigRational> = raw.iter().map(|&x| ratio(x, den)).collect();
            let e = EnergyVector::new(vals).unwrap();
            let def = coeff_def(&e, n).unwrap();
            prop_assert_eq!(&def, &coeff_rec(&e, n, TOL).unwrap());
            prop_assert_eq!(&def, &coeff_closed(&e, n, TOL).unwrap());
            prop_assert_eq!(&def, &coeff_confluent(&e, n as u32));
        }

        #[test]
        fn difference_relations_exact(
            raw in proptest::collection::btree_set(-30i64..30, 2..6),
            k in 2i64..10,
        ) {
            let vals: Vec<BigRational> = raw.iter().map(|&x| ratio(x, 3)).collect();
            let e = EnergyVector::new(vals.clone()).unwrap();
            let l = e.order();
            let last = vals[l].clone();
            let lhs = coeff_closed(&e, k, TOL).unwrap() - last * coeff_closed(&e, k - 1, TOL).unwrap();
            let rhs = match e.truncated() {
                Some(prev) => coeff_closed(&prev, k - 1, TOL).unwrap(),
                None => Field::pow(&vals[0], (k - 1) as u32),
            };
            prop_assert_eq!(lhs, rhs);
        }
    }
}
