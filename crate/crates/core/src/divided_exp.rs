//! Divided differences of `g(x) = e^{-ixt}` over real nodes.
//!
//! The bracket `sum_i (-1)^{i-1} e^{-iE_i t} / d_i` attached to each path is
//! `g[E_1, ..., E_{l+1}]`. The explicit sum is exact for well separated nodes
//! but cancels catastrophically as nodes approach each other, and is undefined
//! when they coincide. This module evaluates the continuous extension:
//!
//! - nodes within the clustering tolerance are merged into one node of higher
//!   multiplicity (the confluent divided difference, which brings in
//!   derivatives of `g`);
//! - the confluent value is the `(1, l+1)` entry of `g(Z)` for the bidiagonal
//!   matrix `Z` with the nodes on the diagonal and ones above it, or, when
//!   `spread * |t| < 1`, a Taylor series in the complete homogeneous
//!   polynomials of the centred nodes.

use num_complex::Complex64;

use crate::coeffs::{Denominators, EnergyVector};
use crate::expm::expm;
use crate::scalar::Field;
use crate::{CMatrix, Error, Result};

/// Nodes with multiplicities; total multiplicity is `l + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteredSpectrum {
    nodes: Vec<(f64, usize)>,
    tolerance: f64,
}

impl ClusteredSpectrum {
    /// Validates that multiplicities are positive, the total is at least 1 and
    /// distinct nodes are separated beyond `tolerance`.
    pub fn new(nodes: Vec<(f64, usize)>, tolerance: f64) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidArgument("spectrum has no nodes".into()));
        }
        if tolerance.is_nan() || tolerance <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "cluster tolerance must be positive, got {tolerance}"
            )));
        }
        for (i, &(e, m)) in nodes.iter().enumerate() {
            if m == 0 || !e.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "node {i} has energy {e} and multiplicity {m}"
                )));
            }
            for (j, &(f, _)) in nodes.iter().enumerate().skip(i + 1) {
                if e.coincides(&f, tolerance) {
                    return Err(Error::Degenerate {
                        first: i,
                        second: j,
                        value: e,
                    });
                }
            }
        }
        Ok(Self { nodes, tolerance })
    }

    pub fn nodes(&self) -> &[(f64, usize)] {
        &self.nodes
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// `l`, the total multiplicity minus one.
    pub fn order(&self) -> usize {
        self.nodes.iter().map(|&(_, m)| m).sum::<usize>() - 1
    }

    pub fn is_simple(&self) -> bool {
        self.nodes.iter().all(|&(_, m)| m == 1)
    }

    /// Node energies repeated by multiplicity.
    pub fn expanded(&self) -> Vec<f64> {
        self.nodes
            .iter()
            .flat_map(|&(e, m)| std::iter::repeat_n(e, m))
            .collect()
    }
}

/// Single-linkage clustering of the sorted energies under the relative rule
/// `|a - b| < tol * max(1, |a|, |b|)`; each cluster becomes its mean.
pub fn cluster(e: &EnergyVector<f64>, tol: f64) -> ClusteredSpectrum {
    cluster_values(e.values(), tol)
}

pub(crate) fn cluster_values(values: &[f64], tol: f64) -> ClusteredSpectrum {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut nodes = Vec::new();
    let mut members: Vec<f64> = Vec::new();
    for &x in &sorted {
        if let Some(&last) = members.last() {
            if !last.coincides(&x, tol) {
                nodes.push((
                    members.iter().sum::<f64>() / members.len() as f64,
                    members.len(),
                ));
                members.clear();
            }
        }
        members.push(x);
    }
    nodes.push((
        members.iter().sum::<f64>() / members.len() as f64,
        members.len(),
    ));
    ClusteredSpectrum {
        nodes,
        tolerance: tol,
    }
}

/// Explicit sum `sum_i (-1)^{i-1} e^{-iE_i t} / d_i` for pairwise-distinct nodes.
pub fn phase_factor(e: &EnergyVector<f64>, t: f64, tol: f64) -> Result<Complex64> {
    if let Some((i, j)) = e.first_coincidence(tol) {
        return Err(Error::Degenerate {
            first: i,
            second: j,
            value: e.values()[i],
        });
    }
    Ok(distinct_phase(e, t))
}

/// The raw alternating sum, with no conditioning check. Loses accuracy as
/// nodes approach each other.
pub fn explicit_phase_sum(e: &EnergyVector<f64>, t: f64) -> Complex64 {
    phase_sum(e.values(), &alternating_weights(e), t)
}

/// Explicit sum when its predicted cancellation error is small against the
/// magnitude bound `|t|^l / l!`, the stable route otherwise.
fn distinct_phase(e: &EnergyVector<f64>, t: f64) -> Complex64 {
    let l = e.order();
    if t == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let weights = alternating_weights(e);
    let weight_mass: f64 = weights.iter().map(|w| w.abs()).sum();
    if 4.0 * f64::EPSILON * weight_mass <= EXPLICIT_SUM_MAX_REL_ERROR * magnitude_bound(l, t) {
        phase_sum(e.values(), &weights, t)
    } else {
        divided_difference_exp(e.values(), t)
    }
}

/// `(-1)^{i-1} / d_i`, equivalently `1 / prod_{j != i} (E_i - E_j)`.
fn alternating_weights(e: &EnergyVector<f64>) -> Vec<f64> {
    Denominators::of(e)
        .values()
        .iter()
        .enumerate()
        .map(|(i, d)| if i % 2 == 0 { 1.0 / d } else { -1.0 / d })
        .collect()
}

fn phase_sum(values: &[f64], weights: &[f64], t: f64) -> Complex64 {
    let mut re = crate::scalar::NeumaierSum::default();
    let mut im = crate::scalar::NeumaierSum::default();
    for (&e, &w) in values.iter().zip(weights) {
        let (s, c) = (-e * t).sin_cos();
        re.add(w * c);
        im.add(w * s);
    }
    Complex64::new(re.value(), im.value())
}

/// Confluent divided difference of `e^{-ixt}` over the clustered nodes.
pub fn phase_factor_confluent(s: &ClusteredSpectrum, t: f64) -> Complex64 {
    divided_difference_exp(&s.expanded(), t)
}

/// Divided difference of `e^{-ixt}` over arbitrary real nodes (repeats allowed),
/// without any clustering.
pub fn divided_difference_exp(nodes: &[f64], t: f64) -> Complex64 {
    assert!(
        !nodes.is_empty(),
        "divided difference needs at least one node"
    );
    let l = nodes.len() - 1;
    if l == 0 {
        return Complex64::from_polar(1.0, -nodes[0] * t);
    }
    if t == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let centre = nodes.iter().sum::<f64>() / nodes.len() as f64;
    let shifted: Vec<f64> = nodes.iter().map(|x| x - centre).collect();
    let spread = shifted.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    let inner = if spread * t.abs() < 1.0 {
        taylor_route(&shifted, t)
    } else {
        bidiagonal_route(&shifted, t)
    };
    Complex64::from_polar(1.0, -centre * t) * inner
}

/// `sum_{n >= l} (-it)^n / n! * h_{n-l}(y)`.
fn taylor_route(y: &[f64], t: f64) -> Complex64 {
    let l = y.len() - 1;
    let mut coeff = Complex64::new(1.0, 0.0);
    for n in 1..=l {
        coeff *= Complex64::new(0.0, -t) / n as f64;
    }
    // column[m] = h_k(y_1..y_{m+1}) for the current k
    let mut column = vec![1.0; y.len()];
    let mut sum = coeff;
    let mut small_run = 0;
    for k in 1..400 {
        let n = l + k;
        coeff *= Complex64::new(0.0, -t) / n as f64;
        column[0] *= y[0];
        for m in 1..y.len() {
            column[m] = column[m - 1] + y[m] * column[m];
        }
        let term = coeff * column[l];
        sum += term;
        if term.norm() <= f64::EPSILON * 1e-2 * sum.norm() {
            small_run += 1;
            if small_run >= 3 {
                break;
            }
        } else {
            small_run = 0;
        }
    }
    sum
}

fn bidiagonal_route(y: &[f64], t: f64) -> Complex64 {
    let m = y.len();
    let mut z = CMatrix::zeros(m, m);
    let scale = Complex64::new(0.0, -t);
    for i in 0..m {
        z[(i, i)] = scale * y[i];
        if i + 1 < m {
            z[(i, i + 1)] = scale;
        }
    }
    // entry (0, m-1) of exp(-iZt) picks up (-it)^{m-1} from the superdiagonal
    // scaling, which is exactly the divided difference of e^{-ixt}.
    expm(&z)[(0, m - 1)]
}

/// Largest tolerated predicted relative cancellation error before the explicit
/// sum is abandoned for the stable route.
const EXPLICIT_SUM_MAX_REL_ERROR: f64 = 1e-12;

/// Path-level evaluator: cluster the path energies and use the confluent
/// value when any node repeats, otherwise [`phase_factor`].
pub fn path_phase(energies: &[f64], t: f64, tol: f64) -> Complex64 {
    if energies.len() == 1 {
        return Complex64::from_polar(1.0, -energies[0] * t);
    }
    if t == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let clustered = cluster_values(energies, tol);
    if !clustered.is_simple() {
        return phase_factor_confluent(&clustered, t);
    }
    let ev = EnergyVector::new(energies.to_vec()).expect("path has at least two finite energies");
    distinct_phase(&ev, t)
}

/// `|t|^l / l!`, the bound on any divided difference of `e^{-ixt}` over `l+1` real nodes.
pub fn magnitude_bound(l: usize, t: f64) -> f64 {
    (1..=l).fold(1.0, |acc, k| acc * t.abs() / k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::identity_eval;
    use crate::testing::rng;
    use crate::DEFAULT_DEGENERACY_TOL as TOL;
    use rand::Rng;
    use std::f64::consts::PI;

    fn ev(v: &[f64]) -> EnergyVector<f64> {
        EnergyVector::new(v.to_vec()).unwrap()
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn explicit_sum_examples() {
        assert_eq!(
            phase_factor(&ev(&[0.4, -1.1]), 0.0, TOL).unwrap(),
            Complex64::new(0.0, 0.0)
        );
        let v = phase_factor(&ev(&[1.0, 0.0]), PI, TOL).unwrap();
        assert!(close(v, Complex64::new(-2.0, 0.0), 1e-15));
        assert!(matches!(
            phase_factor(&ev(&[1.0, 1.0 + 1e-12]), 1.0, TOL),
            Err(Error::Degenerate { .. })
        ));
    }

    #[test]
    fn clustering_examples() {
        let s = cluster(&ev(&[1.0, 2.0]), 1e-9);
        assert_eq!(s.nodes(), &[(1.0, 1), (2.0, 1)]);
        let s = cluster(&ev(&[1.0, 1.0 + 1e-12, 3.0]), 1e-9);
        assert_eq!(s.nodes().len(), 2);
        assert!((s.nodes()[0].0 - 1.0).abs() < 1e-12);
        assert_eq!(s.nodes()[0].1, 2);
        assert_eq!(s.nodes()[1], (3.0, 1));
        let s = cluster(&ev(&[0.0, 0.0, 0.0]), 1e-9);
        assert_eq!(s.nodes(), &[(0.0, 3)]);
        assert_eq!(s.order(), 2);
        // order independence
        let a = cluster(&ev(&[3.0, 1.0 + 1e-12, 1.0]), 1e-9);
        let b = cluster(&ev(&[1.0, 3.0, 1.0 + 1e-12]), 1e-9);
        assert_eq!(a, b);
    }

    #[test]
    fn spectrum_validation() {
        assert!(ClusteredSpectrum::new(vec![(1.0, 0)], 1e-9).is_err());
        assert!(ClusteredSpectrum::new(vec![(1.0, 1), (1.0 + 1e-13, 1)], 1e-9).is_err());
        assert!(ClusteredSpectrum::new(vec![(1.0, 2)], -1.0).is_err());
        assert!(ClusteredSpectrum::new(vec![], 1e-9).is_err());
    }

    #[test]
    fn double_node() {
        for &(e, t) in &[(0.0, 0.7), (1.3, 2.0), (-4.0, 11.0), (2.5, 0.01)] {
            let s = ClusteredSpectrum::new(vec![(e, 2)], TOL).unwrap();
            let expect = Complex64::new(0.0, -t) * Complex64::from_polar(1.0, -e * t);
            assert!(
                close(phase_factor_confluent(&s, t), expect, 1e-13),
                "{e} {t}"
            );
        }
    }

    #[test]
    fn fully_confluent_node() {
        for m in 0..6usize {
            for &(e, t) in &[(0.3, 0.5), (-1.2, 3.0), (2.0, 9.0)] {
                let s = ClusteredSpectrum::new(vec![(e, m + 1)], TOL).unwrap();
                let fact: f64 = (1..=m).map(|k| k as f64).product();
                let expect = Complex64::new(0.0, -t).powu(m as u32)
                    * Complex64::from_polar(1.0, -e * t)
                    / fact;
                let got = phase_factor_confluent(&s, t);
                assert!(
                    close(got, expect, 1e-12 * expect.norm().max(1.0)),
                    "m={m} t={t}: {got} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn confluent_matches_explicit_for_distinct_nodes() {
        let mut r = rng(21);
        for _ in 0..200 {
            let n = r.random_range(2..6);
            let e: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..2.0)).collect();
            let ev = ev(&e);
            if ev.first_coincidence(1e-2).is_some() {
                continue;
            }
            let t = r.random_range(0.0..6.0);
            let s = cluster(&ev, TOL);
            let a = phase_factor(&ev, t, TOL).unwrap();
            let b = phase_factor_confluent(&s, t);
            let tol = 1e-12 * (1..n).map(|k| k as f64).product::<f64>().max(1.0) * 1e3;
            assert!(close(a, b, tol.min(1e-9)), "{e:?} t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn both_confluent_routes_agree() {
        let mut r = rng(8);
        for _ in 0..100 {
            let n = r.random_range(2..7);
            let y: Vec<f64> = (0..n).map(|_| r.random_range(-0.3..0.3)).collect();
            let t = r.random_range(0.1..3.0);
            let a = taylor_route(&y, t);
            let b = bidiagonal_route(&y, t);
            assert!(close(a, b, 1e-13), "{y:?} {t}");
        }
    }

    #[test]
    fn continuity_across_threshold() {
        let e1 = 0.8;
        let tol = TOL;
        for k in 0..=20 {
            let delta = tol / 10.0 * 100f64.powf(k as f64 / 20.0);
            for j in 0..=10 {
                let t = j as f64;
                let e = ev(&[e1, e1 + delta]);
                let stable = phase_factor_confluent(&cluster(&e, tol), t);
                // the explicit sum is only defined above the threshold
                if let Ok(explicit) = phase_factor(&e, t, tol) {
                    assert!(close(explicit, stable, 1e-7), "delta={delta} t={t}");
                }
                assert!(close(path_phase(e.values(), t, tol), stable, 1e-7));
            }
        }
    }

    #[test]
    fn bounded_by_mean_value_form() {
        let mut r = rng(99);
        for _ in 0..300 {
            let n = r.random_range(1..7);
            let e: Vec<f64> = (0..n).map(|_| r.random_range(-3.0..3.0)).collect();
            let t = r.random_range(-8.0..8.0);
            let v = path_phase(&e, t, TOL);
            assert!(v.norm() <= magnitude_bound(n - 1, t) * (1.0 + 1e-9) + 1e-14);
        }
    }

    #[test]
    fn derivatives_at_zero_reproduce_identity() {
        // d^K/dt^K at t=0 equals (-i)^K sum_i (-1)^{i-1} E_i^K / d_i
        let e = ev(&[0.9, -0.4, 0.25]);
        let h = 1e-2;
        let f = |t: f64| phase_factor(&e, t, TOL).unwrap();
        let second = (f(h) - f(0.0) * 2.0 + f(-h)) / (h * h);
        let expect = Complex64::new(0.0, -1.0).powu(2) * identity_eval(&e, 2, TOL).unwrap();
        assert!(close(second, expect, 1e-4));
    }

    #[test]
    fn near_degenerate_path_uses_stable_route() {
        // three levels spaced 1e-8 apart: explicit sum would lose ~8 digits per gap
        let e = [0.5, 0.5 + 1e-8, 0.5 + 2e-8, 0.5 + 3e-8];
        let t = 0.1;
        let v = path_phase(&e, t, TOL);
        // spread * t ~ 3e-9, so the centred fully-confluent value is exact to ~1e-17 relative
        let centre = 0.5 + 1.5e-8;
        let limit = Complex64::new(0.0, -t).powu(3) * Complex64::from_polar(1.0, -centre * t) / 6.0;
        assert!(close(v, limit, 1e-12 * limit.norm()));
        let raw = explicit_phase_sum(&ev(&e), t);
        assert!((raw - limit).norm() > 1e-6 * limit.norm());
    }
}
