//! Periodic 1D lattice: kinetic energy `k^2 / 2m` as `H0`, a sampled
//! potential as `H1`, in the plane-wave basis.
//!
//! Grid points are `x_j = j L / N`, momenta `k_n = 2 pi n / L` for
//! `n = -N/2 .. N/2 - 1` (basis index `i = n + N/2`), and plane waves are
//! `<x|k> = e^{ikx} / sqrt(N)`. The coupling is
//! `H1[i, i'] = (1/N) sum_x V(x) e^{-i (k_i - k_i') x}`, which depends only on
//! `(n - n') mod N`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::dynamics::{evolve_state, SeriesOptions, StateVector};
use crate::expm::dense_exp;
use crate::propagator::{series_terms, sum_terms, SplitHamiltonian};
use crate::{CMatrix, CVector, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSystem {
    box_length: f64,
    mass: f64,
    potential: Vec<f64>,
}

impl LatticeSystem {
    /// The grid size is `potential.len()`, which must be even and at least 4.
    pub fn new(box_length: f64, mass: f64, potential: Vec<f64>) -> Result<Self> {
        let n = potential.len();
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "grid size must be even and at least 4, got {n}"
            )));
        }
        if !(box_length > 0.0 && box_length.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "box length must be positive, got {box_length}"
            )));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "mass must be positive, got {mass}"
            )));
        }
        if potential.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "potential has non-finite samples".into(),
            ));
        }
        Ok(Self {
            box_length,
            mass,
            potential,
        })
    }

    /// Free particle.
    pub fn free(n: usize, box_length: f64, mass: f64) -> Result<Self> {
        Self::new(box_length, mass, vec![0.0; n])
    }

    /// `V(x) = 2 v cos(2 pi harmonic x / L)`, coupling `k_n` to `k_{n +- harmonic}` with amplitude `v`.
    pub fn cosine(n: usize, box_length: f64, mass: f64, v: f64, harmonic: i64) -> Result<Self> {
        let potential = (0..n)
            .map(|j| 2.0 * v * (2.0 * PI * harmonic as f64 * j as f64 / n as f64).cos())
            .collect();
        Self::new(box_length, mass, potential)
    }

    pub fn grid_size(&self) -> usize {
        self.potential.len()
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn positions(&self) -> Vec<f64> {
        let n = self.grid_size();
        (0..n)
            .map(|j| j as f64 * self.box_length / n as f64)
            .collect()
    }

    /// Momentum integers `n` in basis order.
    pub fn momentum_indices(&self) -> Vec<i64> {
        let half = (self.grid_size() / 2) as i64;
        (-half..half).collect()
    }

    pub fn momenta(&self) -> Vec<f64> {
        self.momentum_indices()
            .into_iter()
            .map(|n| 2.0 * PI * n as f64 / self.box_length)
            .collect()
    }

    pub fn kinetic_energies(&self) -> Vec<f64> {
        self.momenta()
            .into_iter()
            .map(|k| k * k / (2.0 * self.mass))
            .collect()
    }

    fn fft(&self, inverse: bool) -> Arc<dyn Fft<f64>> {
        let mut planner = FftPlanner::new();
        if inverse {
            planner.plan_fft_inverse(self.grid_size())
        } else {
            planner.plan_fft_forward(self.grid_size())
        }
    }

    /// `(1/N) sum_x V(x) e^{-2 pi i m j / N}` for `m = 0..N`.
    ///
    /// Components below the transform's rounding level are set to exactly
    /// zero so that band-limited potentials give sparse couplings.
    pub fn potential_spectrum(&self) -> Vec<Complex64> {
        let n = self.grid_size();
        let mut buf: Vec<Complex64> = self
            .potential
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        self.fft(false).process(&mut buf);
        let vmax = self.potential.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let floor = 8.0 * f64::EPSILON * (n as f64).log2() * vmax;
        buf.iter()
            .map(|z| {
                let mut w = z / n as f64;
                if w.re.abs() <= floor {
                    w.re = 0.0;
                }
                if w.im.abs() <= floor {
                    w.im = 0.0;
                }
                w
            })
            .collect()
    }

    /// `<k|psi> = (1/sqrt N) sum_x e^{-ikx} psi(x)`, in basis order.
    pub fn to_momentum(&self, psi: &[Complex64]) -> Result<CVector> {
        let n = self.check_len(psi.len())?;
        let mut buf = psi.to_vec();
        self.fft(false).process(&mut buf);
        let scale = 1.0 / (n as f64).sqrt();
        Ok(CVector::from_iterator(
            n,
            (0..n).map(|i| buf[(i + n / 2) % n] * scale),
        ))
    }

    /// `psi(x) = (1/sqrt N) sum_k e^{ikx} <k|psi>`.
    pub fn to_position(&self, amplitudes: &CVector) -> Result<Vec<Complex64>> {
        let n = self.check_len(amplitudes.len())?;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (i, a) in amplitudes.iter().enumerate() {
            buf[(i + n / 2) % n] = *a;
        }
        self.fft(true).process(&mut buf);
        let scale = 1.0 / (n as f64).sqrt();
        Ok(buf.into_iter().map(|z| z * scale).collect())
    }

    fn check_len(&self, len: usize) -> Result<usize> {
        let n = self.grid_size();
        if len != n {
            return Err(Error::DimensionMismatch(format!(
                "lattice has {n} points but the wavefunction has {len}"
            )));
        }
        Ok(n)
    }

    /// `F[i, j] = <k_i|x_j> = e^{-i k_i x_j} / sqrt(N)`.
    pub fn fourier_matrix(&self) -> CMatrix {
        let n = self.grid_size();
        let ns = self.momentum_indices();
        let scale = 1.0 / (n as f64).sqrt();
        CMatrix::from_fn(n, n, |i, j| {
            let phase = -2.0 * PI * ((ns[i] * j as i64).rem_euclid(n as i64)) as f64 / n as f64;
            Complex64::from_polar(scale, phase)
        })
    }

    /// `F^dagger diag(E_k) F + diag(V)` on the position grid.
    pub fn position_hamiltonian(&self) -> CMatrix {
        let f = self.fourier_matrix();
        let kinetic = CMatrix::from_diagonal(&CVector::from_iterator(
            self.grid_size(),
            self.kinetic_energies()
                .into_iter()
                .map(|e| Complex64::new(e, 0.0)),
        ));
        let mut h = f.adjoint() * kinetic * &f;
        for (j, &v) in self.potential.iter().enumerate() {
            h[(j, j)] += v;
        }
        h
    }
}

/// Kinetic energies as `H0` and the Fourier-transformed potential as `H1`.
pub fn build_momentum_split(sys: &LatticeSystem) -> Result<SplitHamiltonian> {
    let n = sys.grid_size();
    let spectrum = sys.potential_spectrum();
    let ns = sys.momentum_indices();
    let h1 = CMatrix::from_fn(n, n, |i, j| {
        spectrum[(ns[i] - ns[j]).rem_euclid(n as i64) as usize]
    });
    SplitHamiltonian::new(sys.kinetic_energies(), h1)
}

/// Position-space wavefunction after time `t`, using the series truncated at `max_order`.
pub fn evolve_wavefunction(
    sys: &LatticeSystem,
    psi0: &[Complex64],
    max_order: usize,
    t: f64,
    opts: &SeriesOptions,
) -> Result<Vec<Complex64>> {
    let h = build_momentum_split(sys)?;
    let amplitudes = StateVector::unnormalized(sys.to_momentum(psi0)?)?;
    let evolved = evolve_state(&h, &amplitudes, max_order, t, opts)?;
    sys.to_position(evolved.amplitudes())
}

/// `exp(-iHt) psi0` on the position grid with the dense oracle.
pub fn evolve_wavefunction_exact(
    sys: &LatticeSystem,
    psi0: &[Complex64],
    t: f64,
) -> Result<Vec<Complex64>> {
    sys.check_len(psi0.len())?;
    let out = dense_exp(&sys.position_hamiltonian(), t) * CVector::from_column_slice(psi0);
    Ok(out.iter().copied().collect())
}

/// `<x|U_L(t)|x'> = sum_{k,k'} <x|k> U_L[k,k'] <k'|x'>`.
pub fn position_propagator(
    sys: &LatticeSystem,
    max_order: usize,
    t: f64,
    opts: &SeriesOptions,
) -> Result<CMatrix> {
    let h = build_momentum_split(sys)?;
    let terms = series_terms(&h, max_order, t, opts.evaluator, &opts.paths)?;
    let f = sys.fourier_matrix();
    Ok(f.adjoint() * sum_terms(&terms) * f)
}

/// `exp(-iHt)` for the position-space Hamiltonian.
pub fn position_propagator_exact(sys: &LatticeSystem, t: f64) -> CMatrix {
    dense_exp(&sys.position_hamiltonian(), t)
}

/// Normalized Gaussian packet centred at `x0` with width `sigma` and mean
/// momentum `k0`, wrapped periodically.
pub fn gaussian_packet(sys: &LatticeSystem, x0: f64, sigma: f64, k0: f64) -> Vec<Complex64> {
    let l = sys.box_length();
    let raw: Vec<Complex64> = sys
        .positions()
        .into_iter()
        .map(|x| {
            let d = (x - x0 + 0.5 * l).rem_euclid(l) - 0.5 * l;
            Complex64::from_polar((-d * d / (4.0 * sigma * sigma)).exp(), k0 * d)
        })
        .collect();
    let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    raw.into_iter().map(|z| z / norm).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagator::{term_matrix, Evaluator, PathOptions};
    use crate::testing::max_abs_diff;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn validation() {
        assert!(LatticeSystem::new(1.0, 1.0, vec![0.0; 5]).is_err());
        assert!(LatticeSystem::new(1.0, 1.0, vec![0.0; 2]).is_err());
        assert!(LatticeSystem::new(0.0, 1.0, vec![0.0; 4]).is_err());
        assert!(LatticeSystem::new(1.0, -1.0, vec![0.0; 4]).is_err());
        assert!(LatticeSystem::new(1.0, 1.0, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
        let sys = LatticeSystem::free(8, 2.0, 0.5).unwrap();
        assert_eq!(sys.momentum_indices(), vec![-4, -3, -2, -1, 0, 1, 2, 3]);
        assert_eq!(sys.kinetic_energies()[4], 0.0);
        assert!((sys.kinetic_energies()[5] - PI * PI).abs() < 1e-12);
        let err = evolve_wavefunction(&sys, &[c(1.0, 0.0); 4], 1, 1.0, &SeriesOptions::default());
        assert!(matches!(err, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn zero_and_constant_potentials() {
        let free = build_momentum_split(&LatticeSystem::free(8, 1.0, 1.0).unwrap()).unwrap();
        assert!(free.h1().iter().all(|z| z.norm() < 1e-15));
        let flat =
            build_momentum_split(&LatticeSystem::new(1.0, 1.0, vec![0.7; 8]).unwrap()).unwrap();
        assert!(max_abs_diff(flat.h1(), &(CMatrix::identity(8, 8) * c(0.7, 0.0))) < 1e-15);
    }

    #[test]
    fn cosine_couples_neighbouring_momenta() {
        let n = 16;
        let v = 0.3;
        let h = build_momentum_split(&LatticeSystem::cosine(n, 1.0, 1.0, v, 1).unwrap()).unwrap();
        for i in 0..n {
            for j in 0..n {
                let d = (i as i64 - j as i64).rem_euclid(n as i64);
                let expect = if d == 1 || d == n as i64 - 1 { v } else { 0.0 };
                assert!(
                    (h.h1()[(i, j)] - c(expect, 0.0)).norm() < 1e-14,
                    "({i},{j})"
                );
            }
        }
    }

    #[test]
    fn split_matches_direct_fourier_sum() {
        let potential = vec![0.3, -0.1, 0.8, 0.2, 0.0, -0.5];
        let sys = LatticeSystem::new(2.5, 1.3, potential.clone()).unwrap();
        let h = build_momentum_split(&sys).unwrap();
        let k = sys.momenta();
        let x = sys.positions();
        for i in 0..6 {
            for j in 0..6 {
                let direct: Complex64 = potential
                    .iter()
                    .zip(&x)
                    .map(|(v, xx)| Complex64::from_polar(*v, -(k[i] - k[j]) * xx))
                    .sum::<Complex64>()
                    / 6.0;
                assert!((h.h1()[(i, j)] - direct).norm() < 1e-13);
            }
        }
        let f = sys.fourier_matrix();
        assert!(max_abs_diff(&(&f * f.adjoint()), &CMatrix::identity(6, 6)) < 1e-14);
        assert!(max_abs_diff(&(&f * sys.position_hamiltonian() * f.adjoint()), &h.full()) < 1e-12);
    }

    #[test]
    fn transforms_round_trip() {
        let sys = LatticeSystem::free(16, 3.0, 1.0).unwrap();
        let psi = gaussian_packet(&sys, 1.0, 0.4, 2.0);
        let k = sys.to_momentum(&psi).unwrap();
        assert!((k.norm() - 1.0).abs() < 1e-14);
        let direct = sys.fourier_matrix() * CVector::from_column_slice(&psi);
        assert!((k - &direct).norm() < 1e-14);
        assert!(max_diff(&sys.to_position(&direct).unwrap(), &psi) < 1e-14);
    }

    #[test]
    fn free_plane_wave_picks_up_phase() {
        let sys = LatticeSystem::free(16, 2.0, 1.0).unwrap();
        let n = 3i64;
        let k = 2.0 * PI * n as f64 / 2.0;
        let psi0: Vec<Complex64> = sys
            .positions()
            .iter()
            .map(|x| Complex64::from_polar(0.25, k * x))
            .collect();
        let t = 0.37;
        for order in [0, 1, 3] {
            let psi =
                evolve_wavefunction(&sys, &psi0, order, t, &SeriesOptions::default()).unwrap();
            let phase = Complex64::from_polar(1.0, -k * k / 2.0 * t);
            let expect: Vec<Complex64> = psi0.iter().map(|z| z * phase).collect();
            assert!(max_diff(&psi, &expect) < 1e-12);
        }
    }

    #[test]
    fn free_gaussian_spreading() {
        let sys = LatticeSystem::free(32, 10.0, 1.0).unwrap();
        let psi0 = gaussian_packet(&sys, 5.0, 0.8, 1.5);
        let t = 2.0;
        let psi = evolve_wavefunction(&sys, &psi0, 2, t, &SeriesOptions::default()).unwrap();
        let mut k = sys.to_momentum(&psi0).unwrap();
        for (a, e) in k.iter_mut().zip(sys.kinetic_energies()) {
            *a *= Complex64::from_polar(1.0, -e * t);
        }
        assert!(max_diff(&psi, &sys.to_position(&k).unwrap()) < 1e-10);
        let exact = evolve_wavefunction_exact(&sys, &psi0, t).unwrap();
        assert!(max_diff(&psi, &exact) < 1e-10);
    }

    #[test]
    fn propagator_limits() {
        let sys = LatticeSystem::cosine(8, 1.0, 1.0, 0.2, 1).unwrap();
        let opts = SeriesOptions::default();
        let p0 = position_propagator(&sys, 3, 0.0, &opts).unwrap();
        assert!(max_abs_diff(&p0, &CMatrix::identity(8, 8)) < 1e-14);

        let free = LatticeSystem::free(8, 1.0, 1.0).unwrap();
        let t = 0.05;
        let p = position_propagator(&free, 2, t, &opts).unwrap();
        let f = free.fourier_matrix();
        let phases = CMatrix::from_diagonal(&CVector::from_iterator(
            8,
            free.kinetic_energies()
                .into_iter()
                .map(|e| Complex64::from_polar(1.0, -e * t)),
        ));
        assert!(max_abs_diff(&p, &(f.adjoint() * phases * &f)) < 1e-13);

        let u = position_propagator_exact(&sys, 3.0);
        assert!(max_abs_diff(&(&u * u.adjoint()), &CMatrix::identity(8, 8)) < 1e-11);
    }

    #[test]
    fn wavefunction_and_propagator_agree() {
        let sys = LatticeSystem::cosine(16, 1.0, 1.0, 0.5, 1).unwrap();
        let psi0 = gaussian_packet(&sys, 0.5, 0.1, 0.0);
        let opts = SeriesOptions::default();
        let t = 0.4;
        let a = evolve_wavefunction(&sys, &psi0, 3, t, &opts).unwrap();
        let p = position_propagator(&sys, 3, t, &opts).unwrap();
        let b = p * CVector::from_column_slice(&psi0);
        assert!(max_diff(&a, b.as_slice()) < 1e-10);
    }

    #[test]
    fn single_harmonic_paths_are_pruned() {
        let n = 16;
        let sys = LatticeSystem::cosine(n, 1.0, 1.0, 0.1, 1).unwrap();
        let h = build_momentum_split(&sys).unwrap();
        let l = 4;
        let term = term_matrix(&h, l, 0.3, &PathOptions::default()).unwrap();
        // each step moves one momentum left or right
        assert_eq!(term.paths_evaluated, (n as u64) * 2u64.pow(l as u32));
        assert!(u128::from(term.paths_evaluated) < (n as u128).pow(l as u32 + 1));
        let opts = SeriesOptions {
            evaluator: Evaluator::BlockOracle,
            ..Default::default()
        };
        let oracle = &series_terms(&h, l, 0.3, opts.evaluator, &opts.paths).unwrap()[l];
        assert!(max_abs_diff(&term.matrix, &oracle.matrix) < 1e-12);
    }

    #[test]
    fn cosine_series_tracks_dense_evolution() {
        let sys = LatticeSystem::cosine(32, 1.0, 1.0, 0.25, 1).unwrap();
        let psi0 = gaussian_packet(&sys, 0.5, 0.08, 0.0);
        let opts = SeriesOptions {
            evaluator: Evaluator::Paths,
            ..Default::default()
        };
        for &t in &[0.5, 1.0, 2.0] {
            let a = evolve_wavefunction(&sys, &psi0, 4, t, &opts).unwrap();
            let b = evolve_wavefunction_exact(&sys, &psi0, t).unwrap();
            assert!(max_diff(&a, &b) < 1e-6, "t = {t}: {}", max_diff(&a, &b));
        }
    }
}
