//! State and density evolution by the truncated series, and the
//! perturbation-theory cross-checks.
//!
//! Two consistency checks tie the series to textbook perturbation theory:
//!
//! - stationary: for an exact eigenpair `(E_T, a)` of `H0 + H1`, the `K`-th
//!   time derivative at `t = 0` gives
//!   `E_T^K a_g = E_g^K a_g + sum_{g'} sum_{l=1}^K B_l(K)[g,g'] a_{g'}`, with
//!   `B_l(K)` the path sum of `C_l^K` times the `H1` amplitude;
//! - time-dependent: integrating the amplitude recurrence
//!   `i d/dt b^(l)_g = sum_{g'} e^{i(E_g - E_g')t} H1[g,g'] b^(l-1)_{g'}`
//!   order by order reproduces the columns of `A_l(t)`.

use num_complex::Complex64;

use crate::coeffs::{coeff_auto, coeff_confluent, EnergyVector};
use crate::expm::dense_exp;
use crate::propagator::{
    hermitian_deviation, series_terms, walk_paths, Evaluator, PathOptions, SeriesTerm,
    SplitHamiltonian,
};
use crate::scalar::Field;
use crate::{CMatrix, CVector, Error, Result};

/// Evaluator choice plus path-sum knobs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SeriesOptions {
    pub evaluator: Evaluator,
    pub paths: PathOptions,
}

/// Amplitudes in the `H0` eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(CVector);

impl StateVector {
    /// Normalized state; rejects norms further than `1e-12` from one.
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let s = Self::unnormalized(amplitudes)?;
        if (s.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "state norm is {}, expected 1",
                s.norm()
            )));
        }
        Ok(s)
    }

    /// Any finite amplitude vector.
    pub fn unnormalized(amplitudes: CVector) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidArgument("state has no amplitudes".into()));
        }
        if amplitudes
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::InvalidArgument(
                "state has non-finite amplitudes".into(),
            ));
        }
        Ok(Self(amplitudes))
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index {index} out of range for {dim}");
        let mut v = CVector::zeros(dim);
        v[index] = Complex64::new(1.0, 0.0);
        Self(v)
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.0
    }

    pub fn into_inner(self) -> CVector {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

/// Density matrix in the `H0` eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    /// Validated density matrix: Hermitian and unit trace within `1e-12`,
    /// eigenvalues above `-1e-10`.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() || m.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "density matrix must be square and non-empty, got {:?}",
                m.shape()
            )));
        }
        let dev = hermitian_deviation(&m);
        if dev > 1e-12 {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let tr = m.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "density matrix trace is {tr}"
            )));
        }
        let min_eig = m
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -1e-10 {
            return Err(Error::InvalidArgument(format!(
                "density matrix has eigenvalue {min_eig}"
            )));
        }
        Ok(Self(m))
    }

    /// `|psi><psi|`.
    pub fn pure(psi: &StateVector) -> Self {
        Self(psi.amplitudes() * psi.amplitudes().adjoint())
    }

    /// Wraps an evolved matrix without validation; truncated evolution only
    /// approximately preserves the invariants.
    pub fn from_evolution(m: CMatrix) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    /// `max |rho - rho^dagger|` relative to `max(1, max |rho|)`.
    pub fn hermitian_deviation(&self) -> f64 {
        hermitian_deviation(&self.0)
    }
}

fn check_dim(h: &SplitHamiltonian, dim: usize, what: &str) -> Result<()> {
    if h.dim() != dim {
        return Err(Error::DimensionMismatch(format!(
            "Hamiltonian has dimension {} but {what} has {dim}",
            h.dim()
        )));
    }
    Ok(())
}

/// `psi(t) = sum_{l=0}^{max_order} A_l(t) psi0`.
pub fn evolve_state(
    h: &SplitHamiltonian,
    psi0: &StateVector,
    max_order: usize,
    t: f64,
    opts: &SeriesOptions,
) -> Result<StateVector> {
    check_dim(h, psi0.dim(), "the state")?;
    let terms = series_terms(h, max_order, t, opts.evaluator, &opts.paths)?;
    let out = terms.iter().fold(CVector::zeros(h.dim()), |acc, term| {
        acc + &term.matrix * psi0.amplitudes()
    });
    StateVector::unnormalized(out)
}

/// `exp(-iHt) psi0` with the dense oracle.
pub fn evolve_state_exact(h: &SplitHamiltonian, psi0: &StateVector, t: f64) -> Result<StateVector> {
    check_dim(h, psi0.dim(), "the state")?;
    StateVector::unnormalized(dense_exp(&h.full(), t) * psi0.amplitudes())
}

/// `sum_{k + l <= max_order} A_k(t) rho0 A_l(t)^dagger`.
pub fn evolve_density(
    h: &SplitHamiltonian,
    rho0: &DensityMatrix,
    max_order: usize,
    t: f64,
    opts: &SeriesOptions,
) -> Result<DensityMatrix> {
    check_dim(h, rho0.dim(), "the density matrix")?;
    let terms = series_terms(h, max_order, t, opts.evaluator, &opts.paths)?;
    Ok(DensityMatrix::from_evolution(conjugate_truncated(
        &terms,
        rho0.matrix(),
        max_order,
    )))
}

fn conjugate_truncated(terms: &[SeriesTerm], rho: &CMatrix, max_order: usize) -> CMatrix {
    let dim = rho.nrows();
    let mut out = CMatrix::zeros(dim, dim);
    for (k, ak) in terms.iter().enumerate() {
        let left = &ak.matrix * rho;
        for al in &terms[..=max_order - k] {
            out += &left * al.matrix.adjoint();
        }
    }
    out
}

/// `exp(-iHt) rho0 exp(iHt)` with the dense oracle.
pub fn evolve_density_exact(
    h: &SplitHamiltonian,
    rho0: &DensityMatrix,
    t: f64,
) -> Result<DensityMatrix> {
    check_dim(h, rho0.dim(), "the density matrix")?;
    let u = dense_exp(&h.full(), t);
    Ok(DensityMatrix::from_evolution(
        &u * rho0.matrix() * u.adjoint(),
    ))
}

/// `B_l(K)[g, g'] = sum over paths g -> g' of C_l^K(E[path]) * amplitude`,
/// zero when `l > K`. Coefficients use the division-free form, so close or
/// repeated energies cost no accuracy.
pub fn b_matrix(h: &SplitHamiltonian, l: usize, k: u32) -> CMatrix {
    let dim = h.dim();
    let mut out = CMatrix::zeros(dim, dim);
    if l == 0 || l > k as usize {
        return out;
    }
    let mut energies = vec![0.0; l + 1];
    for start in 0..dim {
        walk_paths(h, l, start, |idx, amp| {
            for (e, &i) in energies.iter_mut().zip(idx) {
                *e = h.energies()[i];
            }
            let ev = EnergyVector::new(energies.clone()).expect("path energies are finite");
            out[(start, idx[l])] += amp * coeff_confluent(&ev, k);
        });
    }
    out
}

/// Residuals of the stationary relation for every exact eigenpair.
#[derive(Debug, Clone, PartialEq)]
pub struct PTCheckReport {
    pub k: u32,
    /// Eigenvalues `E_T` of `H0 + H1`, in the order used below.
    pub total_energies: Vec<f64>,
    /// One entry per (eigenpair, basis index), eigenpair-major.
    pub per_equation_residual: Vec<f64>,
    pub max_residual: f64,
}

/// Diagonalize `H0 + H1` densely and measure
/// `|E_T^K a_g - E_g^K a_g - sum_{g'} sum_{l<=K} B_l(K)[g,g'] a_{g'}|`.
pub fn stationary_consistency(h: &SplitHamiltonian, k: u32) -> Result<PTCheckReport> {
    if k == 0 {
        return Err(Error::InvalidArgument(
            "derivative order K must be at least 1".into(),
        ));
    }
    let dim = h.dim();
    let mut b_sum = CMatrix::zeros(dim, dim);
    for l in 1..=k as usize {
        b_sum += b_matrix(h, l, k);
    }
    let eig = h.full().symmetric_eigen();
    let mut residuals = Vec::with_capacity(dim * dim);
    for (col, &e_total) in eig.eigenvalues.iter().enumerate() {
        let a = eig.eigenvectors.column(col);
        let coupled = &b_sum * a;
        for g in 0..dim {
            let lhs = a[g] * e_total.powi(k as i32);
            let rhs = a[g] * h.energies()[g].powi(k as i32) + coupled[g];
            residuals.push((lhs - rhs).norm());
        }
    }
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(PTCheckReport {
        k,
        total_energies: eig.eigenvalues.iter().copied().collect(),
        per_equation_residual: residuals,
        max_residual,
    })
}

/// Worst violations of the coefficient difference relations and of the
/// telescoping identity used to reduce the order-`K` stationary relation to
/// first order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityChainReport {
    /// `max |C_1^K - E_2 C_1^{K-1} - E_1^{K-1}|` over index pairs.
    pub first_order: f64,
    /// `max |C_l^K - E_{l+1} C_l^{K-1} - C_{l-1}^{K-1}|` over paths, `2 <= l <= K`.
    pub higher_order: f64,
    /// Largest entry of
    /// `sum_{l=2}^{K-1} [B_l(K) - B_l(K-1) E] + B_K(K) - sum_{l=1}^{K-1} B_l(K-1) H1`.
    pub telescoping: f64,
}

impl IdentityChainReport {
    pub fn total(&self) -> f64 {
        self.first_order + self.higher_order + self.telescoping
    }
}

/// Evaluate the difference relations over every index path of `h`'s spectrum
/// (orders `1..=K`) and the telescoping identity assembled from `B_l` values.
pub fn identity_chain(h: &SplitHamiltonian, k: u32, tol: f64) -> Result<IdentityChainReport> {
    if k < 2 {
        return Err(Error::InvalidArgument("identity chain needs K >= 2".into()));
    }
    let dim = h.dim();
    let e = h.energies();
    let coeff = |idx: &[usize], n: u32| {
        let ev = EnergyVector::new(idx.iter().map(|&i| e[i]).collect()).expect("finite energies");
        coeff_auto(&ev, n, tol)
    };
    let mut first_order = 0.0f64;
    let mut higher_order = 0.0f64;
    for l in 1..=k as usize {
        let mut idx = vec![0usize; l + 1];
        loop {
            let lhs = coeff(&idx, k) - e[idx[l]] * coeff(&idx, k - 1);
            if l == 1 {
                first_order = first_order.max((lhs - e[idx[0]].powi(k as i32 - 1)).abs());
            } else {
                higher_order = higher_order.max((lhs - coeff(&idx[..l], k - 1)).abs());
            }
            let mut pos = l + 1;
            let done = loop {
                if pos == 0 {
                    break true;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < dim {
                    break false;
                }
                idx[pos] = 0;
            };
            if done {
                break;
            }
        }
    }

    let energies_right = h.h0();
    let mut residual = b_matrix(h, k as usize, k);
    for l in 2..k as usize {
        residual += b_matrix(h, l, k) - b_matrix(h, l, k - 1) * &energies_right;
    }
    for l in 1..k as usize {
        residual -= b_matrix(h, l, k - 1) * h.h1();
    }
    let telescoping = residual.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(IdentityChainReport {
        first_order,
        higher_order,
        telescoping,
    })
}

/// Sum of `P_f(t) e^{-i f t}` over frequencies `f`, with `P_f` a polynomial
/// stored by ascending power.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExpPoly {
    terms: Vec<(f64, Vec<Complex64>)>,
}

impl ExpPoly {
    pub fn exponential(freq: f64, coeff: Complex64) -> Self {
        Self {
            terms: vec![(freq, vec![coeff])],
        }
    }

    pub fn terms(&self) -> &[(f64, Vec<Complex64>)] {
        &self.terms
    }

    fn add_term(&mut self, freq: f64, poly: &[Complex64], scale: Complex64, tol: f64) {
        let slot = match self.terms.iter().position(|(f, _)| f.coincides(&freq, tol)) {
            Some(i) => i,
            None => {
                self.terms.push((freq, Vec::new()));
                self.terms.len() - 1
            }
        };
        let target = &mut self.terms[slot].1;
        if target.len() < poly.len() {
            target.resize(poly.len(), Complex64::new(0.0, 0.0));
        }
        for (t, p) in target.iter_mut().zip(poly) {
            *t += p * scale;
        }
    }

    fn add_scaled(&mut self, other: &ExpPoly, scale: Complex64, tol: f64) {
        for (f, p) in &other.terms {
            self.add_term(*f, p, scale, tol);
        }
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|(f, p)| {
                let poly = p
                    .iter()
                    .rev()
                    .fold(Complex64::new(0.0, 0.0), |acc, c| acc * t + c);
                poly * Complex64::from_polar(1.0, -f * t)
            })
            .sum()
    }

    /// `-i e^{-iEt} int_0^t e^{iE tau} self(tau) d tau`.
    fn integrate_against(&self, energy: f64, tol: f64) -> ExpPoly {
        let minus_i = Complex64::new(0.0, -1.0);
        let mut out = ExpPoly::default();
        for (f, p) in &self.terms {
            if f.coincides(&energy, tol) {
                // resonant: int tau^k = t^{k+1} / (k+1)
                let mut q = vec![Complex64::new(0.0, 0.0); p.len() + 1];
                for (k, c) in p.iter().enumerate() {
                    q[k + 1] = c / (k + 1) as f64;
                }
                out.add_term(*f, &q, minus_i, tol);
                continue;
            }
            // int_0^t tau^k e^{s tau} = e^{st} sum_j (-1)^j k!/(k-j)! t^{k-j} / s^{j+1}
            //                           - (-1)^k k! / s^{k+1}
            let s = Complex64::new(0.0, energy - f);
            let mut running = vec![Complex64::new(0.0, 0.0); p.len()];
            let mut constant = Complex64::new(0.0, 0.0);
            for (k, c) in p.iter().enumerate() {
                let mut falling = 1.0;
                let mut s_pow = s;
                for j in 0..=k {
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    running[k - j] += c * sign * falling / s_pow;
                    if j < k {
                        falling *= (k - j) as f64;
                        s_pow *= s;
                    }
                }
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                constant -= c * sign * falling / s_pow;
            }
            out.add_term(*f, &running, minus_i, tol);
            out.add_term(energy, &[constant], minus_i, tol);
        }
        out
    }
}

/// Order-`l` amplitudes `c^(l)_g(t)` for a system started in basis state `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct TdptCoefficients {
    pub order: usize,
    pub alpha: usize,
    pub time: f64,
    /// `c^(l)_g(t)` in the Schrodinger picture.
    pub c: CVector,
    /// Interaction-picture amplitudes `b^(l)_g(t) = c^(l)_g(t) e^{iE_g t}`.
    pub b: CVector,
}

/// `c^(m)_g` for `m = 0..=max_order` as exponential polynomials in `t`,
/// obtained by integrating the amplitude recurrence exactly.
pub fn tdpt_series(
    h: &SplitHamiltonian,
    alpha: usize,
    max_order: usize,
    tol: f64,
) -> Result<Vec<Vec<ExpPoly>>> {
    let dim = h.dim();
    if alpha >= dim {
        return Err(Error::InvalidArgument(format!(
            "initial index {alpha} out of range for dimension {dim}"
        )));
    }
    let mut orders = Vec::with_capacity(max_order + 1);
    let zeroth: Vec<ExpPoly> = (0..dim)
        .map(|g| {
            if g == alpha {
                ExpPoly::exponential(h.energies()[alpha], Complex64::new(1.0, 0.0))
            } else {
                ExpPoly::default()
            }
        })
        .collect();
    orders.push(zeroth);
    for _ in 1..=max_order {
        let prev: &Vec<ExpPoly> = orders.last().unwrap();
        let next: Vec<ExpPoly> = (0..dim)
            .map(|g| {
                let mut source = ExpPoly::default();
                for (gp, c) in prev.iter().enumerate() {
                    let v = h.h1()[(g, gp)];
                    if v != Complex64::new(0.0, 0.0) {
                        source.add_scaled(c, v, tol);
                    }
                }
                source.integrate_against(h.energies()[g], tol)
            })
            .collect();
        orders.push(next);
    }
    Ok(orders)
}

/// `c^(l)_g(t)` for every `g`, from [`tdpt_series`].
///
/// Frequencies closer than `tol` are merged, so near-degenerate but distinct
/// levels lose accuracy like `eps / gap^l`.
pub fn tdpt_coeffs(
    h: &SplitHamiltonian,
    alpha: usize,
    l: usize,
    t: f64,
    tol: f64,
) -> Result<TdptCoefficients> {
    let series = tdpt_series(h, alpha, l, tol)?;
    let c = CVector::from_iterator(h.dim(), series[l].iter().map(|p| p.eval(t)));
    let b = CVector::from_iterator(
        h.dim(),
        c.iter()
            .zip(h.energies())
            .map(|(z, &e)| z * Complex64::from_polar(1.0, e * t)),
    );
    Ok(TdptCoefficients {
        order: l,
        alpha,
        time: t,
        c,
        b,
    })
}
