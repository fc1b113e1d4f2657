//! Series terms `A_l(t)` of the time-evolution operator and their oracles.
//!
//! Working representation is the eigenbasis of `H0`: `H0 = diag(E)` and `H1`
//! is a dense matrix in that basis. Three evaluators of the same objects live
//! here:
//!
//! - [`term_matrix`]: explicit sum over index paths, each weighted by the
//!   divided difference of `e^{-ixt}` over its energies;
//! - [`vanloan_terms`]: the top block row of `exp(-iMt)` for the block
//!   bidiagonal `M` with `H0` on the diagonal and `H1` above it;
//! - [`dense_exp`]: `exp(-i(H0+H1)t)` for the full series.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::divided_exp::path_phase;
pub use crate::expm::dense_exp;
use crate::expm::expm;
use crate::{CMatrix, Error, Result, DEFAULT_DEGENERACY_TOL};

/// Relative tolerance for the Hermiticity check on construction.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// `H = H0 + H1` in the eigenbasis of `H0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitHamiltonian {
    energies: Vec<f64>,
    h1: CMatrix,
}

/// `max |M - M^dagger|`, relative to `max(1, max |M|)`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let adj = m.adjoint();
    m.iter()
        .zip(adj.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
        / scale
}

impl SplitHamiltonian {
    /// Builds a split Hamiltonian, rejecting a non-Hermitian `h1`.
    pub fn new(energies: Vec<f64>, h1: CMatrix) -> Result<Self> {
        let h = Self::new_unchecked_hermiticity(energies, h1)?;
        let dev = hermitian_deviation(&h.h1);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        Ok(h)
    }

    /// As [`SplitHamiltonian::new`] but accepts non-Hermitian `h1`, for
    /// deliberate experiments. Shape and finiteness are still checked.
    pub fn new_unchecked_hermiticity(energies: Vec<f64>, h1: CMatrix) -> Result<Self> {
        if energies.is_empty() {
            return Err(Error::InvalidArgument("H0 spectrum is empty".into()));
        }
        if h1.shape() != (energies.len(), energies.len()) {
            return Err(Error::DimensionMismatch(format!(
                "{} energies but H1 is {}x{}",
                energies.len(),
                h1.nrows(),
                h1.ncols()
            )));
        }
        if let Some(i) = energies.iter().position(|e| !e.is_finite()) {
            return Err(Error::InvalidArgument(format!("energy {i} is not finite")));
        }
        if h1.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("H1 has non-finite entries".into()));
        }
        Ok(Self { energies, h1 })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn h1(&self) -> &CMatrix {
        &self.h1
    }

    pub fn h0(&self) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.dim(),
            self.energies.iter().map(|&e| Complex64::new(e, 0.0)),
        ))
    }

    /// `H0 + H1` as a dense matrix.
    pub fn full(&self) -> CMatrix {
        self.h0() + &self.h1
    }

    /// Spectral norm of `H0`.
    pub fn h0_norm(&self) -> f64 {
        self.energies.iter().fold(0.0, |m, e| m.max(e.abs()))
    }

    /// Spectral norm of `H1`.
    pub fn h1_norm(&self) -> f64 {
        crate::testing::spectral_norm(&self.h1)
    }
}

/// An index chain `(g_1, ..., g_{l+1})` with its energies and amplitude
/// `H1[g_1,g_2] ... H1[g_l,g_{l+1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyPath {
    indices: Vec<usize>,
    energies: Vec<f64>,
    amplitude: Complex64,
}

impl EnergyPath {
    pub fn new(h: &SplitHamiltonian, indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidArgument(
                "path needs at least one index".into(),
            ));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= h.dim()) {
            return Err(Error::InvalidArgument(format!(
                "path index {bad} out of range for dimension {}",
                h.dim()
            )));
        }
        let energies = indices.iter().map(|&i| h.energies[i]).collect();
        let amplitude = indices
            .windows(2)
            .fold(Complex64::new(1.0, 0.0), |acc, w| acc * h.h1[(w[0], w[1])]);
        Ok(Self {
            indices,
            energies,
            amplitude,
        })
    }

    pub fn order(&self) -> usize {
        self.indices.len() - 1
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn amplitude(&self) -> Complex64 {
        self.amplitude
    }

    /// Contribution of this path to `A_l(t)`.
    pub fn contribution(&self, t: f64, tol: f64) -> Complex64 {
        path_phase(&self.energies, t, tol) * self.amplitude
    }
}

/// The order-`l` term `A_l(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTerm {
    pub order: usize,
    pub time: f64,
    pub matrix: CMatrix,
    /// Paths with non-zero amplitude that were evaluated (0 for block-oracle terms).
    pub paths_evaluated: u64,
}

/// Knobs for the path-sum evaluator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOptions {
    /// Relative tolerance under which path energies are merged.
    pub degeneracy_tol: f64,
    /// Limit on `dim^{l-1}`, the number of paths per matrix entry.
    pub path_budget: u128,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self {
            degeneracy_tol: DEFAULT_DEGENERACY_TOL,
            path_budget: 10_000_000,
        }
    }
}

/// `dim^{l-1}` saturating, the dense path count per matrix entry.
pub fn paths_per_entry(dim: usize, l: usize) -> u128 {
    if l == 0 {
        return 1;
    }
    (0..l - 1).fold(1u128, |acc, _| acc.saturating_mul(dim as u128))
}

fn check_budget(dim: usize, l: usize, opts: &PathOptions) -> Result<()> {
    let needed = paths_per_entry(dim, l);
    if needed > opts.path_budget {
        return Err(Error::Budget {
            what: "paths per propagator entry",
            needed,
            limit: opts.path_budget,
        });
    }
    Ok(())
}

/// Depth-first walk over every order-`l` path leaving `start`, skipping zero
/// entries of `H1`. Calls `visit(indices, amplitude)` on each complete path.
pub(crate) fn walk_paths<F: FnMut(&[usize], Complex64)>(
    h: &SplitHamiltonian,
    l: usize,
    start: usize,
    mut visit: F,
) {
    let dim = h.dim();
    let zero = Complex64::new(0.0, 0.0);
    let mut indices = vec![start];
    let mut amps = vec![Complex64::new(1.0, 0.0)];
    // next candidate per depth
    let mut cursor = vec![0usize];
    while let Some(depth) = cursor.len().checked_sub(1) {
        if indices.len() == l + 1 {
            visit(&indices, amps[l]);
            indices.pop();
            amps.pop();
            cursor.pop();
            continue;
        }
        let from = indices[depth];
        let mut next = cursor[depth];
        while next < dim && h.h1[(from, next)] == zero {
            next += 1;
        }
        if next == dim {
            cursor.pop();
            if cursor.is_empty() {
                break;
            }
            indices.pop();
            amps.pop();
            continue;
        }
        cursor[depth] = next + 1;
        indices.push(next);
        amps.push(amps[depth] * h.h1[(from, next)]);
        cursor.push(0);
    }
}

/// Visit every order-`l` path from `start` to `end` with non-zero amplitude.
pub fn for_each_path<F: FnMut(&EnergyPath)>(
    h: &SplitHamiltonian,
    l: usize,
    start: usize,
    end: usize,
    mut f: F,
) -> Result<()> {
    if start >= h.dim() || end >= h.dim() {
        return Err(Error::InvalidArgument(format!(
            "path endpoints ({start}, {end}) out of range for dimension {}",
            h.dim()
        )));
    }
    if l == 0 {
        if start == end {
            f(&EnergyPath::new(h, vec![start])?);
        }
        return Ok(());
    }
    walk_paths(h, l, start, |idx, _| {
        if idx[l] == end {
            f(&EnergyPath::new(h, idx.to_vec()).expect("indices in range"));
        }
    });
    Ok(())
}

/// `A_l(t)` as an explicit path sum.
pub fn term_matrix(
    h: &SplitHamiltonian,
    l: usize,
    t: f64,
    opts: &PathOptions,
) -> Result<SeriesTerm> {
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time {t} is not finite")));
    }
    let dim = h.dim();
    if l == 0 {
        let matrix = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            dim,
            h.energies
                .iter()
                .map(|&e| Complex64::from_polar(1.0, -e * t)),
        ));
        return Ok(SeriesTerm {
            order: 0,
            time: t,
            matrix,
            paths_evaluated: dim as u64,
        });
    }
    check_budget(dim, l, opts)?;
    let tol = opts.degeneracy_tol;
    let packable = (dim as f64).powi(l as i32 + 1) < 2f64.powi(120);
    let rows: Vec<(Vec<Complex64>, u64)> = (0..dim)
        .into_par_iter()
        .map(|start| {
            let mut row = vec![Complex64::new(0.0, 0.0); dim];
            let mut count = 0u64;
            let mut energies = vec![0.0; l + 1];
            let mut sorted = vec![0usize; l + 1];
            // divided differences are symmetric in their nodes, so paths
            // sharing an index multiset share a phase factor
            let mut cache: HashMap<u128, Complex64> = HashMap::new();
            walk_paths(h, l, start, |idx, amp| {
                let mut eval = |idx: &[usize]| {
                    for (e, &i) in energies.iter_mut().zip(idx) {
                        *e = h.energies[i];
                    }
                    path_phase(&energies, t, tol)
                };
                let phase = if packable {
                    sorted.copy_from_slice(idx);
                    sorted.sort_unstable();
                    let key = sorted
                        .iter()
                        .fold(0u128, |k, &i| k * dim as u128 + i as u128);
                    *cache.entry(key).or_insert_with(|| eval(&sorted))
                } else {
                    eval(idx)
                };
                row[idx[l]] += phase * amp;
                count += 1;
            });
            (row, count)
        })
        .collect();
    let mut matrix = CMatrix::zeros(dim, dim);
    let mut paths_evaluated = 0;
    for (i, (row, count)) in rows.into_iter().enumerate() {
        for (j, z) in row.into_iter().enumerate() {
            matrix[(i, j)] = z;
        }
        paths_evaluated += count;
    }
    Ok(SeriesTerm {
        order: l,
        time: t,
        matrix,
        paths_evaluated,
    })
}

/// `sum_{l=0}^{max_order} A_l(t)` via path sums.
pub fn truncated_propagator(
    h: &SplitHamiltonian,
    max_order: usize,
    t: f64,
    opts: &PathOptions,
) -> Result<CMatrix> {
    let mut total = CMatrix::zeros(h.dim(), h.dim());
    for l in 0..=max_order {
        total += term_matrix(h, l, t, opts)?.matrix;
    }
    Ok(total)
}

/// Orders `0..=max_order` from the top block row of `exp(-iMt)`, where `M`
/// is block upper bidiagonal with `H0` on the diagonal and `H1` above it.
pub fn vanloan_terms(h: &SplitHamiltonian, max_order: usize, t: f64) -> Vec<SeriesTerm> {
    let dim = h.dim();
    let blocks = max_order + 1;
    let size = blocks * dim;
    let scale = Complex64::new(0.0, -t);
    let mut m = CMatrix::zeros(size, size);
    for b in 0..blocks {
        let o = b * dim;
        for i in 0..dim {
            m[(o + i, o + i)] = scale * h.energies[i];
        }
        if b + 1 < blocks {
            let mut view = m.view_mut((o, o + dim), (dim, dim));
            view.copy_from(&h.h1.map(|z| z * scale));
        }
    }
    let e = expm(&m);
    (0..blocks)
        .map(|l| SeriesTerm {
            order: l,
            time: t,
            matrix: e.view((0, l * dim), (dim, dim)).into_owned(),
            paths_evaluated: 0,
        })
        .collect()
}

/// Which evaluator produces series terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Evaluator {
    /// Explicit path sums.
    Paths,
    /// Block-matrix exponential.
    BlockOracle,
    /// Block oracle while `(L+1) * dim <= 2000`, path sums beyond that.
    #[default]
    Auto,
}

/// Largest block-matrix size the automatic evaluator will build.
pub const BLOCK_ORACLE_MAX_SIZE: usize = 2000;

/// Orders `0..=max_order` with the chosen evaluator.
pub fn series_terms(
    h: &SplitHamiltonian,
    max_order: usize,
    t: f64,
    evaluator: Evaluator,
    opts: &PathOptions,
) -> Result<Vec<SeriesTerm>> {
    let use_block = match evaluator {
        Evaluator::Paths => false,
        Evaluator::BlockOracle => true,
        Evaluator::Auto => (max_order + 1) * h.dim() <= BLOCK_ORACLE_MAX_SIZE,
    };
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time {t} is not finite")));
    }
    if use_block {
        Ok(vanloan_terms(h, max_order, t))
    } else {
        (0..=max_order)
            .map(|l| term_matrix(h, l, t, opts))
            .collect()
    }
}

/// Sum of a list of terms.
pub fn sum_terms(terms: &[SeriesTerm]) -> CMatrix {
    let dim = terms.first().map_or(0, |t| t.matrix.nrows());
    terms
        .iter()
        .fold(DMatrix::zeros(dim, dim), |acc, term| acc + &term.matrix)
}

/// `(|H1| |t|)^{L+1} / (L+1)! * e^{(|H0| + |H1|) |t|}`, the remainder bound of
/// the order-`L` truncation.
pub fn truncation_bound(h: &SplitHamiltonian, max_order: usize, t: f64) -> f64 {
    let x = h.h1_norm() * t.abs();
    let tail = (1..=max_order + 1).fold(1.0, |acc, k| acc * x / k as f64);
    tail * ((h.h0_norm() + h.h1_norm()) * t.abs()).exp()
}
