//! Series solution of quantum dynamics for time-independent Hamiltonians
//! split as `H = H0 + H1`.
//!
//! The time-evolution operator is written as a sum over orders of `H1`:
//!
//! ```text
//! e^{-iHt} = sum_l A_l(t),
//! A_l(t)[g, g'] = sum over index paths g = g_1, ..., g_{l+1} = g' of
//!                 f[E_{g_1}, ..., E_{g_{l+1}}] * H1[g_1,g_2] ... H1[g_l,g_{l+1}]
//! ```
//!
//! where `f[...]` is the divided difference of `x -> e^{-ixt}` over the
//! path energies. The crate evaluates these terms path by path, checks them
//! against a block-matrix exponential and a dense exponential, and exercises
//! the coefficient identities the construction rests on.
//!
//! Modules:
//! - [`coeffs`]: the coefficients `C_l^n` computed three ways, exact or in floats.
//! - [`binomial`]: the non-commutative binomial expansion `(A+B)^n = A^n + f^n(A,B)`.
//! - [`divided_exp`]: stable (including confluent) divided differences of `e^{-ixt}`.
//! - [`propagator`]: series terms `A_l(t)`, truncated propagators and oracles.
//! - [`dynamics`]: state and density evolution, perturbation-theory cross-checks.
//! - [`lattice`]: periodic 1D grid with `H0 = k^2/2m`, `H1 = V`.
//! - [`cli`]: configuration, command dispatch and output formats.

pub mod binomial;
pub mod cli;
pub mod coeffs;
pub mod divided_exp;
pub mod dynamics;
mod error;
pub mod expm;
pub mod lattice;
pub mod propagator;
pub mod scalar;
pub mod testing;
pub mod verify;

pub use error::{Error, Result};

pub use num_complex::Complex64;

/// Complex dense matrix used for every operator in the crate.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
/// Complex dense column vector.
pub type CVector = nalgebra::DVector<Complex64>;

/// Default relative tolerance under which two energies are treated as equal.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-9;
