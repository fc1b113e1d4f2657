//! Configuration, command dispatch and output for the `qseries` binary.
//!
//! A run is described by a TOML document:
//!
//! ```toml
//! command = "evolve"   # coeffs | verify | propagate | evolve | density | lattice | ptcheck
//! order = 8
//! evaluator = "paths"  # paths | block-oracle | auto
//! seed = 0
//!
//! [system]
//! energies = [0.0, 1.0]
//! h1 = [[[0.0, 0.0], [0.5, 0.0]],
//!       [[0.5, 0.0], [0.0, 0.0]]]   # rows of [re, im] pairs
//! initial = 0                       # basis index, or `initial_state = [[re, im], ...]`
//!
//! [time]
//! start = 0.0
//! end = 2.0
//! steps = 4
//!
//! [tolerances]
//! degeneracy = 1e-9
//! oracle = 1e-6
//! ```
//!
//! A lattice system replaces `energies`/`h1` with `[system.lattice]`
//! (`points`, `box_length`, `mass`, then either `potential = [...]` or
//! `cosine = { amplitude, harmonic }`, and an optional
//! `packet = { center, width, momentum }`).

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coeffs::{coeff_auto, coeff_def, EnergyVector};
use crate::dynamics::{
    evolve_density, evolve_density_exact, evolve_state, evolve_state_exact, stationary_consistency,
    tdpt_coeffs, DensityMatrix, SeriesOptions, StateVector,
};
use crate::expm::dense_exp;
use crate::lattice::{
    build_momentum_split, evolve_wavefunction, evolve_wavefunction_exact, gaussian_packet,
    LatticeSystem,
};
use crate::propagator::{
    series_terms, sum_terms, term_matrix, truncation_bound, Evaluator, PathOptions,
    SplitHamiltonian,
};
use crate::verify::{run_all, SuiteReport};
use crate::{CMatrix, CVector, Error};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Coeffs,
    Verify,
    Propagate,
    Evolve,
    Density,
    Lattice,
    Ptcheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Rows,
    Structured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum EvaluatorName {
    Paths,
    BlockOracle,
    #[default]
    Auto,
}

impl From<EvaluatorName> for Evaluator {
    fn from(e: EvaluatorName) -> Self {
        match e {
            EvaluatorName::Paths => Evaluator::Paths,
            EvaluatorName::BlockOracle => Evaluator::BlockOracle,
            EvaluatorName::Auto => Evaluator::Auto,
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration; `field` is the dotted path of the offending entry.
    Config {
        field: String,
        message: String,
    },
    Core {
        context: String,
        source: Error,
    },
    Io {
        target: String,
        source: io::Error,
    },
    /// Number of failed checks.
    VerifyFailed(usize),
}

impl CliError {
    fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    fn core(context: &str) -> impl FnOnce(Error) -> Self + '_ {
        move |source| CliError::Core {
            context: context.to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Config { .. } => 2,
            CliError::Core {
                source: Error::Budget { .. },
                ..
            } => 3,
            CliError::Core { .. } => 2,
            CliError::VerifyFailed(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { field, message } => write!(f, "{field}: {message}"),
            CliError::Core { context, source } => write!(f, "{context}: {source}"),
            CliError::Io { target, source } => write!(f, "{target}: {source}"),
            CliError::VerifyFailed(n) => write!(f, "{n} checks failed"),
        }
    }
}

impl std::error::Error for CliError {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    command: Option<Command>,
    system: Option<RawSystem>,
    order: Option<i64>,
    time: Option<RawTime>,
    tolerances: Option<RawTolerances>,
    evaluator: Option<EvaluatorName>,
    path_budget: Option<u64>,
    seed: Option<u64>,
    output: Option<RawOutput>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    energies: Option<Vec<f64>>,
    h1: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default)]
    allow_non_hermitian: bool,
    initial: Option<i64>,
    initial_state: Option<Vec<[f64; 2]>>,
    lattice: Option<RawLattice>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLattice {
    points: i64,
    box_length: f64,
    mass: f64,
    potential: Option<Vec<f64>>,
    cosine: Option<RawCosine>,
    packet: Option<Packet>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCosine {
    amplitude: f64,
    #[serde(default = "one")]
    harmonic: i64,
}

fn one() -> i64 {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    start: Option<f64>,
    end: Option<f64>,
    steps: Option<i64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    degeneracy: Option<f64>,
    oracle: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    format: Option<Format>,
    path: Option<PathBuf>,
}

/// Gaussian initial packet for lattice runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Packet {
    pub center: f64,
    pub width: f64,
    #[serde(default)]
    pub momentum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum System {
    None,
    /// Energies only, enough for `coeffs`.
    Energies(Vec<f64>),
    Split(SplitHamiltonian),
    Lattice {
        lattice: LatticeSystem,
        packet: Packet,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Initial {
    Basis(usize),
    State(CVector),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub start: f64,
    pub end: f64,
    pub steps: usize,
}

impl TimeGrid {
    /// `steps + 1` equally spaced times from `start` to `end`.
    pub fn times(&self) -> Vec<f64> {
        let dt = (self.end - self.start) / self.steps as f64;
        (0..=self.steps)
            .map(|i| self.start + dt * i as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub degeneracy: f64,
    pub oracle: f64,
}

/// A validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub system: System,
    pub initial: Initial,
    pub order: usize,
    pub time: TimeGrid,
    pub tolerances: Tolerances,
    pub evaluator: Evaluator,
    pub path_budget: u128,
    pub seed: u64,
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    fn series_options(&self) -> SeriesOptions {
        SeriesOptions {
            evaluator: self.evaluator,
            paths: PathOptions {
                degeneracy_tol: self.tolerances.degeneracy,
                path_budget: self.path_budget,
            },
        }
    }

    fn hamiltonian(&self) -> Result<SplitHamiltonian, CliError> {
        match &self.system {
            System::Split(h) => Ok(h.clone()),
            System::Lattice { lattice, .. } => {
                build_momentum_split(lattice).map_err(CliError::core("system.lattice"))
            }
            _ => Err(CliError::config(
                "system",
                format!(
                    "command {:?} needs `energies` and `h1` or a lattice",
                    self.command
                ),
            )),
        }
    }

    fn initial_state(&self, dim: usize) -> Result<StateVector, CliError> {
        match &self.initial {
            Initial::Basis(i) if *i < dim => Ok(StateVector::basis(dim, *i)),
            Initial::Basis(i) => Err(CliError::config(
                "system.initial",
                format!("index {i} out of range for dimension {dim}"),
            )),
            Initial::State(v) if v.len() == dim => StateVector::new(v.clone())
                .map_err(|e| CliError::config("system.initial_state", e.to_string())),
            Initial::State(v) => Err(CliError::config(
                "system.initial_state",
                format!("has {} amplitudes, system dimension is {dim}", v.len()),
            )),
        }
    }
}

/// Values from the command line that take precedence over the document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub command: Option<Command>,
    pub order: Option<usize>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
}

pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    parse_config_with(text, &Overrides::default())
}

pub fn parse_config_with(text: &str, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| CliError::config("<document>", e.to_string()))?;

    let command = overrides
        .command
        .or(raw.command)
        .ok_or_else(|| CliError::config("command", "missing"))?;

    let order = match (overrides.order, raw.order) {
        (Some(o), _) => o,
        (None, Some(o)) if o < 0 => {
            return Err(CliError::config("order", format!("must be >= 0, got {o}")))
        }
        (None, Some(o)) => o as usize,
        (None, None) => 4,
    };

    let tol = raw.tolerances.unwrap_or(RawTolerances {
        degeneracy: None,
        oracle: None,
    });
    let tolerances = Tolerances {
        degeneracy: positive(
            "tolerances.degeneracy",
            tol.degeneracy.unwrap_or(crate::DEFAULT_DEGENERACY_TOL),
        )?,
        oracle: positive("tolerances.oracle", tol.oracle.unwrap_or(1e-6))?,
    };

    let time = raw.time.unwrap_or(RawTime {
        start: None,
        end: None,
        steps: None,
    });
    let start = finite("time.start", time.start.unwrap_or(0.0))?;
    let end = finite("time.end", time.end.unwrap_or(1.0))?;
    let steps = time.steps.unwrap_or(1);
    if steps < 1 {
        return Err(CliError::config(
            "time.steps",
            format!("must be >= 1, got {steps}"),
        ));
    }

    let (system, initial) = match raw.system {
        None => (System::None, Initial::Basis(0)),
        Some(s) => parse_system(s)?,
    };
    if matches!(command, Command::Lattice) && !matches!(system, System::Lattice { .. }) {
        return Err(CliError::config(
            "system.lattice",
            "required by the lattice command",
        ));
    }

    let output = raw.output.unwrap_or(RawOutput {
        format: None,
        path: None,
    });
    Ok(RunConfig {
        command,
        system,
        initial,
        order,
        time: TimeGrid {
            start,
            end,
            steps: steps as usize,
        },
        tolerances,
        evaluator: raw.evaluator.unwrap_or_default().into(),
        path_budget: raw
            .path_budget
            .map_or(PathOptions::default().path_budget, u128::from),
        seed: overrides.seed.or(raw.seed).unwrap_or(0),
        format: overrides.format.or(output.format).unwrap_or_default(),
        out: overrides.out.clone().or(output.path),
    })
}

fn positive(field: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::config(
            field,
            format!("must be positive, got {v}"),
        ))
    }
}

fn finite(field: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::config(field, format!("must be finite, got {v}")))
    }
}

fn complex_vector(field: &str, pairs: &[[f64; 2]]) -> Result<CVector, CliError> {
    if pairs.iter().flatten().any(|v| !v.is_finite()) {
        return Err(CliError::config(field, "non-finite entry"));
    }
    Ok(CVector::from_iterator(
        pairs.len(),
        pairs.iter().map(|[re, im]| Complex64::new(*re, *im)),
    ))
}

fn parse_system(s: RawSystem) -> Result<(System, Initial), CliError> {
    let initial = match (s.initial, s.initial_state) {
        (Some(_), Some(_)) => {
            return Err(CliError::config(
                "system.initial",
                "give either `initial` or `initial_state`",
            ));
        }
        (Some(i), None) if i < 0 => {
            return Err(CliError::config(
                "system.initial",
                format!("must be >= 0, got {i}"),
            ))
        }
        (Some(i), None) => Initial::Basis(i as usize),
        (None, Some(v)) => Initial::State(complex_vector("system.initial_state", &v)?),
        (None, None) => Initial::Basis(0),
    };

    if let Some(lat) = s.lattice {
        if s.energies.is_some() || s.h1.is_some() {
            return Err(CliError::config(
                "system.lattice",
                "cannot be combined with `energies` or `h1`",
            ));
        }
        return Ok((parse_lattice(lat)?, initial));
    }

    let energies = s
        .energies
        .ok_or_else(|| CliError::config("system.energies", "missing"))?;
    if let Some(i) = energies.iter().position(|e| !e.is_finite()) {
        return Err(CliError::config(
            format!("system.energies[{i}]"),
            "must be finite",
        ));
    }
    let Some(rows) = s.h1 else {
        return Ok((System::Energies(energies), initial));
    };
    let dim = energies.len();
    if rows.len() != dim {
        return Err(CliError::config(
            "system.h1",
            format!("dimension mismatch: {} rows for {dim} energies", rows.len()),
        ));
    }
    let mut h1 = CMatrix::zeros(dim, dim);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(CliError::config(
                format!("system.h1[{i}]"),
                format!("dimension mismatch: {} entries, expected {dim}", row.len()),
            ));
        }
        let v = complex_vector(&format!("system.h1[{i}]"), row)?;
        h1.row_mut(i).copy_from(&v.transpose());
    }
    let h = if s.allow_non_hermitian {
        SplitHamiltonian::new_unchecked_hermiticity(energies, h1)
    } else {
        SplitHamiltonian::new(energies, h1)
    }
    .map_err(|e| CliError::config("system.h1", e.to_string()))?;
    Ok((System::Split(h), initial))
}

fn parse_lattice(lat: RawLattice) -> Result<System, CliError> {
    if lat.points < 4 || lat.points % 2 != 0 {
        return Err(CliError::config(
            "system.lattice.points",
            format!("must be even and >= 4, got {}", lat.points),
        ));
    }
    let n = lat.points as usize;
    positive("system.lattice.box_length", lat.box_length)?;
    positive("system.lattice.mass", lat.mass)?;
    let lattice = match (lat.potential, lat.cosine) {
        (Some(_), Some(_)) => {
            return Err(CliError::config(
                "system.lattice",
                "give either `potential` or `cosine`",
            ));
        }
        (Some(v), None) => {
            if v.len() != n {
                return Err(CliError::config(
                    "system.lattice.potential",
                    format!("dimension mismatch: {} samples for {n} points", v.len()),
                ));
            }
            LatticeSystem::new(lat.box_length, lat.mass, v)
        }
        (None, Some(c)) => {
            LatticeSystem::cosine(n, lat.box_length, lat.mass, c.amplitude, c.harmonic)
        }
        (None, None) => LatticeSystem::free(n, lat.box_length, lat.mass),
    }
    .map_err(|e| CliError::config("system.lattice", e.to_string()))?;
    let packet = lat.packet.unwrap_or(Packet {
        center: 0.5 * lat.box_length,
        width: 0.1 * lat.box_length,
        momentum: 0.0,
    });
    positive("system.lattice.packet.width", packet.width)?;
    Ok(System::Lattice { lattice, packet })
}

/// One complex value at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub index: usize,
    pub re: f64,
    pub im: f64,
}

impl Sample {
    fn new(t: f64, index: usize, z: Complex64) -> Self {
        Self {
            t,
            index,
            re: z.re,
            im: z.im,
        }
    }

    pub fn abs2(&self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResultSet {
    pub command: String,
    pub samples: Vec<Sample>,
    pub metrics: BTreeMap<String, f64>,
    pub suites: Vec<SuiteReport>,
}

impl ResultSet {
    fn new(command: Command) -> Self {
        Self {
            command: format!("{command:?}").to_lowercase(),
            ..Default::default()
        }
    }

    fn push_all<'a>(&mut self, t: f64, values: impl IntoIterator<Item = &'a Complex64>) {
        self.samples.extend(
            values
                .into_iter()
                .enumerate()
                .map(|(i, z)| Sample::new(t, i, *z)),
        );
    }

    fn raise_metric(&mut self, name: &str, value: f64) {
        let slot = self.metrics.entry(name.to_string()).or_insert(0.0);
        *slot = slot.max(value);
    }
}

fn max_entry_diff<'a>(
    a: impl IntoIterator<Item = &'a Complex64>,
    b: impl IntoIterator<Item = &'a Complex64>,
) -> f64 {
    a.into_iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Execute a validated configuration.
///
/// Sample indices are basis indices for states, `row * dim + col` for
/// matrices, and for `coeffs` the `t` column holds the power `n`.
pub fn run(cfg: &RunConfig) -> Result<ResultSet, CliError> {
    let mut out = ResultSet::new(cfg.command);
    let opts = cfg.series_options();
    match cfg.command {
        Command::Verify => {
            out.suites = run_all(cfg.seed);
            let failed: usize = out.suites.iter().map(|s| s.checks - s.passed).sum();
            out.metrics.insert("failed_checks".into(), failed as f64);
        }
        Command::Coeffs => {
            let energies = match &cfg.system {
                System::Energies(e) => e.clone(),
                System::Split(h) => h.energies().to_vec(),
                _ => {
                    return Err(CliError::config(
                        "system.energies",
                        "required by the coeffs command",
                    ))
                }
            };
            let e = EnergyVector::new(energies)
                .map_err(|e| CliError::config("system.energies", e.to_string()))?;
            for n in 0..=cfg.order as u32 {
                let value = coeff_auto(&e, n, cfg.tolerances.degeneracy);
                let reference = coeff_def(&e, n as i64).map_err(CliError::core("coeffs"))?;
                out.raise_metric(
                    "route_disagreement",
                    (value - reference).abs() / reference.abs().max(1.0),
                );
                out.samples
                    .push(Sample::new(n as f64, e.order(), Complex64::new(value, 0.0)));
            }
        }
        Command::Propagate => {
            let h = cfg.hamiltonian()?;
            for t in cfg.time.times() {
                let terms = series_terms(&h, cfg.order, t, opts.evaluator, &opts.paths)
                    .map_err(CliError::core("propagate"))?;
                let u = sum_terms(&terms);
                let exact = dense_exp(&h.full(), t);
                out.raise_metric(
                    "oracle_max_error",
                    max_entry_diff(u.transpose().iter(), exact.transpose().iter()),
                );
                out.raise_metric("truncation_bound", truncation_bound(&h, cfg.order, t));
                out.push_all(t, u.transpose().iter());
            }
        }
        Command::Evolve => {
            let h = cfg.hamiltonian()?;
            let psi0 = cfg.initial_state(h.dim())?;
            for t in cfg.time.times() {
                let psi = evolve_state(&h, &psi0, cfg.order, t, &opts)
                    .map_err(CliError::core("evolve"))?;
                let exact = evolve_state_exact(&h, &psi0, t).map_err(CliError::core("evolve"))?;
                out.raise_metric(
                    "oracle_max_error",
                    max_entry_diff(psi.amplitudes().iter(), exact.amplitudes().iter()),
                );
                out.raise_metric("norm_deviation", (psi.norm() - 1.0).abs());
                out.push_all(t, psi.amplitudes().iter());
            }
        }
        Command::Density => {
            let h = cfg.hamiltonian()?;
            let rho0 = DensityMatrix::pure(&cfg.initial_state(h.dim())?);
            for t in cfg.time.times() {
                let rho = evolve_density(&h, &rho0, cfg.order, t, &opts)
                    .map_err(CliError::core("density"))?;
                let exact =
                    evolve_density_exact(&h, &rho0, t).map_err(CliError::core("density"))?;
                out.raise_metric(
                    "oracle_max_error",
                    max_entry_diff(
                        rho.matrix().transpose().iter(),
                        exact.matrix().transpose().iter(),
                    ),
                );
                out.raise_metric(
                    "trace_deviation",
                    (rho.trace() - Complex64::new(1.0, 0.0)).norm(),
                );
                out.raise_metric("hermitian_deviation", rho.hermitian_deviation());
                out.push_all(t, rho.matrix().transpose().iter());
            }
        }
        Command::Lattice => {
            let System::Lattice { lattice, packet } = &cfg.system else {
                return Err(CliError::config(
                    "system.lattice",
                    "required by the lattice command",
                ));
            };
            let psi0 = gaussian_packet(lattice, packet.center, packet.width, packet.momentum);
            for t in cfg.time.times() {
                let psi = evolve_wavefunction(lattice, &psi0, cfg.order, t, &opts)
                    .map_err(CliError::core("lattice"))?;
                let exact = evolve_wavefunction_exact(lattice, &psi0, t)
                    .map_err(CliError::core("lattice"))?;
                out.raise_metric("oracle_max_error", max_entry_diff(psi.iter(), exact.iter()));
                let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                out.raise_metric("norm_deviation", (norm - 1.0).abs());
                out.push_all(t, psi.iter());
            }
        }
        Command::Ptcheck => {
            let h = cfg.hamiltonian()?;
            let tol = cfg.tolerances.degeneracy;
            let mut failed = 0;
            for k in 1..=cfg.order.max(1) as u32 {
                let rep = stationary_consistency(&h, k).map_err(CliError::core("ptcheck"))?;
                out.metrics
                    .insert(format!("stationary_residual_k{k}"), rep.max_residual);
                failed += usize::from(rep.max_residual > cfg.tolerances.oracle);
            }
            let alpha = match cfg.initial {
                Initial::Basis(i) if i < h.dim() => i,
                _ => {
                    return Err(CliError::config(
                        "system.initial",
                        "ptcheck needs a basis index in range",
                    ))
                }
            };
            let paths = opts.paths;
            for t in cfg.time.times() {
                for l in 1..=cfg.order {
                    let tc =
                        tdpt_coeffs(&h, alpha, l, t, tol).map_err(CliError::core("ptcheck"))?;
                    let a = term_matrix(&h, l, t, &paths)
                        .map_err(CliError::core("ptcheck"))?
                        .matrix;
                    let diff = max_entry_diff(tc.c.iter(), a.column(alpha).iter());
                    failed += usize::from(diff > cfg.tolerances.oracle);
                    out.raise_metric("tdpt_max_diff", diff);
                    if l == cfg.order {
                        out.push_all(t, tc.c.iter());
                    }
                }
            }
            out.metrics.insert("failed_checks".into(), failed as f64);
        }
    }
    Ok(out)
}

/// Shortest decimal that parses back to the same `f64`; `-0` prints as `0`.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let a = x.abs();
    if a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub const ROWS_HEADER: &str = "t index re im abs2";

pub fn write_output<W: Write>(results: &ResultSet, format: Format, w: &mut W) -> io::Result<()> {
    match format {
        Format::Rows => {
            writeln!(w, "{ROWS_HEADER}")?;
            for s in &results.samples {
                writeln!(
                    w,
                    "{} {} {} {} {}",
                    format_number(s.t),
                    s.index,
                    format_number(s.re),
                    format_number(s.im),
                    format_number(s.abs2())
                )?;
            }
        }
        Format::Structured => {
            serde_json::to_writer_pretty(&mut *w, results)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

fn emit(results: &ResultSet, format: Format, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let io_err = |source| CliError::Io {
                target: path.display().to_string(),
                source,
            };
            let mut file = io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
            write_output(results, format, &mut file).map_err(io_err)?;
            file.flush().map_err(io_err)
        }
        None => {
            write_output(results, format, &mut io::stdout().lock()).map_err(|source| CliError::Io {
                target: "stdout".into(),
                source,
            })
        }
    }
}

fn summarize(results: &ResultSet) {
    for s in &results.suites {
        eprintln!(
            "{:<14} {:>4}/{:<4} worst {:e} (tolerance {:e}) {}",
            s.name,
            s.passed,
            s.checks,
            s.worst_residual,
            s.tolerance,
            if s.ok() { "ok" } else { "FAIL" }
        );
    }
    for (k, v) in &results.metrics {
        eprintln!("{k} = {}", format_number(*v));
    }
}

#[derive(Debug, Parser)]
#[command(name = "qseries", about = "Path-sum series for split Hamiltonians")]
pub struct Args {
    pub command: Command,
    /// TOML run description; optional for `verify`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Parse, run, emit; returns the process exit status.
pub fn execute(args: &Args) -> Result<(), CliError> {
    let text = match &args.config {
        Some(path) => std::fs::read_to_string(path).map_err(|source| CliError::Io {
            target: path.display().to_string(),
            source,
        })?,
        None if args.command == Command::Verify => String::new(),
        None => return Err(CliError::config("--config", "required for this command")),
    };
    let overrides = Overrides {
        command: Some(args.command),
        order: args.order,
        seed: args.seed,
        format: args.format,
        out: args.out.clone(),
    };
    let cfg = parse_config_with(&text, &overrides)?;
    let results = run(&cfg)?;
    emit(&results, cfg.format, cfg.out.as_deref())?;
    summarize(&results);
    match results.metrics.get("failed_checks") {
        Some(&n) if n > 0.0 => Err(CliError::VerifyFailed(n as usize)),
        _ => Ok(()),
    }
}

pub fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
