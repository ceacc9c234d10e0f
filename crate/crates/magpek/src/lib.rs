//! Numerical toolkit for the magnetic Pekar functional on a discretized 3D box.
//!
//! The energy under study is
//!
//! ```text
//!   E(φ) = ∫ (|D_A φ|² + V|φ|²) dx − ∫∫ |φ(x)|²|φ(y)|²/|x−y| dx dy,
//! ```
//!
//! with `D_A = −i∇ + A` and the mass constraint `∫|φ|² = 1`. The crate
//! computes constrained minimizers and the minimal energies `C^{A,V}(λ)`,
//! checks the Euler–Lagrange structure of the minimizers, and probes the
//! two-polaron binding mechanism of the Pekar–Tomasevich functional with
//! explicit rank-2 trial states.
//!
//! Module map:
//! - [`fieldgrid`]: uniform centered box, complex/real scalar fields, norms.
//! - [`potentials`]: vector/scalar potentials, Peierls gauge links, magnetic
//!   translations.
//! - [`operators`]: link Laplacian, free-space Coulomb convolution, the
//!   linearized Hamiltonian and a Lanczos lowest-eigenpair solver.
//! - [`pekar`]: constrained minimization, λ-scans, inequality diagnostics.
//! - [`tomasevich`]: rank-2 Pekar–Tomasevich energies and binding scans.
//! - [`radial`]: independent 1D radial solver for the A = 0, V = 0 ground
//!   state (calibration oracle).
//! - [`config`] / [`report`] / [`invariants`]: experiment runner plumbing.

pub mod config;
pub mod fft;
pub mod fieldgrid;
pub mod invariants;
pub mod operators;
pub mod pekar;
pub mod potentials;
pub mod radial;
pub mod report;
pub mod tomasevich;
mod tridiag;

use num_complex::Complex64;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("unsupported gauge: {0}")]
    UnsupportedGauge(String),
    #[error("eigensolver iteration limit after {iterations} iterations (best value {best_value}, residual {residual})")]
    EigenIterationLimit {
        iterations: usize,
        best_value: f64,
        residual: f64,
        best_vector: Box<fieldgrid::ComplexField3>,
    },
    #[error("self-consistency loop failed to converge: {0}")]
    ScfNonConvergence(String),
    #[error("grid too large for brute-force evaluation: {0} points per axis")]
    GridTooLarge(usize),
    #[error("radius below grid resolution: r = {r}, h = {h}")]
    DegenerateRadius { r: f64, h: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);
