//! Simulation and certification toolkit for systems of coupled cubic
//! nonlinear Schrödinger equations in one space dimension,
//!
//! ```text
//!     i ∂_t u_j + (1/2m_j) ∂_x² u_j = F_j(u),     j = 1..N,
//! ```
//!
//! where `F` is a cubic homogeneous polynomial in `(u, conj u)` and the
//! masses `m_j` are positive constants.
//!
//! The crate is organized in four layers:
//!
//! * [`algebra`] — exact representation of cubic nonlinearities, the
//!   mass-resonance (gauge invariance) checker, and sphere-search
//!   certification of the dissipativity conditions `Im(F(z)·Az) ≤ 0`
//!   and `-C_*|z|⁴ ≤ Im(F(z)·Az) ≤ -C^*|z|⁴`.
//! * [`spectral`] — periodic grids, FFTs in the symmetric `1/√(2π)`
//!   continuous convention, the free propagator, and the operator
//!   toolbox used for asymptotic profile extraction.
//! * [`solver`] — Strang-split pseudospectral time stepping with
//!   observers, guards, and initial-data construction.
//! * [`asymptotics`] — the reduced profile ODE in logarithmic time,
//!   PDE/ODE comparison, decay-law fitting, and the optimality check
//!   for the `t^{-1/2}(log t)^{-1/2}` amplitude law.

pub mod algebra;
pub mod asymptotics;
pub mod error;
pub mod optim;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
