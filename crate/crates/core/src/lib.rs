//! Pseudospectral laboratory for dispersive decay of the generalized KdV and
//! generalized Zakharov–Kuznetsov equations.
//!
//! The crate is organised in four layers:
//!
//! * [`spectral`]: periodic grids, the symmetric Fourier transform, Fourier
//!   multipliers (fractional derivatives, Littlewood–Paley blocks, linear
//!   propagators) and dealiasing masks.
//! * [`dynamics`]: integrating-factor RK4 evolution of gKdV/gZK with
//!   conservation tracking and a wraparound guard.
//! * [`analysis`]: Lebesgue/Sobolev/Lorentz/mixed norms, power-law decay
//!   fits and the inequality harness (dispersive, Strichartz, Kato smoothing,
//!   Kato–Ponce and fractional Leibniz).
//! * [`lab`]: experiment configuration, the scenario catalog, CSV/JSON
//!   emission and run manifests.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod lab;
pub mod spectral;

pub use error::{LabError, Result};
