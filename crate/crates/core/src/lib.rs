//! Numerical laboratory for the magnetic Rayleigh-Taylor problem.
//!
//! A heavy fluid sits on a light one in the slab `2πL`-periodic × `(0, h)`,
//! with a horizontal magnetic field of strength `m` pushing back. The crate
//! provides the linear stability analysis (critical field strength, growth
//! rates, eigenmodes), a Lagrangian time integrator for the full nonlinear
//! system, and the energy diagnostics used to track decay or escape.
//!
//! Module map:
//! - [`profiles`]: equilibrium density profiles and the gravity term.
//! - [`spectral`]: cosine/sine × Fourier fields, transforms and solvers.
//! - [`linstab`]: critical field, dispersion relation, eigenmodes.
//! - [`dynamics`]: initial data and time integration.
//! - [`energetics`]: norms, energy functionals, fits and escape detection.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod energetics;
pub mod error;
pub mod linstab;
pub mod par;
pub mod profiles;
pub mod spectral;

pub use error::{Error, Result};
