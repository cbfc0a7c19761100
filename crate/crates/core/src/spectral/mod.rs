//! Fourier × cosine/sine discretization of the periodic slab.
//!
//! Horizontally, fields are sampled at `N1` equispaced points over one
//! period `2πL`. Vertically there are `N2` intervals on `[0, h]`, sampled at
//! the `N2 + 1` points `j·h/N2` including both walls. Neumann-parity fields
//! expand in `cos(jπy₂/h)`, `j = 0..=N2`, and Dirichlet-parity fields in
//! `sin(jπy₂/h)`, `j = 1..N2`, so the wall conditions hold for every
//! coefficient vector.
//!
//! Spectral storage packs the horizontal Fourier series as
//! `[a₀, a₁, b₁, a₂, b₂, …, a_{N1/2}]` with `f = a₀ + Σ aₙ cos(kₙy₁) + bₙ sin(kₙy₁)`.
//! The vertical index runs over `0..=N2` for both parities; sine slots `0`
//! and `N2` are always zero.

mod field;
mod grid;
mod io;
mod solvers;
mod transform;

pub use field::{Field, Parity, PointBasis, Space, VectorField};
pub use grid::{HMode, SlabGrid};
pub use io::{read_field, write_field};
pub use solvers::{
    apply_diagonal, divergence, gradient, helmholtz_solve, inverse_laplacian, laplacian,
    leray_project, project_div_free, solve_stokes_navier, MetricField, Projection,
    ProjectionOptions,
};
