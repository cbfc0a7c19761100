use crate::error::{Error, Result};
use crate::profiles::DensityProfile;
use crate::spectral::{
    gradient, inverse_laplacian, Field, MetricField, Parity, ProjectionOptions, SlabGrid, Space,
    VectorField,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Physics {
    pub mu: f64,
    pub g: f64,
    pub lambda: f64,
    pub m: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    pub projection: ProjectionOptions,
    /// Admissible range of the Jacobian.
    pub j_band: (f64, f64),
    /// Advective Courant number.
    pub cfl: f64,
    /// Fixed-point passes over the explicit terms (2 gives Heun).
    pub picard: usize,
    pub linear_tol: f64,
    pub linear_max_iter: usize,
    pub max_clamp_fraction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            projection: ProjectionOptions::default(),
            j_band: (0.5, 1.5),
            cfl: 0.5,
            picard: 2,
            linear_tol: 1e-13,
            linear_max_iter: 200,
            max_clamp_fraction: 0.01,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub physics: Physics,
    pub grid: SlabGrid,
    pub profile: DensityProfile,
    pub dt: f64,
    pub dt_min: f64,
    pub t_end: f64,
    /// Time between energy reports.
    pub report_interval: f64,
    pub tolerances: Tolerances,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let p = &self.physics;
        if !(p.mu > 0.0 && p.lambda > 0.0 && p.g >= 0.0 && p.m.is_finite()) {
            return Err(Error::InvalidInput(
                "need mu > 0, lambda > 0, g >= 0".into(),
            ));
        }
        if !(self.dt > 0.0 && self.dt_min > 0.0 && self.dt_min <= self.dt) {
            return Err(Error::InvalidInput("need 0 < dt_min <= dt".into()));
        }
        if !(self.t_end >= 0.0 && self.report_interval > 0.0) {
            return Err(Error::InvalidInput(
                "need t_end >= 0 and a positive report interval".into(),
            ));
        }
        if (self.profile.h() - self.grid.h()).abs() > 1e-12 * self.grid.h() {
            return Err(Error::InvalidInput(
                "profile height differs from grid height".into(),
            ));
        }
        Ok(())
    }
}

/// Lagrangian unknowns at one instant, plus cached derived quantities.
#[derive(Clone, Debug)]
pub struct FlowState {
    pub t: f64,
    /// Displacement of the flow map, spectral.
    pub eta: VectorField,
    /// Velocity, spectral.
    pub u: VectorField,
    /// Pressure, spectral, zero mean.
    pub q: Field,
    /// `u_t` reconstructed from the momentum equation, spectral.
    pub ut: VectorField,
    pub metric: MetricField,
    /// `‖div_A u‖₀ / ‖∇u‖₀` after the last projection.
    pub div_residual: f64,
}

impl FlowState {
    /// The equilibrium: every field zero.
    pub fn zero(grid: SlabGrid) -> Self {
        Self {
            t: 0.0,
            eta: VectorField::zeros(grid, Space::Spectral),
            u: VectorField::zeros(grid, Space::Spectral),
            q: Field::zeros(grid, Parity::Neumann, Space::Spectral),
            ut: VectorField::zeros(grid, Space::Spectral),
            metric: MetricField::identity(grid),
            div_residual: 0.0,
        }
    }

    pub fn grid(&self) -> &SlabGrid {
        self.eta.grid()
    }

    /// `B = m∂₁(y + η)` in physical space.
    pub fn magnetic_field(&self, m: f64) -> (Field, Field) {
        let b1 = self.eta.c1.ddy1().physical().map_values(|v| m * (1.0 + v));
        let b2 = self.eta.c2.ddy1().physical().scale(m);
        (b1, b2)
    }

    pub fn j_drift(&self) -> f64 {
        let (lo, hi) = self.metric.j_range();
        (1.0 - lo).max(hi - 1.0)
    }

    /// `|∫ρ̄ f₁| / ∫ρ̄` by the trapezoid rule.
    pub fn weighted_mean(f1: &Field, rho: &[f64]) -> f64 {
        let w = Field::from_fn(*f1.grid(), Parity::Neumann, |_, _| 1.0).mul_vertical(rho);
        f1.mul(&w).integral() / w.integral()
    }
}

/// `A = (I + ∇η)^{-T}` and `J`, rejecting degenerate flow maps.
pub fn build_a(eta: &VectorField) -> Result<MetricField> {
    build_a_with(eta, 0.5, 0.0)
}

pub(crate) fn build_a_with(eta: &VectorField, j_min: f64, t: f64) -> Result<MetricField> {
    let metric = MetricField::from_eta(eta);
    let (lo, hi) = metric.j_range();
    if !(lo >= j_min) {
        return Err(Error::JacobianOutOfBand { t, j: lo });
    }
    if !hi.is_finite() {
        return Err(Error::NonFinite("Jacobian"));
    }
    Ok(metric)
}

/// Newton sweeps `η ← η + ∇φ`, `Δφ = 1 − J`, pushing the flow map back to
/// unit Jacobian. `∇φ` has no horizontal mean, so weighted means of `η₁`
/// are untouched.
pub(crate) fn restore_volume(eta: &VectorField, tol: f64, max_sweeps: usize) -> VectorField {
    let mut eta = eta.spectral();
    for _ in 0..max_sweeps {
        let metric = MetricField::from_eta(&eta);
        let (lo, hi) = metric.j_range();
        if (1.0 - lo).max(hi - 1.0) <= tol {
            break;
        }
        let defect = metric.j.map_values(|j| 1.0 - j).spectral();
        let phi = inverse_laplacian(&defect);
        eta = &eta + &gradient(&phi).remove_nyquist();
    }
    eta
}
