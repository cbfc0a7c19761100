use super::state::{build_a, restore_volume, FlowState, SimConfig};
use super::step::{Stepper, VOLUME_TOL};
use crate::error::{Error, Result};
use crate::linstab::LinearMode;
use crate::spectral::{project_div_free, Field, Parity, VectorField};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeedOptions {
    /// Initial amplitude.
    pub delta: f64,
    /// Horizontal shift of the mode pattern.
    pub phase: f64,
    /// Amplitude, relative to `delta`, of an added horizontal shear
    /// `u₁ ∝ cos(πy₂/h)`. Zero keeps the odd-in-`y₁` symmetry of `η₁`.
    pub shear: f64,
}

impl SeedOptions {
    pub fn new(delta: f64) -> Self {
        Self {
            delta,
            phase: 0.0,
            shear: 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SeededState {
    pub state: FlowState,
    /// `‖u⁰ − δw‖₀`, the size of the constraint correction.
    pub correction: f64,
}

fn shift_horizontally(f: &Field, shift: f64) -> Field {
    if shift == 0.0 {
        return f.spectral();
    }
    let mut s = f.spectral();
    let g = *f.grid();
    let nv = g.nv();
    for n in 1..g.nyquist1() {
        let theta = g.k(n) * shift;
        let (c, sn) = (theta.cos(), theta.sin());
        let (pc, ps) = (g.cos_slot(n), g.sin_slot(n));
        for j in 0..nv {
            let a = s.at(pc, j);
            let b = s.at(ps, j);
            s.set(pc, j, a * c - b * sn);
            s.set(ps, j, a * sn + b * c);
        }
    }
    s
}

/// Initial data `(η⁰, u⁰) = δ(w/Λ, w)`. `η⁰` is corrected at second order
/// to unit Jacobian, `u⁰` is projected onto `div_{A⁰} u⁰ = 0`, and weighted
/// means are removed.
pub fn seed_initial_data(
    mode: &LinearMode,
    opts: SeedOptions,
    cfg: &SimConfig,
) -> Result<SeededState> {
    if !(mode.lambda > 0.0 && mode.lambda.is_finite()) {
        return Err(Error::InvalidInput("seed mode must be unstable".into()));
    }
    if !(opts.delta > 0.0 && opts.delta.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "delta must be positive, got {}",
            opts.delta
        )));
    }
    let grid = cfg.grid;
    let w = mode.velocity_field(&grid, opts.delta)?;
    let w = w.map(|c| shift_horizontally(c, opts.phase));
    let stepper = Stepper::new(cfg)?;
    let rho = stepper.rho().to_vec();

    let eta = w.scale(1.0 / mode.lambda).remove_nyquist();
    let mut eta = restore_volume(&eta, VOLUME_TOL, 5);
    remove_mean(&mut eta.c1, &rho);
    let mut u_lin = w;
    if opts.shear != 0.0 {
        let h = grid.h();
        let amp = opts.delta * opts.shear;
        let profile = Field::from_fn(grid, Parity::Neumann, |_, y| {
            amp * (std::f64::consts::PI * y / h).cos()
        });
        u_lin.c1.axpy(1.0, &profile);
    }
    let mut u_lin = u_lin.remove_nyquist();
    remove_mean(&mut u_lin.c1, &rho);

    let metric = build_a(&eta)?;
    let proj = project_div_free(&u_lin, &metric, &rho, None, &cfg.tolerances.projection)?;
    let mut u = proj.u;
    remove_mean(&mut u.c1, &rho);
    let correction = (&u - &u_lin).norm_l2();
    let mut state = FlowState {
        t: 0.0,
        eta,
        u,
        q: Field::zeros(grid, Parity::Neumann, crate::spectral::Space::Spectral),
        ut: VectorField::zeros(grid, crate::spectral::Space::Spectral),
        metric,
        div_residual: proj.residual,
    };
    stepper.reconstruct(&mut state)?;
    Ok(SeededState { state, correction })
}

fn remove_mean(f: &mut Field, rho: &[f64]) {
    let mean = FlowState::weighted_mean(f, rho);
    if mean != 0.0 {
        let shift = Field::from_fn(*f.grid(), Parity::Neumann, |_, _| mean).to_space(f.space());
        f.axpy(-1.0, &shift);
    }
}
