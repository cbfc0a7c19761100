//! Semi-implicit time stepping.
//!
//! Viscosity and magnetic tension are treated by Crank–Nicolson together
//! with `η_t = u`; gravity, the metric corrections `μ(Δ_A − Δ)u` and
//! `(∇_A − ∇)q`, and the constraint defect `div u − div_A u` are explicit
//! and iterated to second order. The variable density in the implicit
//! operator is handled by Richardson iteration around the mean density,
//! which keeps every inner solve diagonal per mode.

use std::cell::Cell;
use std::time::{Duration, Instant};

use super::state::{build_a_with, restore_volume, FlowState, SimConfig};
use crate::energetics::{EnergyReport, ReportContext};
use crate::error::{Error, Result};
use crate::profiles::eval_gravity_term;
use crate::spectral::{
    apply_diagonal, divergence, gradient, inverse_laplacian, laplacian, leray_project,
    project_div_free, Field, MetricField, Parity, Space, VectorField,
};

/// Target for `max|J − 1|` after each step.
pub(crate) const VOLUME_TOL: f64 = 1e-13;

/// Per-run bookkeeping of the structural invariants.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InvariantCounters {
    pub steps: usize,
    pub dt_halvings: usize,
    pub clamp_events: usize,
    pub max_div_residual: f64,
    pub max_j_drift: f64,
    pub max_mean_u1: f64,
    pub max_mean_eta1: f64,
    pub max_projection_iterations: usize,
    pub max_linear_iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Termination {
    Completed,
    Aborted { reason: String, numerical: bool },
}

#[derive(Debug)]
pub struct RunResult {
    pub termination: Termination,
    pub wall_time: Duration,
    pub counters: InvariantCounters,
    pub reports: Vec<EnergyReport>,
    /// Last state that satisfied all checks.
    pub final_state: FlowState,
}

/// Receives every energy report during a run.
pub trait Reporter {
    fn on_report(&mut self, state: &FlowState, report: &EnergyReport) -> Result<()>;
}

/// Precomputed per-run data and the single-step machinery.
pub struct Stepper<'a> {
    cfg: &'a SimConfig,
    rho: Vec<f64>,
    inv_rho: Vec<f64>,
    rho_ref: f64,
    clamp_events: Cell<usize>,
    linear_iterations: Cell<usize>,
    projection_iterations: Cell<usize>,
}

fn drop_constant(f: &Field) -> Field {
    let mut s = f.spectral().remove_nyquist();
    s.set(0, 0, 0.0);
    s
}

fn weighted_mean_shift(f: &mut Field, rho: &[f64]) -> f64 {
    let mean = FlowState::weighted_mean(f, rho);
    if mean != 0.0 {
        let shift = Field::from_fn(*f.grid(), Parity::Neumann, |_, _| mean).to_space(f.space());
        f.axpy(-1.0, &shift);
    }
    mean
}

impl<'a> Stepper<'a> {
    pub fn new(cfg: &'a SimConfig) -> Result<Self> {
        cfg.validate()?;
        let rho = cfg.profile.on_grid(&cfg.grid);
        let inv_rho = rho.iter().map(|r| 1.0 / r).collect();
        let (lo, hi) = rho
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(*r), b.max(*r)));
        Ok(Self {
            cfg,
            rho,
            inv_rho,
            rho_ref: 0.5 * (lo + hi),
            clamp_events: Cell::new(0),
            linear_iterations: Cell::new(0),
            projection_iterations: Cell::new(0),
        })
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    fn note_projection(&self, iterations: usize) {
        self.projection_iterations
            .set(self.projection_iterations.get().max(iterations));
    }

    /// `ρ̄·v` sampled on the grid, returned spectral.
    fn rho_times(&self, v: &VectorField, weight: &[f64]) -> VectorField {
        VectorField::from_parts(
            v.c1.mul_vertical(weight).spectral(),
            v.c2.mul_vertical(weight).spectral(),
        )
    }

    /// Gravity (linear part kept whole, remainder dealiased) plus the
    /// viscous metric correction `μ(Δ_A − Δ)u`.
    fn forcing(&self, eta: &VectorField, u: &VectorField, a: &MetricField) -> Result<VectorField> {
        let p = self.cfg.physics;
        let grav = eval_gravity_term(
            &self.cfg.profile,
            p.g,
            &eta.c2,
            self.cfg.tolerances.max_clamp_fraction,
        )?;
        self.clamp_events
            .set(self.clamp_events.get() + grav.clamped);
        let linear = (&grav.g_eta - &grav.g_cal).spectral();
        let visc = |c: &Field| {
            let mut d = a.laplacian(c).spectral();
            d.axpy(-1.0, &laplacian(c));
            d.scale(p.mu)
        };
        let mut f1 = visc(&u.c1);
        let mut f2 = visc(&u.c2);
        f2.axpy(1.0, &grav.g_cal.spectral());
        f1 = f1.dealias();
        f2 = f2.dealias();
        f2.axpy(1.0, &linear);
        Ok(VectorField::from_parts(
            f1.remove_nyquist(),
            f2.remove_nyquist(),
        ))
    }

    /// `−(∇_A − ∇)q`, dealiased.
    fn pressure_correction(&self, a: &MetricField, q: &Field) -> VectorField {
        let (g1, g2) = a.grad(q);
        let mut c1 = g1.spectral();
        c1.axpy(-1.0, &q.ddy1());
        let mut c2 = g2.spectral();
        c2.axpy(-1.0, &q.ddy2());
        VectorField::from_parts(c1.scale(-1.0).dealias(), c2.scale(-1.0).dealias())
    }

    /// `div u − div_A u`, dealiased, constant mode dropped.
    fn constraint_defect(&self, u: &VectorField, a: &MetricField) -> Field {
        let mut d = divergence(u).spectral();
        d.axpy(-1.0, &a.div_vec(u).spectral());
        drop_constant(&d.dealias())
    }

    /// Solve `ρ̄u/dt − (μ/2)Δu − (λm²dt/4)∂₁²u + ∇π = b`, `div u = d`.
    fn linear_solve(&self, b: &VectorField, d: &Field, dt: f64) -> Result<(VectorField, Field)> {
        let p = self.cfg.physics;
        let tol = &self.cfg.tolerances;
        let mag = p.lambda * p.m * p.m;
        let rho_ref = self.rho_ref;
        let implicit = move |k2: f64, kap2: f64| 0.5 * p.mu * (k2 + kap2) + 0.25 * mag * dt * k2;
        let phi = inverse_laplacian(&drop_constant(d));
        let grad_phi = gradient(&phi);
        let inv_dt: Vec<f64> = self.rho.iter().map(|r| r / dt).collect();
        let excess: Vec<f64> = self.rho.iter().map(|r| (r - rho_ref) / dt).collect();

        let mut g0 = b.spectral();
        g0.axpy(-1.0, &self.rho_times(&grad_phi, &inv_dt));
        g0.axpy(-1.0, &grad_phi.map(|c| apply_diagonal(c, implicit)));
        let precond = |g: &VectorField| {
            leray_project(g)
                .0
                .map(|c| apply_diagonal(c, |k2, kap2| 1.0 / (rho_ref / dt + implicit(k2, kap2))))
        };
        let mut g = g0.clone();
        let mut w = precond(&g);
        let mut iterations = 0;
        let uniform = excess.iter().all(|e| *e == 0.0);
        // Rounding in `g` limits how well `w` is determined.
        let rho_min = self.rho.iter().copied().fold(f64::INFINITY, f64::min);
        let floor = 1e3 * f64::EPSILON * g0.norm_l2() * dt / rho_min;
        if !uniform {
            loop {
                iterations += 1;
                g = &g0 - &self.rho_times(&w, &excess);
                let w_new = precond(&g);
                let change = (&w_new - &w).norm_l2();
                let size = w_new.norm_l2();
                w = w_new;
                if change <= (tol.linear_tol * size).max(floor) {
                    break;
                }
                if !change.is_finite() {
                    return Err(Error::NonFinite("implicit solve"));
                }
                if iterations >= tol.linear_max_iter {
                    return Err(Error::NoConvergence {
                        solver: "implicit solve",
                        iterations,
                        residual: change / size.max(1e-300),
                    });
                }
            }
        }
        self.linear_iterations
            .set(self.linear_iterations.get().max(iterations));
        let pi = inverse_laplacian(&divergence(&g.remove_nyquist()));
        let mut u = w;
        u.axpy(1.0, &grad_phi);
        Ok((u, pi))
    }

    /// Recompute `q` and `u_t` at the state's time from the momentum
    /// equation and the differentiated constraint.
    pub fn reconstruct(&self, state: &mut FlowState) -> Result<()> {
        let p = self.cfg.physics;
        let a = &state.metric;
        let mag = p.lambda * p.m * p.m;
        let grav = eval_gravity_term(
            &self.cfg.profile,
            p.g,
            &state.eta.c2,
            self.cfg.tolerances.max_clamp_fraction,
        )?;
        let mut r1 = a.laplacian(&state.u.c1).scale(p.mu);
        r1.axpy(mag, &state.eta.c1.ddy1().ddy1());
        let mut r2 = a.laplacian(&state.u.c2).scale(p.mu);
        r2.axpy(mag, &state.eta.c2.ddy1().ddy1());
        r2.axpy(1.0, &grav.g_eta);
        let w = VectorField::from_parts(
            r1.mul_vertical(&self.inv_rho),
            r2.mul_vertical(&self.inv_rho),
        );
        let target = transport_term(&state.u, a);
        let proj = project_div_free(
            &w,
            a,
            &self.rho,
            Some(&target),
            &self.cfg.tolerances.projection,
        )?;
        self.note_projection(proj.iterations);
        state.q = proj.q;
        state.ut = proj.u;
        Ok(())
    }

    /// One step of size `dt`.
    pub fn advance(&self, s: &FlowState, dt: f64) -> Result<FlowState> {
        let cfg = self.cfg;
        let p = cfg.physics;
        let tol = &cfg.tolerances;
        let mag = p.lambda * p.m * p.m;
        let t_new = s.t + dt;

        // Explicit part of the Crank–Nicolson right-hand side.
        let inv_dt: Vec<f64> = self.rho.iter().map(|r| r / dt).collect();
        let mut b_lin = self.rho_times(&s.u, &inv_dt);
        b_lin.axpy(0.5 * p.mu, &s.u.map(laplacian));
        let mut tension = s.eta.scale(2.0);
        tension.axpy(0.5 * dt, &s.u);
        b_lin.axpy(0.5 * mag, &tension.map(|c| c.ddy1().ddy1()));

        let f_old = self.forcing(&s.eta, &s.u, &s.metric)?;
        let advance_eta = |u_new: &VectorField| {
            let mut e = s.eta.clone();
            e.axpy(0.5 * dt, &s.u);
            e.axpy(0.5 * dt, u_new);
            e
        };

        let mut rhs = b_lin.clone();
        rhs.axpy(1.0, &f_old);
        rhs.axpy(1.0, &self.pressure_correction(&s.metric, &s.q));
        let (mut u_star, mut pi_star) =
            self.linear_solve(&rhs, &self.constraint_defect(&s.u, &s.metric), dt)?;
        let mut eta_star = advance_eta(&u_star);
        for _ in 1..tol.picard.max(1) {
            let a_star = build_a_with(&eta_star, tol.j_band.0, t_new)?;
            let f_new = self.forcing(&eta_star, &u_star, &a_star)?;
            let mut rhs = b_lin.clone();
            rhs.axpy(0.5, &f_old);
            rhs.axpy(0.5, &f_new);
            rhs.axpy(0.5, &self.pressure_correction(&s.metric, &pi_star));
            rhs.axpy(0.5, &self.pressure_correction(&a_star, &pi_star));
            let defect = self.constraint_defect(&u_star, &a_star);
            (u_star, pi_star) = self.linear_solve(&rhs, &defect, dt)?;
            eta_star = advance_eta(&u_star);
        }

        // Enforce the constraint with the updated flow map.
        let a1 = build_a_with(&eta_star, tol.j_band.0, t_new)?;
        let proj = project_div_free(&u_star, &a1, &self.rho, None, &tol.projection)?;
        self.note_projection(proj.iterations);
        let mut eta = restore_volume(&advance_eta(&proj.u).remove_nyquist(), VOLUME_TOL, 3);
        weighted_mean_shift(&mut eta.c1, &self.rho);
        let a2 = build_a_with(&eta, tol.j_band.0, t_new)?;
        let (j_lo, j_hi) = a2.j_range();
        if !(j_lo >= tol.j_band.0 && j_hi <= tol.j_band.1) {
            let j = if j_lo < tol.j_band.0 { j_lo } else { j_hi };
            return Err(Error::JacobianOutOfBand { t: t_new, j });
        }
        let proj = project_div_free(&proj.u, &a2, &self.rho, None, &tol.projection)?;
        self.note_projection(proj.iterations);
        let mut u = proj.u;
        weighted_mean_shift(&mut u.c1, &self.rho);
        if !(u.is_finite() && eta.is_finite()) {
            return Err(Error::NonFinite("state"));
        }
        let mut next = FlowState {
            t: t_new,
            eta,
            u,
            q: pi_star,
            ut: VectorField::zeros(cfg.grid, Space::Spectral),
            metric: a2,
            div_residual: proj.residual,
        };
        self.reconstruct(&mut next)?;
        Ok(next)
    }

    /// Largest step not exceeding `dt_max` that meets the advective CFL bound.
    fn cfl_step(&self, s: &FlowState, dt_max: f64, halvings: &mut usize) -> Result<f64> {
        let g = &self.cfg.grid;
        let umax = s.u.max_abs();
        let limit = self.cfg.tolerances.cfl * g.dy1().min(g.dy2());
        let mut dt = dt_max;
        while dt * umax > limit {
            dt *= 0.5;
            *halvings += 1;
            if dt < self.cfg.dt_min {
                return Err(Error::TimeStepCollapse { t: s.t, dt });
            }
        }
        Ok(dt)
    }
}

/// `[A(∇u)ᵀA]_lk ∂_k u_l`, the source in the differentiated constraint.
fn transport_term(u: &VectorField, a: &MetricField) -> Field {
    let d = [
        [u.c1.ddy1().physical(), u.c1.ddy2().physical()],
        [u.c2.ddy1().physical(), u.c2.ddy2().physical()],
    ];
    let am = [[&a.a11, &a.a12], [&a.a21, &a.a22]];
    let n = u.grid().len();
    let mut out = vec![0.0; n];
    for (idx, o) in out.iter_mut().enumerate() {
        let grad = |i: usize, j: usize| d[i][j].data()[idx];
        let av = |i: usize, j: usize| am[i][j].data()[idx];
        let mut s = 0.0;
        for l in 0..2 {
            for k in 0..2 {
                // M_lk = Σ A_la (∇u)_ba A_bk
                let mut m = 0.0;
                for aa in 0..2 {
                    for bb in 0..2 {
                        m += av(l, aa) * grad(bb, aa) * av(bb, k);
                    }
                }
                s += m * grad(l, k);
            }
        }
        *o = s;
    }
    let mut f = Field::zeros(*u.grid(), Parity::Neumann, Space::Physical);
    f.data_mut().copy_from_slice(&out);
    f
}

/// Advance one step of at most `cfg.dt`, respecting the CFL bound.
pub fn step(state: &FlowState, cfg: &SimConfig) -> Result<FlowState> {
    let stepper = Stepper::new(cfg)?;
    let mut halvings = 0;
    let dt = stepper.cfl_step(state, cfg.dt, &mut halvings)?;
    stepper.advance(state, dt)
}

/// Integrate from `initial` to `cfg.t_end`, reporting every
/// `cfg.report_interval`. Failures end the run early and are recorded in
/// the result rather than returned.
pub fn run(
    cfg: &SimConfig,
    initial: FlowState,
    reporters: &mut [&mut dyn Reporter],
) -> Result<RunResult> {
    let start = Instant::now();
    let stepper = Stepper::new(cfg)?;
    let ctx = ReportContext::new(cfg)?;
    let mut counters = InvariantCounters::default();
    let mut reports = Vec::new();
    let mut state = initial;

    let mut emit = |state: &FlowState,
                    counters: &mut InvariantCounters,
                    reports: &mut Vec<EnergyReport>|
     -> Result<()> {
        let report = ctx.report(state)?;
        counters.max_div_residual = counters.max_div_residual.max(state.div_residual);
        counters.max_j_drift = counters.max_j_drift.max(report.j_drift);
        counters.max_mean_u1 = counters.max_mean_u1.max(report.mean_u1.abs());
        counters.max_mean_eta1 = counters.max_mean_eta1.max(report.mean_eta1.abs());
        for r in reporters.iter_mut() {
            r.on_report(state, &report)?;
        }
        reports.push(report);
        Ok(())
    };

    let mut termination = Termination::Completed;
    if let Err(e) = emit(&state, &mut counters, &mut reports) {
        termination = Termination::Aborted {
            reason: e.to_string(),
            numerical: e.is_numerical(),
        };
    }
    let eps = 1e-9 * cfg.dt;
    let mut next_report = cfg.report_interval;
    while termination == Termination::Completed && state.t < cfg.t_end - eps {
        let target = next_report.min(cfg.t_end);
        let dt_cap = cfg.dt.min(target - state.t);
        let outcome = stepper
            .cfl_step(&state, dt_cap, &mut counters.dt_halvings)
            .and_then(|dt| stepper.advance(&state, dt));
        match outcome {
            Ok(mut next) => {
                if (next.t - target).abs() <= eps {
                    next.t = target;
                }
                counters.steps += 1;
                counters.max_div_residual = counters.max_div_residual.max(next.div_residual);
                counters.max_j_drift = counters.max_j_drift.max(next.j_drift());
                state = next;
                if state.t >= target - eps {
                    if target >= next_report - eps {
                        next_report += cfg.report_interval;
                    }
                    if let Err(e) = emit(&state, &mut counters, &mut reports) {
                        termination = Termination::Aborted {
                            reason: e.to_string(),
                            numerical: e.is_numerical(),
                        };
                    }
                }
            }
            Err(e) => {
                termination = Termination::Aborted {
                    reason: e.to_string(),
                    numerical: e.is_numerical(),
                };
            }
        }
    }
    counters.clamp_events = stepper.clamp_events.get();
    counters.max_linear_iterations = stepper.linear_iterations.get();
    counters.max_projection_iterations = stepper.projection_iterations.get();
    Ok(RunResult {
        termination,
        wall_time: start.elapsed(),
        counters,
        reports,
        final_state: state,
    })
}
