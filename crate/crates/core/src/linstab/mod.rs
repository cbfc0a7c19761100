//! Linear stability of the layered equilibrium.
//!
//! Per horizontal wavenumber `k`, the divergence-free perturbation is
//! `w = (−W₁(y₂) sin ky₁, W₂(y₂) cos ky₁)` with `W₁ = W₂′/k`. Expanding
//! `W₂ = Σ aⱼ sin(jπy₂/h)` turns every quadratic form into a small dense
//! matrix assembled from the cosine moments of `ρ̄` and `ρ̄′`. The production
//! path works with `W₂` alone; [`pencil`] keeps both velocity components plus
//! the pressure and serves as an independent check.

mod gram;
pub mod pencil;

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};
use crate::par;
use crate::profiles::DensityProfile;
use crate::spectral::{Space, VectorField};

pub use gram::VerticalMoments;

/// Physical constants entering the linear problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearParams {
    pub g: f64,
    pub lambda: f64,
    pub mu: f64,
}

/// Moment tables for one profile at a fixed number of vertical modes.
#[derive(Clone, Debug)]
pub struct LinearProblem {
    h: f64,
    modes: usize,
    params: LinearParams,
    rho: VerticalMoments,
    drho: VerticalMoments,
    max_slope: f64,
}

/// Transformed matrices for one wavenumber: `α(s)` is the top eigenvalue of
/// `xg − m²·xm − s·y`.
struct ModeOperators {
    chol: Cholesky<f64, Dyn>,
    xg: DMatrix<f64>,
    xm: DMatrix<f64>,
    y: DMatrix<f64>,
}

/// An unstable normal mode, real pattern
/// `w = (−W₁ sin ky₁, W₂ cos ky₁)`, `β = B cos ky₁`, growing like `e^{Λt}`.
#[derive(Clone, Debug)]
pub struct LinearMode {
    pub n: usize,
    pub k: f64,
    pub m: f64,
    pub lambda: f64,
    pub h: f64,
    /// Sine coefficients of `W₂`, index `j − 1` for `j = 1..=N`.
    pub w2: Vec<f64>,
    /// Cosine coefficients of `W₁`, index `j` for `j = 0..=N`.
    pub w1: Vec<f64>,
    /// Cosine coefficients of `B`, index `j` for `j = 0..=N`.
    pub beta: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DispersionEntry {
    pub n: usize,
    pub k: f64,
    pub lambda: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DispersionCurve {
    pub m: f64,
    pub entries: Vec<DispersionEntry>,
}

#[derive(Clone, Debug)]
pub struct CriticalField {
    pub mc: f64,
    pub argmax_n: usize,
    pub argmax_k: f64,
    /// `(n, μ_max)` for every scanned `n`.
    pub scan: Vec<(usize, f64)>,
    /// Sine coefficients of the maximizing eigenfunction, unit max norm.
    pub profile: Vec<f64>,
    pub stable_for_all_m: bool,
    /// `(h/π)·sqrt(g·max ρ̄′⁺/λ)`.
    pub bound: f64,
}

fn kappa(h: f64, j: usize) -> f64 {
    j as f64 * PI / h
}

fn sine_sum(coef: &[f64], h: f64, y: f64, offset: usize) -> f64 {
    coef.iter()
        .enumerate()
        .map(|(i, c)| c * (kappa(h, i + offset) * y).sin())
        .sum()
}

fn cosine_sum(coef: &[f64], h: f64, y: f64) -> f64 {
    coef.iter()
        .enumerate()
        .map(|(j, c)| c * (kappa(h, j) * y).cos())
        .sum()
}

impl LinearMode {
    pub fn w2_at(&self, y: f64) -> f64 {
        sine_sum(&self.w2, self.h, y, 1)
    }
    pub fn w1_at(&self, y: f64) -> f64 {
        cosine_sum(&self.w1, self.h, y)
    }
    pub fn beta_at(&self, y: f64) -> f64 {
        cosine_sum(&self.beta, self.h, y)
    }

    /// `(y₂, W₁, W₂, B)` at `npts` equispaced heights including the walls.
    pub fn profile_table(&self, npts: usize) -> Vec<[f64; 4]> {
        let npts = npts.max(2);
        (0..npts)
            .map(|i| {
                let y = self.h * i as f64 / (npts - 1) as f64;
                [y, self.w1_at(y), self.w2_at(y), self.beta_at(y)]
            })
            .collect()
    }

    /// Velocity pattern on a 2D grid, scaled by `amplitude`. Vertical modes
    /// beyond the grid's resolution are dropped.
    pub fn velocity_field(
        &self,
        grid: &crate::spectral::SlabGrid,
        amplitude: f64,
    ) -> Result<VectorField> {
        let n = (self.k * grid.l()).round() as usize;
        if n == 0 || n >= grid.nyquist1() || (n as f64 / grid.l() - self.k).abs() > 1e-9 * self.k {
            return Err(Error::GridMismatch(format!(
                "wavenumber {} is not resolved by the grid",
                self.k
            )));
        }
        if (grid.h() - self.h).abs() > 1e-12 * self.h {
            return Err(Error::GridMismatch("mode and grid heights differ".into()));
        }
        let mut u = VectorField::zeros(*grid, Space::Spectral);
        let nv = grid.nv();
        let (pc, ps) = (grid.cos_slot(n), grid.sin_slot(n));
        for j in 1..grid.n2() {
            if let Some(a) = self.w2.get(j - 1) {
                u.c2.data_mut()[pc * nv + j] = amplitude * a;
            }
        }
        for j in 0..grid.n2() {
            if let Some(b) = self.w1.get(j) {
                u.c1.data_mut()[ps * nv + j] = -amplitude * b;
            }
        }
        Ok(u)
    }
}

impl LinearProblem {
    /// Build moment tables for `modes` vertical sine functions.
    pub fn new(profile: &DensityProfile, params: LinearParams, modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidInput(
                "need at least one vertical mode".into(),
            ));
        }
        if !(params.lambda > 0.0) {
            return Err(Error::InvalidInput(format!(
                "lambda must be positive, got {}",
                params.lambda
            )));
        }
        if !(params.g >= 0.0 && params.mu >= 0.0) {
            return Err(Error::InvalidInput("g and mu must be nonnegative".into()));
        }
        let h = profile.h();
        let breaks = profile.len() - 1;
        let pmax = 2 * modes + 2;
        let rho = VerticalMoments::new(|y| profile.eval(y), h, pmax, breaks);
        let drho = VerticalMoments::new(|y| profile.eval_d1(y), h, pmax, breaks);
        Ok(Self {
            h,
            modes,
            params,
            rho,
            drho,
            max_slope: profile.max_positive_slope(),
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn params(&self) -> LinearParams {
        self.params
    }
    pub(crate) fn rho_moments(&self) -> &VerticalMoments {
        &self.rho
    }
    pub(crate) fn drho_moments(&self) -> &VerticalMoments {
        &self.drho
    }

    fn kap(&self, j: usize) -> f64 {
        kappa(self.h, j)
    }

    /// `aᵀDa = k²‖√ρ̄ w‖²` per unit horizontal measure.
    fn mass_matrix(&self, k: f64) -> DMatrix<f64> {
        let n = self.modes;
        DMatrix::from_fn(n, n, |r, c| {
            let (i, j) = (r + 1, c + 1);
            self.kap(i) * self.kap(j) * self.rho.cosine(i, j) + k * k * self.rho.sine(i, j)
        })
    }

    fn operators(&self, k: f64) -> Result<ModeOperators> {
        let n = self.modes;
        let h2 = 0.5 * self.h;
        let p = self.params;
        let chol = Cholesky::new(self.mass_matrix(k)).ok_or_else(|| {
            Error::InvalidInput("density mass matrix is not positive definite".into())
        })?;
        let gmat = DMatrix::from_fn(n, n, |r, c| p.g * k * k * self.drho.sine(r + 1, c + 1));
        let diag = |f: &dyn Fn(f64) -> f64| {
            DMatrix::from_fn(n, n, |r, c| if r == c { f(self.kap(r + 1)) } else { 0.0 })
        };
        let mmat = diag(&|kap| p.lambda * k * k * (kap * kap + k * k) * h2);
        let vmat = diag(&|kap| p.mu * (kap * kap + k * k).powi(2) * h2);
        let congruence = |a: DMatrix<f64>| {
            let l = chol.l();
            let t = l.solve_lower_triangular(&a).expect("triangular solve");
            let t = l
                .solve_lower_triangular(&t.transpose())
                .expect("triangular solve");
            0.5 * (&t + t.transpose())
        };
        let xg = congruence(gmat);
        let xm = congruence(mmat);
        let y = congruence(vmat);
        Ok(ModeOperators { chol, xg, xm, y })
    }

    fn shifted(ops: &ModeOperators, m: f64, s: f64) -> DMatrix<f64> {
        &ops.xg - &ops.xm * (m * m) - &ops.y * s
    }

    fn top_eigenvalue(mat: DMatrix<f64>) -> f64 {
        mat.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn top_eigenpair(mat: DMatrix<f64>) -> (f64, DVector<f64>) {
        let eig = SymmetricEigen::new(mat);
        let (idx, val) =
            eig.eigenvalues
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, v)| {
                    if *v > best.1 {
                        (i, *v)
                    } else {
                        best
                    }
                });
        (val, eig.eigenvectors.column(idx).into_owned())
    }

    /// `α(s)` at wavenumber `k` and field strength `m`.
    pub fn alpha(&self, k: f64, m: f64, s: f64) -> Result<f64> {
        check_k(k)?;
        let ops = self.operators(k)?;
        Ok(Self::top_eigenvalue(Self::shifted(&ops, m, s)))
    }

    /// Growth rate at `(k, m)`, `None` when the mode is stable.
    pub fn growth_rate(&self, k: f64, m: f64) -> Result<Option<f64>> {
        check_k(k)?;
        if !(self.params.mu > 0.0) {
            return Err(Error::InvalidInput("growth rate needs mu > 0".into()));
        }
        let ops = self.operators(k)?;
        Ok(Self::solve_rate(&ops, m))
    }

    fn solve_rate(ops: &ModeOperators, m: f64) -> Option<f64> {
        let alpha = |s: f64| Self::top_eigenvalue(Self::shifted(ops, m, s));
        let a0 = alpha(0.0);
        if !(a0 > 0.0) {
            return None;
        }
        let (mut lo, mut hi) = (0.0, a0.sqrt());
        // Λ² − α(Λ) is increasing; negative at 0, nonnegative at sqrt(α(0)).
        for _ in 0..200 {
            if hi - lo <= 1e-14 * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid * mid - alpha(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }

    /// Eigenfunctions at `(n/L, m)`, normalized by `‖√ρ̄ w‖₀ = 1` on the
    /// vertical profile. `None` when stable.
    pub fn mode(&self, n: usize, l: f64, m: f64) -> Result<Option<LinearMode>> {
        let k = n as f64 / l;
        check_k(k)?;
        let ops = self.operators(k)?;
        let Some(lambda) = Self::solve_rate(&ops, m) else {
            return Ok(None);
        };
        let (_, z) = Self::top_eigenpair(Self::shifted(&ops, m, lambda));
        // z = Lᵀa; aᵀDa = |z|² = k²‖√ρ̄w‖².
        let a = ops
            .chol
            .l()
            .transpose()
            .solve_upper_triangular(&z)
            .expect("triangular solve");
        let scale = k / z.norm();
        let mut w2: Vec<f64> = a.iter().map(|v| v * scale).collect();
        // Fix the sign so the largest coefficient is positive.
        let big = w2
            .iter()
            .copied()
            .fold(0.0f64, |b, v| if v.abs() > b.abs() { v } else { b });
        if big < 0.0 {
            w2.iter_mut().for_each(|v| *v = -*v);
        }
        let mut w1 = vec![0.0; self.modes + 1];
        for j in 1..=self.modes {
            w1[j] = self.kap(j) * w2[j - 1] / k;
        }
        let beta = self.pressure_coefficients(k, m, lambda, &w1);
        Ok(Some(LinearMode {
            n,
            k,
            m,
            lambda,
            h: self.h,
            w2,
            w1,
            beta,
        }))
    }

    fn cos_norm2(&self, j: usize) -> f64 {
        if j == 0 {
            self.h
        } else {
            0.5 * self.h
        }
    }

    /// Pressure from the horizontal momentum balance, projected on cosines.
    fn pressure_coefficients(&self, k: f64, m: f64, lambda: f64, w1: &[f64]) -> Vec<f64> {
        let p = self.params;
        (0..=self.modes)
            .map(|l| {
                let nl = self.cos_norm2(l);
                let mass: f64 = (0..=self.modes)
                    .map(|j| self.rho.cosine(l, j) * w1[j])
                    .sum();
                let kap = self.kap(l);
                let rest = lambda * p.mu * (kap * kap + k * k) * nl * w1[l]
                    + p.lambda * m * m * k * k * nl * w1[l];
                -(lambda * lambda * mass + rest) / (lambda * k * nl)
            })
            .collect()
    }

    /// Galerkin residual of both momentum equations for a mode, relative to
    /// the mode's vertical H² size.
    pub fn mode_residual(&self, mode: &LinearMode) -> f64 {
        let (k, lam, m) = (mode.k, mode.lambda, mode.m);
        let p = self.params;
        let n = self.modes;
        let h2 = 0.5 * self.h;
        let mut r2 = 0.0;
        for l in 0..=n {
            let nl = self.cos_norm2(l);
            let kap = self.kap(l);
            let mass: f64 = (0..=n).map(|j| self.rho.cosine(l, j) * mode.w1[j]).sum();
            let r = lam * lam * mass
                + lam * k * nl * mode.beta[l]
                + lam * p.mu * (kap * kap + k * k) * nl * mode.w1[l]
                + p.lambda * m * m * k * k * nl * mode.w1[l];
            r2 += r * r / nl;
        }
        for l in 1..=n {
            let kap = self.kap(l);
            let mass: f64 = (1..=n).map(|j| self.rho.sine(l, j) * mode.w2[j - 1]).sum();
            let grav: f64 = (1..=n).map(|j| self.drho.sine(l, j) * mode.w2[j - 1]).sum();
            let r = lam * lam * mass - lam * kap * h2 * mode.beta[l]
                + lam * p.mu * (kap * kap + k * k) * h2 * mode.w2[l - 1]
                + p.lambda * m * m * k * k * h2 * mode.w2[l - 1]
                - p.g * grav;
            r2 += r * r / h2;
        }
        let h2norm: f64 = (1..=n)
            .map(|j| {
                let kap = self.kap(j);
                let s = 1.0 + kap * kap + k * k;
                (mode.w2[j - 1].powi(2) + mode.w1[j].powi(2)) * s * s * h2
            })
            .sum::<f64>()
            + mode.w1[0].powi(2) * self.h;
        r2.sqrt() / h2norm.sqrt()
    }

    /// `E(w)`, `‖√ρ̄w‖²` and `‖∇w‖²` of a mode per unit horizontal measure.
    pub fn mode_energies(&self, mode: &LinearMode) -> (f64, f64, f64) {
        let k = mode.k;
        let n = self.modes;
        let h2 = 0.5 * self.h;
        let a = &mode.w2;
        let p = self.params;
        let mut grav = 0.0;
        let mut mass = 0.0;
        for i in 1..=n {
            for j in 1..=n {
                let aa = a[i - 1] * a[j - 1];
                grav += aa * self.drho.sine(i, j);
                mass += aa
                    * (self.rho.sine(i, j)
                        + self.kap(i) * self.kap(j) * self.rho.cosine(i, j) / (k * k));
            }
        }
        let mut kin = 0.0;
        let mut grad = 0.0;
        for j in 1..=n {
            let kap = self.kap(j);
            let amp = a[j - 1].powi(2) * (1.0 + kap * kap / (k * k)) * h2;
            kin += amp;
            grad += amp * (kap * kap + k * k);
        }
        let energy = p.g * grav - p.lambda * mode.m * mode.m * k * k * kin;
        (energy, mass, grad)
    }

    /// Largest eigenvalue of `gρ̄′φ = μλ(−φ″ + k²φ)` and its eigenvector.
    fn rt_quotient(&self, k: f64) -> (f64, DVector<f64>) {
        let n = self.modes;
        let p = self.params;
        let h2 = 0.5 * self.h;
        let scale: Vec<f64> = (1..=n)
            .map(|j| 1.0 / (p.lambda * (self.kap(j).powi(2) + k * k) * h2).sqrt())
            .collect();
        let mat = DMatrix::from_fn(n, n, |r, c| {
            p.g * self.drho.sine(r + 1, c + 1) * scale[r] * scale[c]
        });
        let (val, vec) = Self::top_eigenpair(mat);
        let coef = DVector::from_iterator(n, vec.iter().zip(&scale).map(|(v, s)| v * s));
        (val, coef)
    }

    /// Critical field strength over the admissible wavenumbers `n/L`.
    pub fn critical_field(&self, l: f64) -> Result<CriticalField> {
        if !(l > 0.0) {
            return Err(Error::InvalidInput(format!("L must be positive, got {l}")));
        }
        let p = self.params;
        let bound = self.h / PI * (p.g * self.max_slope / p.lambda).sqrt();
        let mut scan = Vec::new();
        let mut best = (f64::NEG_INFINITY, 0usize, DVector::zeros(self.modes));
        let mut decreasing = 0;
        let mut prev = f64::INFINITY;
        for n in 1..=4096 {
            let (mu_max, vec) = self.rt_quotient(n as f64 / l);
            scan.push((n, mu_max));
            if mu_max > best.0 {
                best = (mu_max, n, vec);
            }
            decreasing = if mu_max < prev { decreasing + 1 } else { 0 };
            prev = mu_max;
            if decreasing >= 3 && n > best.1 + 2 {
                break;
            }
        }
        let (mu, argmax_n, vec) = best;
        let norm = vec.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let sign = if vec
            .iter()
            .copied()
            .fold(0.0f64, |b, v| if v.abs() > b.abs() { v } else { b })
            < 0.0
        {
            -1.0
        } else {
            1.0
        };
        let profile = vec.iter().map(|v| sign * v / norm).collect();
        let stable_for_all_m = !(mu > 0.0) || self.max_slope <= 0.0;
        Ok(CriticalField {
            mc: if stable_for_all_m { 0.0 } else { mu.sqrt() },
            argmax_n,
            argmax_k: argmax_n as f64 / l,
            scan,
            profile,
            stable_for_all_m,
            bound,
        })
    }

    /// Growth rates for `n = 1..=n_max` at field strength `m`.
    pub fn dispersion(&self, m: f64, l: f64, n_max: usize) -> Result<DispersionCurve> {
        let rates = par::map_range(n_max, |i| self.growth_rate((i + 1) as f64 / l, m));
        let mut entries = Vec::with_capacity(n_max);
        for (i, r) in rates.into_iter().enumerate() {
            entries.push(DispersionEntry {
                n: i + 1,
                k: (i + 1) as f64 / l,
                lambda: r?,
            });
        }
        Ok(DispersionCurve { m, entries })
    }

    /// Fastest-growing mode over `n = 1..=n_max`, `None` if all are stable.
    pub fn fastest_mode(&self, m: f64, l: f64, n_max: usize) -> Result<Option<LinearMode>> {
        let curve = self.dispersion(m, l, n_max)?;
        let best = curve
            .entries
            .iter()
            .filter_map(|e| e.lambda.map(|lam| (e.n, lam)))
            .fold(None, |acc: Option<(usize, f64)>, (n, lam)| match acc {
                Some((_, b)) if b >= lam => acc,
                _ => Some((n, lam)),
            });
        match best {
            None => Ok(None),
            Some((n, _)) => self.mode(n, l, m),
        }
    }

    /// `E(w) = g∫ρ̄′w₂² − λm²‖∂₁w‖₀²` for a 2D field.
    pub fn potential_energy(&self, w: &VectorField, m: f64) -> Result<f64> {
        let grid = *w.grid();
        if (grid.h() - self.h).abs() > 1e-12 * self.h || grid.n2() > self.modes + 1 {
            return Err(Error::GridMismatch(
                "moment tables do not cover the field's vertical modes".into(),
            ));
        }
        let w2 = w.c2.spectral();
        let nv = grid.nv();
        let mut grav = 0.0;
        for p in 0..grid.n1() {
            let col = &w2.data()[p * nv..(p + 1) * nv];
            let mut s = 0.0;
            for i in 1..grid.n2() {
                if col[i] == 0.0 {
                    continue;
                }
                for j in 1..grid.n2() {
                    s += col[i] * col[j] * self.drho.sine(i, j);
                }
            }
            grav += s * grid.hnorm2(p);
        }
        let mag = w.weighted_norm2(|k2, _| k2);
        Ok(self.params.g * grav - self.params.lambda * m * m * mag)
    }
}

fn check_k(k: f64) -> Result<()> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "wavenumber must be positive, got {k}"
        )))
    }
}

/// Scalar potential energy `E` for a field, with moment tables built on the fly.
pub fn potential_energy(
    w: &VectorField,
    m: f64,
    profile: &DensityProfile,
    g: f64,
    lambda: f64,
) -> Result<f64> {
    let problem = LinearProblem::new(profile, LinearParams { g, lambda, mu: 0.0 }, w.grid().n2())?;
    problem.potential_energy(w, m)
}

pub fn compute_mc(
    profile: &DensityProfile,
    g: f64,
    lambda: f64,
    l: f64,
    n2: usize,
) -> Result<CriticalField> {
    LinearProblem::new(profile, LinearParams { g, lambda, mu: 0.0 }, n2)?.critical_field(l)
}

#[allow(clippy::too_many_arguments)]
pub fn alpha_of_s(
    s: f64,
    k: f64,
    m: f64,
    profile: &DensityProfile,
    g: f64,
    lambda: f64,
    mu: f64,
    n2: usize,
) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "s must be nonnegative, got {s}"
        )));
    }
    LinearProblem::new(profile, LinearParams { g, lambda, mu }, n2)?.alpha(k, m, s)
}

pub fn growth_rate(
    k: f64,
    m: f64,
    profile: &DensityProfile,
    g: f64,
    lambda: f64,
    mu: f64,
    n2: usize,
) -> Result<Option<f64>> {
    LinearProblem::new(profile, LinearParams { g, lambda, mu }, n2)?.growth_rate(k, m)
}

#[allow(clippy::too_many_arguments)]
pub fn fastest_mode(
    m: f64,
    profile: &DensityProfile,
    g: f64,
    lambda: f64,
    mu: f64,
    l: f64,
    n_max: usize,
    n2: usize,
) -> Result<Option<LinearMode>> {
    LinearProblem::new(profile, LinearParams { g, lambda, mu }, n2)?.fastest_mode(m, l, n_max)
}

#[allow(clippy::too_many_arguments)]
pub fn dispersion_curve(
    m: f64,
    profile: &DensityProfile,
    g: f64,
    lambda: f64,
    mu: f64,
    l: f64,
    n_max: usize,
    n2: usize,
) -> Result<DispersionCurve> {
    LinearProblem::new(profile, LinearParams { g, lambda, mu }, n2)?.dispersion(m, l, n_max)
}
