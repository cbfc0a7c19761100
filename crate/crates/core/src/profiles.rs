//! Equilibrium density profiles, hydrostatic pressure and the gravity term.
//!
//! Profiles are stored as samples of `ρ̄`, `ρ̄′` and `ρ̄″` on a uniform grid
//! over `[0, h]` and evaluated between samples by cubic Hermite
//! interpolation. All parameters are dimensionless.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::spectral::{Field, SlabGrid};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProfileKind {
    Affine,
    TanhLayer,
    Tabulated,
}

impl ProfileKind {
    pub fn name(self) -> &'static str {
        match self {
            ProfileKind::Affine => "affine",
            ProfileKind::TanhLayer => "tanh",
            ProfileKind::Tabulated => "tabulated",
        }
    }
}

#[derive(Clone, Debug)]
pub struct DensityProfile {
    h: f64,
    rho: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    kind: ProfileKind,
    unresolved: bool,
}

#[derive(Clone, Debug)]
pub struct EquilibriumState {
    pub profile: DensityProfile,
    /// `P̄` at the profile sample points, zero mean.
    pub pressure: Vec<f64>,
    pub g: f64,
}

/// `G = g(ρ̄(y₂ + η₂) − ρ̄(y₂))` and its quadratic remainder `G − gρ̄′η₂`.
#[derive(Clone, Debug)]
pub struct GravityTerm {
    pub g_eta: Field,
    pub g_cal: Field,
    /// Grid points where `y₂ + η₂` left `[0, h]` and was clamped.
    pub clamped: usize,
}

impl DensityProfile {
    fn from_samples(
        h: f64,
        rho: Vec<f64>,
        d1: Vec<f64>,
        d2: Vec<f64>,
        kind: ProfileKind,
    ) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Profile(format!("height must be positive, got {h}")));
        }
        if rho.len() < 16 {
            return Err(Error::Profile(format!(
                "need at least 16 samples, got {}",
                rho.len()
            )));
        }
        if rho.iter().chain(&d1).chain(&d2).any(|v| !v.is_finite()) {
            return Err(Error::Profile("non-finite profile samples".into()));
        }
        let min = rho.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min > 0.0) {
            return Err(Error::Profile(format!(
                "density must be positive, min is {min}"
            )));
        }
        Ok(Self {
            h,
            rho,
            d1,
            d2,
            kind,
            unresolved: false,
        })
    }

    pub fn affine(rho_bottom: f64, rho_top: f64, h: f64, n: usize) -> Result<Self> {
        if !(rho_bottom > 0.0 && rho_top > 0.0) {
            return Err(Error::Profile("densities must be positive".into()));
        }
        if n < 16 {
            return Err(Error::Profile(format!("need at least 16 samples, got {n}")));
        }
        let slope = (rho_top - rho_bottom) / h;
        let rho = (0..n)
            .map(|i| rho_bottom + slope * (i as f64 * h / (n - 1) as f64))
            .collect();
        Self::from_samples(h, rho, vec![slope; n], vec![0.0; n], ProfileKind::Affine)
    }

    pub fn tanh_layer(
        rho_bottom: f64,
        rho_top: f64,
        center: f64,
        width: f64,
        h: f64,
        n: usize,
    ) -> Result<Self> {
        if !(rho_bottom > 0.0 && rho_top > 0.0) {
            return Err(Error::Profile("densities must be positive".into()));
        }
        if !(width > 0.0) || !(center > 0.0 && center < h) {
            return Err(Error::Profile(format!(
                "need width > 0 and 0 < center < h (width={width}, center={center})"
            )));
        }
        if n < 16 {
            return Err(Error::Profile(format!("need at least 16 samples, got {n}")));
        }
        let jump = rho_top - rho_bottom;
        let dy = h / (n - 1) as f64;
        let (mut rho, mut d1, mut d2) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for i in 0..n {
            let z = (i as f64 * dy - center) / width;
            let t = z.tanh();
            let sech2 = 1.0 - t * t;
            rho[i] = rho_bottom + jump * 0.5 * (1.0 + t);
            d1[i] = jump * 0.5 * sech2 / width;
            d2[i] = -jump * sech2 * t / (width * width);
        }
        let mut p = Self::from_samples(h, rho, d1, d2, ProfileKind::TanhLayer)?;
        p.unresolved = width < 2.0 * dy;
        Ok(p)
    }

    /// Profile from samples on a uniform grid; derivatives by finite
    /// differences (second order, one-sided at the ends).
    pub fn tabulated(h: f64, rho: Vec<f64>) -> Result<Self> {
        let n = rho.len();
        if n < 16 {
            return Err(Error::Profile(format!("need at least 16 samples, got {n}")));
        }
        let d1 = fd_derivative(&rho, h / (n - 1) as f64);
        let d2 = fd_derivative(&d1, h / (n - 1) as f64);
        Self::from_samples(h, rho, d1, d2, ProfileKind::Tabulated)
    }

    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn kind(&self) -> ProfileKind {
        self.kind
    }
    pub fn samples(&self) -> &[f64] {
        &self.rho
    }
    pub fn d1(&self) -> &[f64] {
        &self.d1
    }
    pub fn d2(&self) -> &[f64] {
        &self.d2
    }
    pub fn len(&self) -> usize {
        self.rho.len()
    }
    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }
    /// True when the sample spacing is too coarse for the layer width.
    pub fn unresolved(&self) -> bool {
        self.unresolved
    }
    pub fn dy(&self) -> f64 {
        self.h / (self.rho.len() - 1) as f64
    }
    pub fn sample_points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| i as f64 * self.dy()).collect()
    }

    pub fn min(&self) -> f64 {
        self.rho.iter().copied().fold(f64::INFINITY, f64::min)
    }
    pub fn max(&self) -> f64 {
        self.rho.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
    /// `max ρ̄′⁺`.
    pub fn max_positive_slope(&self) -> f64 {
        self.d1.iter().copied().fold(0.0, f64::max)
    }

    fn locate(&self, y: f64) -> (usize, f64) {
        let n = self.rho.len();
        let s = (y.clamp(0.0, self.h) / self.dy()).min((n - 1) as f64);
        let i = (s.floor() as usize).min(n - 2);
        (i, s - i as f64)
    }

    fn hermite(&self, v: &[f64], dv: &[f64], y: f64) -> f64 {
        let (i, t) = self.locate(y);
        let dy = self.dy();
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * v[i] + h10 * dy * dv[i] + h01 * v[i + 1] + h11 * dy * dv[i + 1]
    }

    /// `ρ̄(y)` for `y` in `[0, h]` (clamped outside).
    pub fn eval(&self, y: f64) -> f64 {
        self.hermite(&self.rho, &self.d1, y)
    }

    pub fn eval_d1(&self, y: f64) -> f64 {
        self.hermite(&self.d1, &self.d2, y)
    }

    pub fn eval_d2(&self, y: f64) -> f64 {
        let (i, t) = self.locate(y);
        (1.0 - t) * self.d2[i] + t * self.d2[i + 1]
    }

    /// `ρ̄` at the vertical grid heights.
    pub fn on_grid(&self, grid: &SlabGrid) -> Vec<f64> {
        grid.y2_points().iter().map(|&y| self.eval(y)).collect()
    }

    pub fn d1_on_grid(&self, grid: &SlabGrid) -> Vec<f64> {
        grid.y2_points().iter().map(|&y| self.eval_d1(y)).collect()
    }

    /// Hermite-exact integral of a sampled quantity with derivative samples.
    fn cumulative(&self, v: &[f64], dv: &[f64]) -> Vec<f64> {
        let dy = self.dy();
        let mut out = vec![0.0; v.len()];
        for i in 1..v.len() {
            out[i] =
                out[i - 1] + dy * 0.5 * (v[i - 1] + v[i]) + dy * dy / 12.0 * (dv[i - 1] - dv[i]);
        }
        out
    }

    /// Write the two-column `(y₂, ρ̄)` table.
    pub fn write_table<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# kind={} h={:e} n={}",
            self.kind.name(),
            self.h,
            self.len()
        )?;
        writeln!(w, "# y2 rho")?;
        for (y, r) in self.sample_points().iter().zip(&self.rho) {
            writeln!(w, "{y:.17e} {r:.17e}")?;
        }
        Ok(())
    }

    /// Read a two-column table. Rows must be on a uniform grid starting at 0.
    pub fn read_table<R: BufRead>(r: R) -> Result<Self> {
        let mut ys = Vec::new();
        let mut rho = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty());
            let parse = |s: Option<&str>| -> Result<f64> {
                s.and_then(|s| s.parse().ok()).ok_or_else(|| {
                    Error::Format(format!("line {}: expected two numbers", lineno + 1))
                })
            };
            ys.push(parse(cols.next())?);
            rho.push(parse(cols.next())?);
        }
        if ys.len() < 16 {
            return Err(Error::Profile(format!(
                "table has {} rows, need at least 16",
                ys.len()
            )));
        }
        let h = *ys.last().expect("nonempty");
        let dy = h / (ys.len() - 1) as f64;
        let uniform = ys
            .iter()
            .enumerate()
            .all(|(i, y)| (y - i as f64 * dy).abs() <= 1e-9 * h.abs().max(1.0));
        if !uniform {
            return Err(Error::Profile(
                "table rows must be uniformly spaced from y2 = 0".into(),
            ));
        }
        Self::tabulated(h, rho)
    }
}

fn fd_derivative(v: &[f64], dy: f64) -> Vec<f64> {
    let n = v.len();
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dy);
    d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * dy);
    for i in 1..n - 1 {
        d[i] = (v[i + 1] - v[i - 1]) / (2.0 * dy);
    }
    d
}

pub fn build_affine_profile(
    rho_bottom: f64,
    rho_top: f64,
    h: f64,
    n: usize,
) -> Result<DensityProfile> {
    DensityProfile::affine(rho_bottom, rho_top, h, n)
}

pub fn build_tanh_profile(
    rho_bottom: f64,
    rho_top: f64,
    center: f64,
    width: f64,
    h: f64,
    n: usize,
) -> Result<DensityProfile> {
    DensityProfile::tanh_layer(rho_bottom, rho_top, center, width, h, n)
}

/// True iff `ρ̄′ > 0` somewhere, i.e. heavy fluid lies above light fluid.
pub fn check_rt_condition(p: &DensityProfile) -> bool {
    p.d1.iter().any(|&d| d > 0.0)
}

/// Integrate `P̄′ = −gρ̄` and fix the constant so that `P̄` has zero mean.
pub fn hydrostatic_pressure(p: &DensityProfile, g: f64) -> Result<EquilibriumState> {
    if !(g >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "gravity must be nonnegative, got {g}"
        )));
    }
    let mass = p.cumulative(&p.rho, &p.d1);
    let mut pressure: Vec<f64> = mass.iter().map(|m| -g * m).collect();
    let dp: Vec<f64> = p.rho.iter().map(|r| -g * r).collect();
    let total = *p.cumulative(&pressure, &dp).last().expect("nonempty");
    let shift = total / p.h;
    pressure.iter_mut().for_each(|v| *v -= shift);
    Ok(EquilibriumState {
        profile: p.clone(),
        pressure,
        g,
    })
}

/// Evaluate the gravity term for the vertical displacement `eta2` (any
/// space). Points with `y₂ + η₂` outside `[0, h]` are clamped and counted;
/// more than `max_clamp_fraction` of the grid is an error.
pub fn eval_gravity_term(
    p: &DensityProfile,
    g: f64,
    eta2: &Field,
    max_clamp_fraction: f64,
) -> Result<GravityTerm> {
    let e = eta2.physical();
    let grid = *e.grid();
    let nv = grid.nv();
    let y2 = grid.y2_points();
    let base: Vec<f64> = y2.iter().map(|&y| p.eval(y)).collect();
    let slope: Vec<f64> = y2.iter().map(|&y| p.eval_d1(y)).collect();
    let mut g_eta = e.clone();
    let mut g_cal = e.clone();
    let mut clamped = 0;
    for (idx, &eta) in e.data().iter().enumerate() {
        let j = idx % nv;
        // η₂ vanishes on the walls; drop transform round-off there.
        let eta = if j == 0 || j == nv - 1 { 0.0 } else { eta };
        let z = y2[j] + eta;
        if z < 0.0 || z > p.h {
            clamped += 1;
        }
        let gv = if eta == 0.0 {
            0.0
        } else {
            g * (p.eval(z) - base[j])
        };
        g_eta.data_mut()[idx] = gv;
        g_cal.data_mut()[idx] = gv - g * slope[j] * eta;
    }
    let total = e.data().len();
    if clamped as f64 > max_clamp_fraction * total as f64 {
        return Err(Error::ClampLimit {
            count: clamped,
            total,
        });
    }
    Ok(GravityTerm {
        g_eta,
        g_cal,
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_cubic() {
        let h = 1.0;
        let n = 33;
        let f = |y: f64| 1.0 + y + 0.5 * y * y - 0.25 * y * y * y;
        let df = |y: f64| 1.0 + y - 0.75 * y * y;
        let ddf = |y: f64| 1.0 - 1.5 * y;
        let ys: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let p = DensityProfile::from_samples(
            h,
            ys.iter().map(|&y| f(y)).collect(),
            ys.iter().map(|&y| df(y)).collect(),
            ys.iter().map(|&y| ddf(y)).collect(),
            ProfileKind::Tabulated,
        )
        .unwrap();
        for y in [0.0, 0.013, 0.5, 0.77, 1.0] {
            assert!((p.eval(y) - f(y)).abs() < 1e-14);
        }
    }

    #[test]
    fn fd_derivative_is_second_order() {
        let err = |n: usize| {
            let dy = 1.0 / (n - 1) as f64;
            let v: Vec<f64> = (0..n).map(|i| (i as f64 * dy).sin()).collect();
            let d = fd_derivative(&v, dy);
            (0..n)
                .map(|i| (d[i] - (i as f64 * dy).cos()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(65) / err(129);
        assert!(ratio > 3.5, "ratio {ratio}");
    }
}
