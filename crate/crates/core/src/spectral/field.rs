use std::ops::{Add, Mul, Neg, Sub};

use super::grid::{HMode, SlabGrid};
use super::transform;
use crate::error::{Error, Result};

/// Vertical wall behaviour of a scalar field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Parity {
    /// Vanishes at the walls; sine series.
    Dirichlet,
    /// Vanishing normal derivative at the walls; cosine series.
    Neumann,
}

impl Parity {
    /// Parity after one vertical derivative.
    pub fn flip(self) -> Parity {
        match self {
            Parity::Dirichlet => Parity::Neumann,
            Parity::Neumann => Parity::Dirichlet,
        }
    }

    /// Parity of a pointwise product (odd × odd = even, and so on).
    pub fn product(self, other: Parity) -> Parity {
        if self == other {
            Parity::Neumann
        } else {
            Parity::Dirichlet
        }
    }

    pub fn is_cosine(self) -> bool {
        self == Parity::Neumann
    }

    pub fn name(self) -> &'static str {
        match self {
            Parity::Dirichlet => "dirichlet",
            Parity::Neumann => "neumann",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Space {
    Physical,
    Spectral,
}

impl Space {
    pub fn name(self) -> &'static str {
        match self {
            Space::Physical => "physical",
            Space::Spectral => "spectral",
        }
    }
}

/// Scalar field on a [`SlabGrid`], stored row-major over (horizontal index,
/// vertical index).
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: SlabGrid,
    parity: Parity,
    space: Space,
    data: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: SlabGrid, parity: Parity, space: Space) -> Self {
        Self {
            grid,
            parity,
            space,
            data: vec![0.0; grid.len()],
        }
    }

    /// Build from raw values. Dirichlet wall samples (physical) or unused
    /// sine slots (spectral) are checked to be zero.
    pub fn from_data(grid: SlabGrid, parity: Parity, space: Space, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                data.len()
            )));
        }
        let f = Self {
            grid,
            parity,
            space,
            data,
        };
        if parity == Parity::Dirichlet {
            let nv = grid.nv();
            for i in 0..grid.n1() {
                if f.data[i * nv] != 0.0 || f.data[i * nv + nv - 1] != 0.0 {
                    return Err(Error::InvalidInput(
                        "Dirichlet field has nonzero wall values".into(),
                    ));
                }
            }
        }
        Ok(f)
    }

    /// Sample `f(y₁, y₂)` on the grid. Dirichlet wall samples are set to zero.
    pub fn from_fn(grid: SlabGrid, parity: Parity, f: impl Fn(f64, f64) -> f64) -> Self {
        let nv = grid.nv();
        let mut data = vec![0.0; grid.len()];
        for i in 0..grid.n1() {
            let y1 = grid.y1(i);
            for j in 0..nv {
                let wall = j == 0 || j == nv - 1;
                data[i * nv + j] = if parity == Parity::Dirichlet && wall {
                    0.0
                } else {
                    f(y1, grid.y2(j))
                };
            }
        }
        Self {
            grid,
            parity,
            space: Space::Physical,
            data,
        }
    }

    /// Single spectral basis function in packed slot `p`, vertical index `j`.
    pub fn basis(grid: SlabGrid, parity: Parity, p: usize, j: usize) -> Self {
        let mut f = Self::zeros(grid, parity, Space::Spectral);
        f.data[p * grid.nv() + j] = 1.0;
        f.clear_unused();
        f
    }

    pub fn grid(&self) -> &SlabGrid {
        &self.grid
    }
    pub fn parity(&self) -> Parity {
        self.parity
    }
    pub fn space(&self) -> Space {
        self.space
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
    pub fn into_data(self) -> Vec<f64> {
        self.data
    }
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.grid.nv() + j]
    }
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let nv = self.grid.nv();
        self.data[i * nv + j] = v;
    }

    /// Forward or inverse transform; errors if already in the target space.
    pub fn transform(&self, target: Space) -> Result<Field> {
        if self.space == target {
            return Err(Error::InvalidInput(format!(
                "field already in {} space",
                target.name()
            )));
        }
        Ok(self.to_space(target))
    }

    pub fn to_space(&self, target: Space) -> Field {
        if self.space == target {
            return self.clone();
        }
        let data = match target {
            Space::Spectral => transform::forward(&self.grid, self.parity, &self.data),
            Space::Physical => transform::inverse(&self.grid, self.parity, &self.data),
        };
        Field {
            grid: self.grid,
            parity: self.parity,
            space: target,
            data,
        }
    }

    pub fn spectral(&self) -> Field {
        self.to_space(Space::Spectral)
    }
    pub fn physical(&self) -> Field {
        self.to_space(Space::Physical)
    }

    fn clear_unused(&mut self) {
        if self.parity == Parity::Dirichlet {
            let nv = self.grid.nv();
            for p in 0..self.grid.n1() {
                self.data[p * nv] = 0.0;
                self.data[p * nv + nv - 1] = 0.0;
            }
        }
    }

    /// Horizontal derivative, returned in the input's space.
    pub fn ddy1(&self) -> Field {
        let s = self.spectral();
        let g = self.grid;
        let nv = g.nv();
        let mut out = Field::zeros(g, self.parity, Space::Spectral);
        for n in 1..g.nyquist1() {
            let k = g.k(n);
            let (pc, ps) = (g.cos_slot(n), g.sin_slot(n));
            for j in 0..nv {
                let a = s.data[pc * nv + j];
                let b = s.data[ps * nv + j];
                out.data[pc * nv + j] = k * b;
                out.data[ps * nv + j] = -k * a;
            }
        }
        out.to_space(self.space)
    }

    /// Vertical derivative; flips parity. Returned in the input's space.
    pub fn ddy2(&self) -> Field {
        let s = self.spectral();
        let g = self.grid;
        let nv = g.nv();
        let m = g.n2();
        let mut out = Field::zeros(g, self.parity.flip(), Space::Spectral);
        for p in 0..g.n1() {
            for j in 1..m {
                let kap = g.kappa(j);
                let c = s.data[p * nv + j];
                out.data[p * nv + j] = match self.parity {
                    Parity::Neumann => -kap * c,
                    Parity::Dirichlet => kap * c,
                };
            }
        }
        out.to_space(self.space)
    }

    /// Apply `mult(n, j)` to every spectral coefficient (horizontal index
    /// `n`, vertical index `j`). Result stays in the input's space.
    pub fn map_modes(&self, mult: impl Fn(usize, usize) -> f64) -> Field {
        let mut s = self.spectral();
        let g = self.grid;
        let nv = g.nv();
        for p in 0..g.n1() {
            let n = g.hmode(p).wavenumber_index();
            for j in 0..nv {
                s.data[p * nv + j] *= mult(n, j);
            }
        }
        s.clear_unused();
        s.to_space(self.space)
    }

    /// Zero the horizontal and vertical Nyquist slots.
    pub fn remove_nyquist(&self) -> Field {
        let (n1, m) = (self.grid.n1(), self.grid.n2());
        self.map_modes(|n, j| if n == n1 / 2 || j == m { 0.0 } else { 1.0 })
    }

    /// Two-thirds rule: keep `n ≤ N1/3` and `j ≤ 2N2/3`.
    pub fn dealias(&self) -> Field {
        let (n1, m) = (self.grid.n1(), self.grid.n2());
        self.map_modes(|n, j| {
            if 3 * n <= n1 && 3 * j <= 2 * m {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Pointwise product in physical space.
    pub fn mul(&self, other: &Field) -> Field {
        let a = self.physical();
        let b = other.physical();
        a.grid.same_as(&b.grid).expect("grid mismatch in product");
        let data = a.data.iter().zip(&b.data).map(|(x, y)| x * y).collect();
        Field {
            grid: a.grid,
            parity: a.parity.product(b.parity),
            space: Space::Physical,
            data,
        }
    }

    /// Pointwise map in physical space, keeping the parity tag.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Field {
        let mut a = self.physical();
        for v in &mut a.data {
            *v = f(*v);
        }
        a
    }

    /// Multiply each physical sample by a function of the vertical index.
    pub fn mul_vertical(&self, w: &[f64]) -> Field {
        let mut a = self.physical();
        let nv = a.grid.nv();
        assert_eq!(w.len(), nv);
        for row in a.data.chunks_mut(nv) {
            for (v, wj) in row.iter_mut().zip(w) {
                *v *= wj;
            }
        }
        a
    }

    pub fn scale(&self, c: f64) -> Field {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// `self += c·other`, with `other` converted to this field's space.
    pub fn axpy(&mut self, c: f64, other: &Field) {
        assert_eq!(self.parity, other.parity, "parity mismatch in axpy");
        let o = other.to_space(self.space);
        for (v, w) in self.data.iter_mut().zip(&o.data) {
            *v += c * w;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.physical().data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Continuum L² inner product of the spectral series.
    pub fn inner(&self, other: &Field) -> f64 {
        assert_eq!(
            self.parity, other.parity,
            "parity mismatch in inner product"
        );
        let a = self.spectral();
        let b = other.spectral();
        let g = self.grid;
        let nv = g.nv();
        let cos = self.parity.is_cosine();
        let mut sum = 0.0;
        for p in 0..g.n1() {
            let hn = g.hnorm2(p);
            for j in 0..nv {
                sum += a.data[p * nv + j] * b.data[p * nv + j] * hn * g.vnorm2(j, cos);
            }
        }
        sum
    }

    pub fn norm_l2(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    /// Trapezoid-rule L² norm of the physical samples.
    pub fn discrete_l2(&self) -> f64 {
        self.quadrature(|v| v * v).sqrt()
    }

    /// Trapezoid-rule L¹ norm of the physical samples.
    pub fn l1_norm(&self) -> f64 {
        self.quadrature(f64::abs)
    }

    /// Trapezoid-rule integral of the physical samples.
    pub fn integral(&self) -> f64 {
        self.quadrature(|v| v)
    }

    fn quadrature(&self, f: impl Fn(f64) -> f64) -> f64 {
        let a = self.physical();
        let g = a.grid;
        let nv = g.nv();
        let mut sum = 0.0;
        for row in a.data.chunks(nv) {
            for (j, v) in row.iter().enumerate() {
                let w = if j == 0 || j == nv - 1 { 0.5 } else { 1.0 };
                sum += w * f(*v);
            }
        }
        sum * g.dy1() * g.dy2()
    }

    /// Squared norm as a weighted sum over spectral coefficients, with the
    /// weight `mult(k², κ²)` applied to each mode.
    pub fn weighted_norm2(&self, mult: impl Fn(f64, f64) -> f64) -> f64 {
        let s = self.spectral();
        let g = self.grid;
        let nv = g.nv();
        let cos = self.parity.is_cosine();
        let mut sum = 0.0;
        for p in 0..g.n1() {
            let k = g.k(g.hmode(p).wavenumber_index());
            let hn = g.hnorm2(p);
            for j in 0..nv {
                let c = s.data[p * nv + j];
                if c != 0.0 {
                    let kap = g.kappa(j);
                    sum += c * c * hn * g.vnorm2(j, cos) * mult(k * k, kap * kap);
                }
            }
        }
        sum
    }

    /// Coefficient at packed slot `p`, vertical index `j` (spectral view).
    pub fn coeff(&self, mode: HMode, j: usize) -> f64 {
        let s = self.spectral();
        let p = match mode {
            HMode::Cos(n) => self.grid.cos_slot(n),
            HMode::Sin(n) => self.grid.sin_slot(n),
        };
        s.at(p, j)
    }

    /// Fourier slot `n = 0` of the field, as a function of the vertical index.
    pub fn horizontal_mean(&self) -> Vec<f64> {
        let a = self.physical();
        let nv = a.grid.nv();
        let mut out = vec![0.0; nv];
        for row in a.data.chunks(nv) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        let n1 = a.grid.n1() as f64;
        out.iter_mut().for_each(|v| *v /= n1);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Value of the spectral series at an arbitrary point. `self` must be
    /// in spectral space.
    pub fn eval_with(&self, basis: &PointBasis) -> f64 {
        assert_eq!(
            self.space,
            Space::Spectral,
            "point evaluation needs spectral data"
        );
        let nv = self.grid.nv();
        let v = if self.parity.is_cosine() {
            &basis.vc
        } else {
            &basis.vs
        };
        let mut sum = 0.0;
        for (p, hp) in basis.h.iter().enumerate() {
            let col = &self.data[p * nv..(p + 1) * nv];
            let inner: f64 = col.iter().zip(v).map(|(c, b)| c * b).sum();
            sum += hp * inner;
        }
        sum
    }
}

/// Basis function values at one point, shared across field evaluations.
#[derive(Clone, Debug)]
pub struct PointBasis {
    h: Vec<f64>,
    vc: Vec<f64>,
    vs: Vec<f64>,
}

impl PointBasis {
    pub fn new(grid: &SlabGrid, y1: f64, y2: f64) -> Self {
        let n1 = grid.n1();
        let mut h = vec![0.0; n1];
        h[0] = 1.0;
        for n in 1..grid.nyquist1() {
            let arg = grid.k(n) * y1;
            h[grid.cos_slot(n)] = arg.cos();
            h[grid.sin_slot(n)] = arg.sin();
        }
        h[n1 - 1] = (grid.k(grid.nyquist1()) * y1).cos();
        let nv = grid.nv();
        let vc = (0..nv).map(|j| (grid.kappa(j) * y2).cos()).collect();
        let vs = (0..nv).map(|j| (grid.kappa(j) * y2).sin()).collect();
        Self { h, vc, vs }
    }
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Mul<f64> for &Field {
    type Output = Field;
    fn mul(self, c: f64) -> Field {
        self.scale(c)
    }
}

impl Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.scale(-1.0)
    }
}

/// Two-component field with the velocity parities: `c1` Neumann, `c2` Dirichlet.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub c1: Field,
    pub c2: Field,
}

impl VectorField {
    pub fn new(c1: Field, c2: Field) -> Result<Self> {
        if c1.parity != Parity::Neumann || c2.parity != Parity::Dirichlet {
            return Err(Error::InvalidInput(
                "vector field needs (Neumann, Dirichlet) components".into(),
            ));
        }
        c1.grid.same_as(&c2.grid)?;
        Ok(Self { c1, c2 })
    }

    pub(crate) fn from_parts(c1: Field, c2: Field) -> Self {
        debug_assert_eq!(c1.parity, Parity::Neumann);
        debug_assert_eq!(c2.parity, Parity::Dirichlet);
        Self { c1, c2 }
    }

    pub fn zeros(grid: SlabGrid, space: Space) -> Self {
        Self {
            c1: Field::zeros(grid, Parity::Neumann, space),
            c2: Field::zeros(grid, Parity::Dirichlet, space),
        }
    }

    pub fn from_fns(
        grid: SlabGrid,
        f1: impl Fn(f64, f64) -> f64,
        f2: impl Fn(f64, f64) -> f64,
    ) -> Self {
        Self {
            c1: Field::from_fn(grid, Parity::Neumann, f1),
            c2: Field::from_fn(grid, Parity::Dirichlet, f2),
        }
    }

    pub fn grid(&self) -> &SlabGrid {
        self.c1.grid()
    }

    pub fn spectral(&self) -> Self {
        Self {
            c1: self.c1.spectral(),
            c2: self.c2.spectral(),
        }
    }
    pub fn physical(&self) -> Self {
        Self {
            c1: self.c1.physical(),
            c2: self.c2.physical(),
        }
    }
    pub fn map(&self, f: impl Fn(&Field) -> Field) -> Self {
        Self {
            c1: f(&self.c1),
            c2: f(&self.c2),
        }
    }
    pub fn scale(&self, c: f64) -> Self {
        self.map(|f| f.scale(c))
    }
    pub fn axpy(&mut self, c: f64, other: &VectorField) {
        self.c1.axpy(c, &other.c1);
        self.c2.axpy(c, &other.c2);
    }
    pub fn inner(&self, other: &VectorField) -> f64 {
        self.c1.inner(&other.c1) + self.c2.inner(&other.c2)
    }
    pub fn norm_l2(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }
    pub fn max_abs(&self) -> f64 {
        self.c1.max_abs().max(self.c2.max_abs())
    }
    pub fn dealias(&self) -> Self {
        self.map(Field::dealias)
    }
    pub fn remove_nyquist(&self) -> Self {
        self.map(Field::remove_nyquist)
    }
    pub fn weighted_norm2(&self, mult: impl Fn(f64, f64) -> f64 + Copy) -> f64 {
        self.c1.weighted_norm2(mult) + self.c2.weighted_norm2(mult)
    }
    pub fn is_finite(&self) -> bool {
        self.c1.is_finite() && self.c2.is_finite()
    }
}

impl Add for &VectorField {
    type Output = VectorField;
    fn add(self, rhs: &VectorField) -> VectorField {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &VectorField {
    type Output = VectorField;
    fn sub(self, rhs: &VectorField) -> VectorField {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}
