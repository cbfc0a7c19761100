use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Collocation grid on the `2πL`-periodic × `(0, h)` slab.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlabGrid {
    l: f64,
    h: f64,
    n1: usize,
    n2: usize,
}

/// Horizontal Fourier slot in packed storage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HMode {
    Cos(usize),
    Sin(usize),
}

impl HMode {
    pub fn wavenumber_index(self) -> usize {
        match self {
            HMode::Cos(n) | HMode::Sin(n) => n,
        }
    }
}

impl SlabGrid {
    /// `n1` horizontal points and `n2` vertical intervals. Both must be
    /// powers of two (at least 4) so the transforms stay fast.
    pub fn new(l: f64, h: f64, n1: usize, n2: usize) -> Result<Self> {
        if !(l > 0.0 && l.is_finite() && h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "L and h must be positive (L={l}, h={h})"
            )));
        }
        if n1 < 4 || !n1.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "N1 must be a power of two >= 4, got {n1}"
            )));
        }
        if n2 < 4 || !n2.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "N2 must be a power of two >= 4, got {n2}"
            )));
        }
        Ok(Self { l, h, n1, n2 })
    }

    pub fn l(&self) -> f64 {
        self.l
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn n1(&self) -> usize {
        self.n1
    }
    pub fn n2(&self) -> usize {
        self.n2
    }
    /// Vertical sample count, walls included.
    pub fn nv(&self) -> usize {
        self.n2 + 1
    }
    pub fn len(&self) -> usize {
        self.n1 * self.nv()
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn period(&self) -> f64 {
        2.0 * PI * self.l
    }
    pub fn dy1(&self) -> f64 {
        self.period() / self.n1 as f64
    }
    pub fn dy2(&self) -> f64 {
        self.h / self.n2 as f64
    }
    pub fn y1(&self, i: usize) -> f64 {
        i as f64 * self.dy1()
    }
    pub fn y2(&self, j: usize) -> f64 {
        j as f64 * self.dy2()
    }
    pub fn y1_points(&self) -> Vec<f64> {
        (0..self.n1).map(|i| self.y1(i)).collect()
    }
    pub fn y2_points(&self) -> Vec<f64> {
        (0..self.nv()).map(|j| self.y2(j)).collect()
    }
    /// Horizontal wavenumber `n/L`.
    pub fn k(&self, n: usize) -> f64 {
        n as f64 / self.l
    }
    /// Vertical wavenumber `jπ/h`.
    pub fn kappa(&self, j: usize) -> f64 {
        j as f64 * PI / self.h
    }
    pub fn nyquist1(&self) -> usize {
        self.n1 / 2
    }

    /// Which Fourier function lives in packed slot `p`.
    pub fn hmode(&self, p: usize) -> HMode {
        if p == 0 {
            HMode::Cos(0)
        } else if p == self.n1 - 1 {
            HMode::Cos(self.n1 / 2)
        } else if p % 2 == 1 {
            HMode::Cos(p.div_ceil(2))
        } else {
            HMode::Sin(p / 2)
        }
    }

    /// Packed slot of `cos(k_n y₁)`.
    pub fn cos_slot(&self, n: usize) -> usize {
        if n == 0 {
            0
        } else if n == self.n1 / 2 {
            self.n1 - 1
        } else {
            2 * n - 1
        }
    }

    /// Packed slot of `sin(k_n y₁)`, for `0 < n < N1/2`.
    pub fn sin_slot(&self, n: usize) -> usize {
        assert!(n > 0 && n < self.n1 / 2);
        2 * n
    }

    /// Squared L² norm over one period of the Fourier function in slot `p`.
    pub fn hnorm2(&self, p: usize) -> f64 {
        if p == 0 {
            self.period()
        } else {
            self.period() / 2.0
        }
    }

    /// Squared L² norm on `(0, h)` of the vertical basis function `j`.
    pub fn vnorm2(&self, j: usize, cosine: bool) -> f64 {
        if cosine && j == 0 {
            self.h
        } else {
            self.h / 2.0
        }
    }

    /// Same, but for the discrete trapezoid inner product on the grid.
    pub fn vnorm2_discrete(&self, j: usize, cosine: bool) -> f64 {
        if cosine && (j == 0 || j == self.n2) {
            self.h
        } else {
            self.h / 2.0
        }
    }

    pub fn hnorm2_discrete(&self, p: usize) -> f64 {
        if p == 0 || p == self.n1 - 1 {
            self.period()
        } else {
            self.period() / 2.0
        }
    }

    pub(crate) fn same_as(&self, other: &SlabGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}
