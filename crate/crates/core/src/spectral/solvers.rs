//! Per-mode elliptic solves and the variable-coefficient projection.

use super::field::{Field, Parity, Space, VectorField};
use crate::error::{Error, Result};

/// Multiply every spectral coefficient by `mult(k², κ²)`.
pub fn apply_diagonal(f: &Field, mult: impl Fn(f64, f64) -> f64) -> Field {
    let g = *f.grid();
    f.map_modes(|n, j| {
        let (k, kap) = (g.k(n), g.kappa(j));
        mult(k * k, kap * kap)
    })
}

pub fn laplacian(f: &Field) -> Field {
    apply_diagonal(f, |k2, kap2| -(k2 + kap2))
}

/// Inverse Laplacian with the constant mode set to zero.
pub fn inverse_laplacian(f: &Field) -> Field {
    apply_diagonal(f, |k2, kap2| {
        let s = k2 + kap2;
        if s == 0.0 {
            0.0
        } else {
            -1.0 / s
        }
    })
}

/// Solve `(α − βΔ)x = rhs` exactly, mode by mode.
pub fn helmholtz_solve(alpha: f64, beta: f64, rhs: &Field, parity: Parity) -> Result<Field> {
    if !(alpha > 0.0 && beta >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "helmholtz needs alpha > 0, beta >= 0 (got {alpha}, {beta})"
        )));
    }
    if rhs.parity() != parity {
        return Err(Error::InvalidInput("helmholtz rhs parity mismatch".into()));
    }
    Ok(apply_diagonal(rhs, |k2, kap2| {
        1.0 / (alpha + beta * (k2 + kap2))
    }))
}

/// `∇φ` for a Neumann scalar.
pub fn gradient(phi: &Field) -> VectorField {
    assert_eq!(
        phi.parity(),
        Parity::Neumann,
        "gradient of a non-Neumann scalar"
    );
    VectorField::from_parts(phi.ddy1(), phi.ddy2())
}

pub fn divergence(v: &VectorField) -> Field {
    let mut d = v.c1.ddy1();
    d.axpy(1.0, &v.c2.ddy2());
    d
}

/// Split `v = w + ∇φ` with `div w = 0`. Nyquist slots are dropped first.
pub fn leray_project(v: &VectorField) -> (VectorField, Field) {
    let v = v.spectral().remove_nyquist();
    let phi = inverse_laplacian(&divergence(&v));
    let mut w = v;
    w.axpy(-1.0, &gradient(&phi));
    (w, phi)
}

/// Coefficient of the constant mode of a Neumann field.
fn mean_coefficient(f: &Field) -> f64 {
    f.spectral().at(0, 0)
}

/// Remove `c` from `v₁` so that `∫ w v₁ = 0`, with `w` a vertical weight
/// (uniform when `None`).
pub(crate) fn remove_weighted_mean(v1: &mut Field, weight: Option<&[f64]>) {
    let nv = v1.grid().nv();
    let ones;
    let w = match weight {
        Some(w) => w,
        None => {
            ones = vec![1.0; nv];
            &ones
        }
    };
    let wf = Field::from_fn(*v1.grid(), Parity::Neumann, |_, _| 1.0).mul_vertical(w);
    let num = v1.mul(&wf).integral();
    let den = wf.integral();
    let space = v1.space();
    let shift = Field::from_fn(*v1.grid(), Parity::Neumann, |_, _| num / den).to_space(space);
    v1.axpy(-1.0, &shift);
}

/// Solve `∇P − μΔv = f`, `div v = div_target` with the slip wall conditions
/// built into the basis. The constant part of `v₁`, which the equations leave
/// free, is fixed by `∫ w v₁ = 0` with the optional vertical weight `w`.
pub fn solve_stokes_navier(
    f: &VectorField,
    div_target: &Field,
    mu: f64,
    weight: Option<&[f64]>,
) -> Result<(VectorField, Field)> {
    if !(mu > 0.0) {
        return Err(Error::InvalidInput(format!(
            "mu must be positive, got {mu}"
        )));
    }
    if div_target.parity() != Parity::Neumann {
        return Err(Error::InvalidInput(
            "divergence target must be Neumann".into(),
        ));
    }
    let d = div_target.spectral().remove_nyquist();
    let scale = d.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if mean_coefficient(&d).abs() > 1e-12 * scale.max(1e-300) && mean_coefficient(&d) != 0.0 {
        return Err(Error::InvalidInput(
            "divergence target has nonzero mean".into(),
        ));
    }
    let phi = inverse_laplacian(&d);
    let grad_phi = gradient(&phi);
    let mut rhs = f.spectral().remove_nyquist();
    rhs.axpy(mu, &grad_phi.map(laplacian));
    let (w_rhs, p_pot) = leray_project(&rhs);
    let solve = |c: &Field| {
        apply_diagonal(c, |k2, kap2| {
            let s = k2 + kap2;
            if s == 0.0 {
                0.0
            } else {
                1.0 / (mu * s)
            }
        })
    };
    let mut v = w_rhs.map(solve);
    v.axpy(1.0, &grad_phi);
    remove_weighted_mean(&mut v.c1, weight);
    Ok((v, p_pot))
}

/// The matrix `A = (I + ∇η)^{-T}` and `J = det(I + ∇η)` sampled on the grid.
#[derive(Clone, Debug)]
pub struct MetricField {
    pub a11: Field,
    pub a12: Field,
    pub a21: Field,
    pub a22: Field,
    pub j: Field,
}

impl MetricField {
    pub fn identity(grid: super::SlabGrid) -> Self {
        Self {
            a11: Field::from_fn(grid, Parity::Neumann, |_, _| 1.0),
            a12: Field::zeros(grid, Parity::Dirichlet, Space::Physical),
            a21: Field::zeros(grid, Parity::Dirichlet, Space::Physical),
            a22: Field::from_fn(grid, Parity::Neumann, |_, _| 1.0),
            j: Field::from_fn(grid, Parity::Neumann, |_, _| 1.0),
        }
    }

    /// Metric of the flow map `y ↦ y + η`.
    pub fn from_eta(eta: &VectorField) -> Self {
        let d11 = eta.c1.ddy1().physical();
        let d21 = eta.c1.ddy2().physical();
        let d12 = eta.c2.ddy1().physical();
        let d22 = eta.c2.ddy2().physical();
        let n = d11.data().len();
        let (mut a11, mut a12, mut a21, mut a22, mut jac) = (
            vec![0.0; n],
            vec![0.0; n],
            vec![0.0; n],
            vec![0.0; n],
            vec![0.0; n],
        );
        for idx in 0..n {
            // ∇η = [[∂₁η₁, ∂₂η₁], [∂₁η₂, ∂₂η₂]]
            let (p, q, r, s) = (
                d11.data()[idx],
                d21.data()[idx],
                d12.data()[idx],
                d22.data()[idx],
            );
            let det = (1.0 + p) * (1.0 + s) - q * r;
            jac[idx] = det;
            a11[idx] = (1.0 + s) / det;
            a12[idx] = -r / det;
            a21[idx] = -q / det;
            a22[idx] = (1.0 + p) / det;
        }
        let g = *eta.grid();
        let mk = |parity, data: Vec<f64>| {
            let mut f = Field::zeros(g, parity, Space::Physical);
            f.data_mut().copy_from_slice(&data);
            f
        };
        let mut a12 = mk(Parity::Dirichlet, a12);
        let mut a21 = mk(Parity::Dirichlet, a21);
        zero_walls(&mut a12);
        zero_walls(&mut a21);
        Self {
            a11: mk(Parity::Neumann, a11),
            a12,
            a21,
            a22: mk(Parity::Neumann, a22),
            j: mk(Parity::Neumann, jac),
        }
    }

    /// `max |A − I|` over grid points and entries.
    pub fn deviation(&self) -> f64 {
        let one = |f: &Field| f.data().iter().fold(0.0f64, |m, v| m.max((v - 1.0).abs()));
        let zero = |f: &Field| f.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        one(&self.a11)
            .max(one(&self.a22))
            .max(zero(&self.a12))
            .max(zero(&self.a21))
    }

    pub fn j_range(&self) -> (f64, f64) {
        self.j
            .data()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(*v), hi.max(*v))
            })
    }

    /// `∇_A f = (A₁ₖ∂ₖf, A₂ₖ∂ₖf)` in physical space, for a scalar of either parity.
    pub fn grad(&self, f: &Field) -> (Field, Field) {
        let f1 = f.ddy1().physical();
        let f2 = f.ddy2().physical();
        let mut g1 = self.a11.mul(&f1);
        g1.axpy(1.0, &self.a12.mul(&f2));
        let mut g2 = self.a21.mul(&f1);
        g2.axpy(1.0, &self.a22.mul(&f2));
        (g1, g2)
    }

    /// `div_A X = A_lk ∂_k X_l` in physical space.
    pub fn div(&self, x1: &Field, x2: &Field) -> Field {
        let mut d = self.a11.mul(&x1.ddy1().physical());
        d.axpy(1.0, &self.a12.mul(&x1.ddy2().physical()));
        d.axpy(1.0, &self.a21.mul(&x2.ddy1().physical()));
        d.axpy(1.0, &self.a22.mul(&x2.ddy2().physical()));
        d
    }

    pub fn div_vec(&self, v: &VectorField) -> Field {
        self.div(&v.c1, &v.c2)
    }

    /// `Δ_A f = div_A(∇_A f)`.
    pub fn laplacian(&self, f: &Field) -> Field {
        let (g1, g2) = self.grad(f);
        self.div(&g1, &g2)
    }
}

fn zero_walls(f: &mut Field) {
    let nv = f.grid().nv();
    for row in f.data_mut().chunks_mut(nv) {
        row[0] = 0.0;
        row[nv - 1] = 0.0;
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ProjectionOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Largest admissible `max |A − I|`.
    pub max_deviation: f64,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
            max_deviation: 0.5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Projection {
    pub u: VectorField,
    pub q: Field,
    pub iterations: usize,
    /// `‖div_A u − target‖₀ / ‖∇u‖₀` after projection.
    pub residual: f64,
}

fn drop_constant(f: &Field) -> Field {
    let mut s = f.spectral().remove_nyquist();
    s.set(0, 0, 0.0);
    s
}

/// H¹ seminorm, used as the yardstick for divergence residuals.
pub(crate) fn grad_scale(u: &VectorField) -> f64 {
    u.weighted_norm2(|k2, kap2| k2 + kap2).max(0.0).sqrt()
}

/// Find `q` with `div_A(u − ρ̄⁻¹∇_A q) = target` and return the corrected
/// velocity. `rho` holds `ρ̄` at the grid heights. The variable coefficients
/// are handled by Richardson iteration preconditioned with the constant
/// coefficient Laplacian.
pub fn project_div_free(
    u: &VectorField,
    a: &MetricField,
    rho: &[f64],
    target: Option<&Field>,
    opts: &ProjectionOptions,
) -> Result<Projection> {
    let dev = a.deviation();
    if !(dev <= opts.max_deviation) {
        return Err(Error::DeformationTooLarge(dev));
    }
    let grid = *u.grid();
    if rho.len() != grid.nv() {
        return Err(Error::GridMismatch(
            "density samples do not match grid".into(),
        ));
    }
    let inv_rho: Vec<f64> = rho.iter().map(|r| 1.0 / r).collect();
    let (lo, hi) = inv_rho.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| {
        (lo.min(*v), hi.max(*v))
    });
    let a0 = 0.5 * (lo + hi);

    let mut rhs = a.div_vec(u);
    if let Some(t) = target {
        rhs.axpy(-1.0, t);
    }
    let r = drop_constant(&rhs);
    let r_norm = r.norm_l2();
    let floor = 1e3 * f64::EPSILON * grad_scale(u).max(r_norm);
    // The correction is truncated like the output, so the iteration sees
    // exactly the divergence it will leave behind.
    let correction = |q: &Field| {
        let (g1, g2) = a.grad(q);
        VectorField::from_parts(g1.mul_vertical(&inv_rho), g2.mul_vertical(&inv_rho))
            .remove_nyquist()
    };
    let apply_k = |q: &Field| drop_constant(&a.div_vec(&correction(q)));

    let mut q = Field::zeros(grid, Parity::Neumann, Space::Spectral);
    let mut res = r.clone();
    let mut res_norm = r_norm;
    let mut iterations = 0;
    while res_norm > (opts.tol * r_norm).max(floor) {
        if iterations >= opts.max_iter {
            return Err(Error::NoConvergence {
                solver: "projection",
                iterations,
                residual: res_norm / r_norm.max(1e-300),
            });
        }
        q.axpy(1.0 / a0, &inverse_laplacian(&res));
        res = &r - &apply_k(&q);
        res_norm = res.norm_l2();
        iterations += 1;
        if !res_norm.is_finite() {
            return Err(Error::NonFinite("projection"));
        }
    }

    let mut out = u.spectral().remove_nyquist();
    if iterations > 0 {
        out.axpy(-1.0, &correction(&q));
    }
    let mut check = a.div_vec(&out);
    if let Some(t) = target {
        check.axpy(-1.0, t);
    }
    let check = drop_constant(&check);
    let scale = grad_scale(&out).max(1e-300);
    let residual = if check.max_abs() == 0.0 {
        0.0
    } else {
        check.norm_l2() / scale
    };
    Ok(Projection {
        u: out,
        q,
        iterations,
        residual,
    })
}
