//! Two-component quadratic eigenvalue problem, used to cross-check the
//! scalar growth-rate solver.
//!
//! Unknowns are the cosine coefficients of `W₁`, the sine coefficients of
//! `W₂` and the pressure `B`. Incompressibility is eliminated with a
//! numerically computed null-space basis, and the remaining quadratic pencil
//! `Λ²M + ΛV + K` is linearized to a companion matrix.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::LinearProblem;
use crate::error::{Error, Result};

/// All eigenvalues of the reduced pencil at `(k, m)`.
pub fn pencil_spectrum(problem: &LinearProblem, k: f64, m: f64) -> Result<Vec<Complex64>> {
    if !(k > 0.0) {
        return Err(Error::InvalidInput(format!(
            "wavenumber must be positive, got {k}"
        )));
    }
    let n = problem.modes();
    let h = problem.h();
    let p = problem.params();
    let rho = problem.rho_moments();
    let drho = problem.drho_moments();
    let kap = |j: usize| j as f64 * std::f64::consts::PI / h;
    let cn = |j: usize| if j == 0 { h } else { 0.5 * h };
    // Layout: [W₁ cos 0..=n | W₂ sin 1..=n].
    let dim = 2 * n + 1;
    let w2 = |j: usize| n + j;
    let mut mass = DMatrix::zeros(dim, dim);
    let mut visc = DMatrix::zeros(dim, dim);
    let mut stiff = DMatrix::zeros(dim, dim);
    for i in 0..=n {
        for j in 0..=n {
            mass[(i, j)] = rho.cosine(i, j);
        }
        let s = kap(i).powi(2) + k * k;
        visc[(i, i)] = p.mu * s * cn(i);
        stiff[(i, i)] = p.lambda * m * m * k * k * cn(i);
    }
    for i in 1..=n {
        for j in 1..=n {
            mass[(w2(i), w2(j))] = rho.sine(i, j);
            stiff[(w2(i), w2(j))] = -p.g * drho.sine(i, j);
        }
        let s = kap(i).powi(2) + k * k;
        visc[(w2(i), w2(i))] = p.mu * s * 0.5 * h;
        stiff[(w2(i), w2(i))] += p.lambda * m * m * k * k * 0.5 * h;
    }
    // Weak divergence −kW₁ + W₂′ tested against cos(lπy/h), l = 0..=n.
    let mut div = DMatrix::zeros(n + 1, dim);
    for l in 0..=n {
        div[(l, l)] = -k * cn(l);
        if l >= 1 {
            div[(l, w2(l))] = kap(l) * 0.5 * h;
        }
    }
    let z = null_space(&div)?;
    let reduce = |a: &DMatrix<f64>| z.transpose() * a * &z;
    let (mr, vr, kr) = (reduce(&mass), reduce(&visc), reduce(&stiff));
    let minv = mr
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidInput("reduced mass matrix is not positive definite".into()))?
        .inverse();
    let r = z.ncols();
    let mut comp = DMatrix::zeros(2 * r, 2 * r);
    let a = -(&minv * &kr);
    let b = -(&minv * &vr);
    for i in 0..r {
        comp[(i, r + i)] = 1.0;
        for j in 0..r {
            comp[(r + i, j)] = a[(i, j)];
            comp[(r + i, r + j)] = b[(i, j)];
        }
    }
    Ok(comp.complex_eigenvalues().iter().copied().collect())
}

/// Largest real part among the pencil eigenvalues, `None` if not positive.
pub fn pencil_growth_rate(problem: &LinearProblem, k: f64, m: f64) -> Result<Option<f64>> {
    let spec = pencil_spectrum(problem, k, m)?;
    let top = spec.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    Ok((top > 0.0).then_some(top))
}

/// Orthonormal basis of the kernel of a full-row-rank wide matrix.
fn null_space(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let gram = a.transpose() * a;
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.iter().copied().fold(0.0f64, f64::max);
    let cols: Vec<_> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() <= 1e-10 * top)
        .map(|(i, _)| eig.eigenvectors.column(i).into_owned())
        .collect();
    let expected = a.ncols() - a.nrows();
    if cols.len() != expected {
        return Err(Error::InvalidInput(format!(
            "constraint null space has dimension {}, expected {expected}",
            cols.len()
        )));
    }
    Ok(DMatrix::from_columns(&cols))
}
