//! Recovery of Eulerian fields by inverting the flow map pointwise.

use super::state::FlowState;
use crate::error::{Error, Result};
use crate::par;
use crate::profiles::DensityProfile;
use crate::spectral::{Field, Parity, PointBasis, Space, VectorField};

/// Eulerian fields sampled at the grid points `x`.
#[derive(Clone, Debug)]
pub struct EulerianFields {
    /// `ϱ(x) = ρ̄((ζ⁻¹x)₂) − ρ̄(x₂)`.
    pub rho_pert: Field,
    pub v: VectorField,
    /// Magnetic perturbation `m∂₁η ∘ ζ⁻¹`.
    pub n1: Field,
    pub n2: Field,
    pub beta: Field,
}

const NEWTON_TOL: f64 = 1e-13;
const NEWTON_MAX: usize = 30;

pub fn to_eulerian(state: &FlowState, profile: &DensityProfile, m: f64) -> Result<EulerianFields> {
    let grid = *state.grid();
    let (j_lo, _) = state.metric.j_range();
    if !(j_lo > 0.0) {
        return Err(Error::JacobianOutOfBand {
            t: state.t,
            j: j_lo,
        });
    }
    let eta1 = state.eta.c1.spectral();
    let eta2 = state.eta.c2.spectral();
    let d = [eta1.ddy1(), eta1.ddy2(), eta2.ddy1(), eta2.ddy2()];
    let u1 = state.u.c1.spectral();
    let u2 = state.u.c2.spectral();
    let q = state.q.spectral();
    let h = grid.h();
    let nv = grid.nv();

    // Each point: (y₁, y₂) solving y + η(y) = x, then the composed values.
    let solved = par::map_range(grid.len(), |idx| {
        let (i, j) = (idx / nv, idx % nv);
        let x = [grid.y1(i), grid.y2(j)];
        let mut y = x;
        for iter in 0..NEWTON_MAX {
            let b = PointBasis::new(&grid, y[0], y[1]);
            let r = [
                y[0] + eta1.eval_with(&b) - x[0],
                y[1] + eta2.eval_with(&b) - x[1],
            ];
            if r[0].abs().max(r[1].abs()) <= NEWTON_TOL * (1.0 + h) {
                let vals = [
                    u1.eval_with(&b),
                    u2.eval_with(&b),
                    m * d[0].eval_with(&b),
                    m * d[2].eval_with(&b),
                    q.eval_with(&b),
                ];
                return Ok((y, vals, iter));
            }
            let (p, s, t, w) = (
                1.0 + d[0].eval_with(&b),
                d[1].eval_with(&b),
                d[2].eval_with(&b),
                1.0 + d[3].eval_with(&b),
            );
            let det = p * w - s * t;
            y[0] -= (w * r[0] - s * r[1]) / det;
            y[1] -= (-t * r[0] + p * r[1]) / det;
            y[1] = y[1].clamp(0.0, h);
        }
        Err((i, j))
    });

    let mut failed = Vec::new();
    let mut pre = vec![0.0; grid.len()];
    let mut cols: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; grid.len()]);
    for (idx, r) in solved.into_iter().enumerate() {
        match r {
            Ok((y, vals, _)) => {
                pre[idx] = y[1];
                for (c, v) in cols.iter_mut().zip(vals) {
                    c[idx] = v;
                }
            }
            Err(p) => failed.push(p),
        }
    }
    if !failed.is_empty() {
        return Err(Error::NoConvergence {
            solver: "flow-map inversion",
            iterations: NEWTON_MAX,
            residual: failed.len() as f64,
        });
    }
    let sample = |data: &[f64], parity: Parity| {
        let mut data = data.to_vec();
        if parity == Parity::Dirichlet {
            for row in data.chunks_mut(nv) {
                row[0] = 0.0;
                row[nv - 1] = 0.0;
            }
        }
        Field::from_data(grid, parity, Space::Physical, data)
    };
    let y2 = grid.y2_points();
    let rho_pert: Vec<f64> = pre
        .iter()
        .enumerate()
        .map(|(idx, y)| profile.eval(*y) - profile.eval(y2[idx % nv]))
        .collect();
    Ok(EulerianFields {
        rho_pert: sample(&rho_pert, Parity::Neumann)?,
        v: VectorField::new(
            sample(&cols[0], Parity::Neumann)?,
            sample(&cols[1], Parity::Dirichlet)?,
        )?,
        n1: sample(&cols[2], Parity::Neumann)?,
        n2: sample(&cols[3], Parity::Dirichlet)?,
        beta: sample(&cols[4], Parity::Neumann)?,
    })
}
