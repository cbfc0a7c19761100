use super::{hi_multiplier, japanese_bracket, li_bar_multiplier};
use crate::dynamics::{FlowState, Physics, SimConfig};
use crate::error::Result;
use crate::linstab::{LinearParams, LinearProblem};
use crate::profiles::DensityProfile;
use crate::spectral::{Field, VectorField};

/// Squared summands of `ℰ` and `𝒟`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyParts {
    /// `‖η‖₃², ‖u‖₂², ‖u_t‖₀², ‖q‖₁²`.
    pub energy_terms: [f64; 4],
    /// `‖∂₁η₁‖₂², ‖η₂‖₃², ‖u‖₃², ‖u_t‖₁², ‖q‖₂²`.
    pub dissipation_terms: [f64; 5],
}

impl EnergyParts {
    pub fn energy(&self) -> f64 {
        self.energy_terms.iter().sum()
    }
    pub fn dissipation(&self) -> f64 {
        self.dissipation_terms.iter().sum()
    }
}

/// Unweighted groups multiplying `⟨t⟩, ⟨t⟩², ⟨t⟩³` in `𝔈` and `𝔇`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WeightedParts {
    pub frak_e_groups: [f64; 3],
    pub frak_d_groups: [f64; 3],
}

impl WeightedParts {
    fn weigh(groups: &[f64; 3], t: f64) -> f64 {
        let w = japanese_bracket(t);
        w * groups[0] + w * w * groups[1] + w * w * w * groups[2]
    }
    pub fn frak_e(&self, t: f64) -> f64 {
        Self::weigh(&self.frak_e_groups, t)
    }
    pub fn frak_d(&self, t: f64) -> f64 {
        Self::weigh(&self.frak_d_groups, t)
    }
}

/// Norms listed individually in the report (not squared).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NormTable {
    pub eta_h3: f64,
    pub u_h2: f64,
    pub ut_l2: f64,
    pub q_h1: f64,
    pub d1eta_bar2_0: f64,
    pub eta2_l2: f64,
    pub u_h3: f64,
    pub q_h2: f64,
    pub u_l2: f64,
    pub eta_l2: f64,
    pub eta1_l2: f64,
    pub ut_h1: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyReport {
    pub t: f64,
    pub e_pot: f64,
    pub e_total: f64,
    pub d_total: f64,
    pub frak_e: f64,
    pub frak_d: f64,
    pub parts: EnergyParts,
    pub weighted: WeightedParts,
    pub norms: NormTable,
    /// `⟨t⟩³(‖u‖₂² + ‖q‖₁² + ‖u_t‖₀²)`.
    pub decay_weighted: f64,
    pub j_drift: f64,
    pub div_residual: f64,
    /// `(ρ̄u₁)_Ω` and `(ρ̄η₁)_Ω`.
    pub mean_u1: f64,
    pub mean_eta1: f64,
    /// L¹ sizes in the order of [`ESCAPE_NAMES`].
    pub escape: Vec<f64>,
}

pub const ESCAPE_NAMES: [&str; 22] = [
    "rho_eta", "eta1", "eta2", "d1_eta1", "d1_eta2", "d2_eta1", "d2_eta2", "A1_eta1", "A1_eta2",
    "A2_eta1", "A2_eta2", "rho_u", "u1", "u2", "d1_u1", "d1_u2", "d2_u1", "d2_u2", "A1_u1",
    "A1_u2", "A2_u1", "A2_u2",
];

fn hi(v: &VectorField, i: usize) -> f64 {
    v.weighted_norm2(|k2, kap2| hi_multiplier(i, k2, kap2))
}

fn hi_s(f: &Field, i: usize) -> f64 {
    f.weighted_norm2(|k2, kap2| hi_multiplier(i, k2, kap2))
}

pub fn total_energy_and_dissipation(state: &FlowState) -> EnergyParts {
    let d1eta1 = state.eta.c1.ddy1();
    EnergyParts {
        energy_terms: [
            hi(&state.eta, 3),
            hi(&state.u, 2),
            hi(&state.ut, 0),
            hi_s(&state.q, 1),
        ],
        dissipation_terms: [
            hi_s(&d1eta1, 2),
            hi_s(&state.eta.c2, 3),
            hi(&state.u, 3),
            hi(&state.ut, 1),
            hi_s(&state.q, 2),
        ],
    }
}

pub fn weighted_functionals_parts(state: &FlowState) -> WeightedParts {
    let eta = &state.eta;
    let eta2 = &eta.c2;
    let e_grp1 = eta2.weighted_norm2(|_, kap2| kap2.powi(3))
        + eta.weighted_norm2(|k2, kap2| k2 * kap2 * kap2);
    let e_grp2 = eta2.weighted_norm2(|_, kap2| kap2 * kap2)
        + eta.weighted_norm2(|k2, kap2| kap2 * k2 * (1.0 + k2));
    let eta2_pair = eta2.weighted_norm2(|_, kap2| 1.0 + kap2);
    let d1eta_bar2 = eta.weighted_norm2(|k2, kap2| k2 * li_bar_multiplier(2, 0, k2, kap2));
    let e_grp3 = eta2_pair + d1eta_bar2 + hi(&state.u, 2) + hi_s(&state.q, 1) + hi(&state.ut, 0);
    let d_grp1 = eta.weighted_norm2(|k2, kap2| k2 * k2 * kap2) + hi(&state.u, 3);
    let d_grp2 = eta2_pair
        + d1eta_bar2
        + state
            .u
            .weighted_norm2(|k2, kap2| li_bar_multiplier(1, 2, k2, kap2))
        + state
            .q
            .weighted_norm2(|k2, kap2| li_bar_multiplier(1, 1, k2, kap2));
    let d_grp3 = state
        .u
        .weighted_norm2(|k2, kap2| k2 * li_bar_multiplier(1, 1, k2, kap2))
        + hi(&state.ut, 1);
    WeightedParts {
        frak_e_groups: [e_grp1, e_grp2, e_grp3],
        frak_d_groups: [d_grp1, d_grp2, d_grp3],
    }
}

/// `(𝔈, 𝔇)` at time `t`.
pub fn weighted_functionals(state: &FlowState, t: f64) -> (f64, f64) {
    let parts = weighted_functionals_parts(state);
    (parts.frak_e(t), parts.frak_d(t))
}

/// L¹ norms of the instability quantities for `χ ∈ {η, u}`.
pub fn escape_quantities(state: &FlowState, profile: &DensityProfile) -> Vec<f64> {
    let grid = *state.grid();
    let y2 = grid.y2_points();
    let nv = grid.nv();
    let mut out = Vec::with_capacity(ESCAPE_NAMES.len());
    for chi in [&state.eta, &state.u] {
        let c2 = chi.c2.physical();
        let mut rho = c2.clone();
        for (idx, v) in rho.data_mut().iter_mut().enumerate() {
            let y = y2[idx % nv];
            *v = profile.eval(y) - profile.eval(y + *v);
        }
        out.push(rho.l1_norm());
        out.push(chi.c1.l1_norm());
        out.push(chi.c2.l1_norm());
        out.push(chi.c1.ddy1().l1_norm());
        out.push(chi.c2.ddy1().l1_norm());
        out.push(chi.c1.ddy2().l1_norm());
        out.push(chi.c2.ddy2().l1_norm());
        let (a1_1, a2_1) = state.metric.grad(&chi.c1);
        let (a1_2, a2_2) = state.metric.grad(&chi.c2);
        out.push(a1_1.l1_norm());
        out.push(a1_2.l1_norm());
        out.push(a2_1.l1_norm());
        out.push(a2_2.l1_norm());
    }
    out
}

/// Everything needed to turn states into [`EnergyReport`]s for one run.
pub struct ReportContext {
    physics: Physics,
    profile: DensityProfile,
    rho: Vec<f64>,
    problem: LinearProblem,
    volume: f64,
}

impl ReportContext {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        let p = cfg.physics;
        let problem = LinearProblem::new(
            &cfg.profile,
            LinearParams {
                g: p.g,
                lambda: p.lambda,
                mu: p.mu,
            },
            cfg.grid.n2(),
        )?;
        Ok(Self {
            physics: p,
            profile: cfg.profile.clone(),
            rho: cfg.profile.on_grid(&cfg.grid),
            problem,
            volume: cfg.grid.period() * cfg.grid.h(),
        })
    }

    pub fn report(&self, state: &FlowState) -> Result<EnergyReport> {
        let parts = total_energy_and_dissipation(state);
        let weighted = weighted_functionals_parts(state);
        let t = state.t;
        let norms = NormTable {
            eta_h3: parts.energy_terms[0].sqrt(),
            u_h2: parts.energy_terms[1].sqrt(),
            ut_l2: parts.energy_terms[2].sqrt(),
            q_h1: parts.energy_terms[3].sqrt(),
            d1eta_bar2_0: state
                .eta
                .weighted_norm2(|k2, kap2| k2 * li_bar_multiplier(2, 0, k2, kap2))
                .sqrt(),
            eta2_l2: state.eta.c2.norm_l2(),
            u_h3: parts.dissipation_terms[2].sqrt(),
            q_h2: parts.dissipation_terms[4].sqrt(),
            u_l2: state.u.norm_l2(),
            eta_l2: state.eta.norm_l2(),
            eta1_l2: state.eta.c1.norm_l2(),
            ut_h1: parts.dissipation_terms[3].sqrt(),
        };
        let w3 = japanese_bracket(t).powi(3);
        let decay_weighted =
            w3 * (parts.energy_terms[1] + parts.energy_terms[2] + parts.energy_terms[3]);
        let mean = |f: &Field| f.mul_vertical(&self.rho).integral() / self.volume;
        Ok(EnergyReport {
            t,
            e_pot: self.problem.potential_energy(&state.eta, self.physics.m)?,
            e_total: parts.energy(),
            d_total: parts.dissipation(),
            frak_e: weighted.frak_e(t),
            frak_d: weighted.frak_d(t),
            parts,
            weighted,
            norms,
            decay_weighted,
            j_drift: state.j_drift(),
            div_residual: state.div_residual,
            mean_u1: mean(&state.u.c1),
            mean_eta1: mean(&state.eta.c1),
            escape: escape_quantities(state, &self.profile),
        })
    }
}
