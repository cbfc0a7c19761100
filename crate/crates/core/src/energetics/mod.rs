//! Energy functionals, anisotropic Sobolev norms, and time-series analysis.
//!
//! `‖f‖_{l,i} = ‖∂₁ˡf‖_{Hⁱ}` and `‖f‖²_{l̲,i} = Σ_{n≤l} ‖f‖²_{n,i}`, all
//! evaluated from spectral coefficients. Time weights use
//! `⟨t⟩ = (1 + t²)^{1/2}`.

mod fits;
mod report;

pub use fits::{
    detect_escape_time, drift_limit, fit_rate, fit_series, monitor_energy_inequality,
    report_quantity, DecayFit, DriftLimit, DriftWindow, EnergyVerdict, RateModel,
};
pub use report::{
    escape_quantities, total_energy_and_dissipation, weighted_functionals, EnergyParts,
    EnergyReport, NormTable, ReportContext, WeightedParts, ESCAPE_NAMES,
};

use crate::spectral::{Field, VectorField};

pub fn japanese_bracket(t: f64) -> f64 {
    (1.0 + t * t).sqrt()
}

/// `Σ_{a+b≤i} k^{2a} κ^{2b}`.
pub fn hi_multiplier(i: usize, k2: f64, kap2: f64) -> f64 {
    let mut total = 0.0;
    let mut ka = 1.0;
    for a in 0..=i {
        let mut kb = 1.0;
        for _ in 0..=(i - a) {
            total += ka * kb;
            kb *= kap2;
        }
        ka *= k2;
    }
    total
}

/// Multiplier of `‖·‖²_{l,i}`.
pub fn li_multiplier(l: usize, i: usize, k2: f64, kap2: f64) -> f64 {
    k2.powi(l as i32) * hi_multiplier(i, k2, kap2)
}

/// Multiplier of `‖·‖²_{l̲,i}`.
pub fn li_bar_multiplier(l: usize, i: usize, k2: f64, kap2: f64) -> f64 {
    (0..=l).map(|n| k2.powi(n as i32)).sum::<f64>() * hi_multiplier(i, k2, kap2)
}

/// `‖f‖_{l,i}`.
pub fn sobolev_norm(f: &Field, l: usize, i: usize) -> f64 {
    f.weighted_norm2(|k2, kap2| li_multiplier(l, i, k2, kap2))
        .sqrt()
}

/// `‖v‖_{l,i}` summed over both components.
pub fn sobolev_norm_vec(v: &VectorField, l: usize, i: usize) -> f64 {
    v.weighted_norm2(|k2, kap2| li_multiplier(l, i, k2, kap2))
        .sqrt()
}

/// `‖f‖_{l̲,i}`.
pub fn sobolev_norm_bar(f: &Field, l: usize, i: usize) -> f64 {
    f.weighted_norm2(|k2, kap2| li_bar_multiplier(l, i, k2, kap2))
        .sqrt()
}

pub fn sobolev_norm_bar_vec(v: &VectorField, l: usize, i: usize) -> f64 {
    v.weighted_norm2(|k2, kap2| li_bar_multiplier(l, i, k2, kap2))
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multipliers_count_mixed_derivatives() {
        // H²: 1 + k² + κ² + k⁴ + k²κ² + κ⁴
        let (k2, kap2) = (2.0, 3.0);
        assert_eq!(
            hi_multiplier(2, k2, kap2),
            1.0 + 2.0 + 3.0 + 4.0 + 6.0 + 9.0
        );
        assert_eq!(li_multiplier(1, 0, k2, kap2), 2.0);
        assert_eq!(li_bar_multiplier(2, 0, k2, kap2), 1.0 + 2.0 + 4.0);
    }
}
