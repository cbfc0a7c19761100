use std::f64::consts::PI;

use mrt_core::dynamics::FlowState;
use mrt_core::energetics::{
    detect_escape_time, drift_limit, fit_rate, fit_series, hi_multiplier, japanese_bracket,
    li_bar_multiplier, monitor_energy_inequality, sobolev_norm, total_energy_and_dissipation,
    weighted_functionals, EnergyParts, EnergyReport, NormTable, RateModel, WeightedParts,
    ESCAPE_NAMES,
};
use mrt_core::spectral::{Field, Parity, SlabGrid, VectorField};
use proptest::prelude::*;

fn synthetic(t: f64, e: f64, d: f64) -> EnergyReport {
    EnergyReport {
        t,
        e_pot: 0.0,
        e_total: e,
        d_total: d,
        frak_e: e,
        frak_d: d,
        parts: EnergyParts::default(),
        weighted: WeightedParts::default(),
        norms: NormTable {
            u_l2: e.sqrt(),
            ..NormTable::default()
        },
        decay_weighted: e,
        j_drift: 0.0,
        div_residual: 0.0,
        mean_u1: 0.0,
        mean_eta1: 0.0,
        escape: vec![e; ESCAPE_NAMES.len()],
    }
}

fn series(n: usize, t_end: f64, f: impl Fn(f64) -> (f64, f64)) -> Vec<EnergyReport> {
    (0..n)
        .map(|i| {
            let t = t_end * i as f64 / (n - 1) as f64;
            let (e, d) = f(t);
            synthetic(t, e, d)
        })
        .collect()
}

fn grid() -> SlabGrid {
    SlabGrid::new(1.0, 1.0, 16, 16).unwrap()
}

#[test]
fn bracket_and_multipliers() {
    assert_eq!(japanese_bracket(0.0), 1.0);
    assert!((japanese_bracket(3.0) - 10f64.sqrt()).abs() < 1e-15);
    let (k2, kap2) = (4.0, 9.0);
    assert_eq!(hi_multiplier(0, k2, kap2), 1.0);
    assert_eq!(hi_multiplier(1, k2, kap2), 1.0 + k2 + kap2);
    assert_eq!(li_bar_multiplier(1, 0, k2, kap2), 1.0 + k2);
}

#[test]
fn sobolev_norm_of_a_single_mode() {
    let g = grid();
    let (n, j) = (2.0, 3.0);
    let f = Field::from_fn(g, Parity::Neumann, |y1, y2| {
        (n * y1).cos() * (j * PI * y2).cos()
    });
    let (k2, kap2) = (n * n, (j * PI).powi(2));
    let base = PI / 2.0;
    let h2 = base * (1.0 + k2 + kap2 + k2 * k2 + k2 * kap2 + kap2 * kap2);
    assert!((sobolev_norm(&f, 0, 2).powi(2) - h2).abs() < 1e-9 * h2);
    // ‖∂₁f‖₀ = k‖f‖₀.
    assert!((sobolev_norm(&f, 1, 0).powi(2) - k2 * base).abs() < 1e-10);
}

#[test]
fn exponential_and_power_fits_recover_rates() {
    let exp: Vec<(f64, f64)> = (0..50)
        .map(|i| {
            let t = 0.1 * i as f64;
            (t, 5.0 * (0.3 * t).exp())
        })
        .collect();
    let fit = fit_rate(&exp, "q", (0.0, 5.0), RateModel::Exponential).unwrap();
    assert!((fit.value - 0.3).abs() < 1e-12);
    assert!((fit.log_prefactor - 5f64.ln()).abs() < 1e-12);
    assert!(fit.residual < 1e-12);
    assert_eq!(fit.samples, 50);

    let pow: Vec<(f64, f64)> = (0..80)
        .map(|i| {
            let t = 0.5 * i as f64;
            (t, 2.0 * japanese_bracket(t).powf(-1.5))
        })
        .collect();
    let fit = fit_rate(&pow, "q", (1.0, 40.0), RateModel::Power).unwrap();
    assert!((fit.value - 1.5).abs() < 1e-12);
}

#[test]
fn fits_reject_bad_windows() {
    let s = vec![(0.0, 1.0), (1.0, 2.0), (2.0, -1.0)];
    assert!(fit_rate(&s, "q", (0.0, 1.0), RateModel::Exponential).is_ok());
    assert!(fit_rate(&s, "q", (0.0, 2.0), RateModel::Exponential).is_err());
    assert!(fit_rate(&s, "q", (0.5, 1.5), RateModel::Exponential).is_err());
    assert!(fit_rate(&s, "q", (1.0, 0.0), RateModel::Exponential).is_err());
    let reports = series(10, 1.0, |t| ((-t).exp(), 0.0));
    assert!(fit_series(
        &reports,
        "no_such_quantity",
        (0.0, 1.0),
        RateModel::Exponential
    )
    .is_err());
    let f = fit_series(&reports, "E_total", (0.0, 1.0), RateModel::Exponential).unwrap();
    assert!((f.value + 1.0).abs() < 1e-12);
}

#[test]
fn monitor_passes_dissipative_decay() {
    // E' = −D exactly: E + ∫D stays at E(0).
    let reports = series(200, 10.0, |t| ((-t).exp(), (-t).exp()));
    let v = monitor_energy_inequality(&reports, 10.0).unwrap();
    assert!(v.pass);
    assert!((v.ratio - 1.0).abs() < 1e-3);
    assert!(v.envelope_nonincreasing);
    assert_eq!(v.first_violation, None);
}

#[test]
fn monitor_flags_growth() {
    let reports = series(200, 10.0, |t| ((0.5 * t).exp(), 0.0));
    let v = monitor_energy_inequality(&reports, 10.0).unwrap();
    assert!(!v.pass);
    assert!(!v.bounded);
    assert!(v.first_violation.unwrap() <= (10f64).ln() / 0.5 + 0.1);

    // Bounded but rising late.
    let reports = series(200, 10.0, |t| (1.0 + 0.5 * (t - 5.0).max(0.0) / 5.0, 0.0));
    let v = monitor_energy_inequality(&reports, 10.0).unwrap();
    assert!(v.bounded && !v.envelope_nonincreasing && !v.pass);
}

#[test]
fn monitor_needs_enough_reports() {
    assert!(monitor_energy_inequality(&series(5, 1.0, |_| (1.0, 0.0)), 10.0).is_err());
    assert!(monitor_energy_inequality(&series(20, 1.0, |_| (0.0, 0.0)), 10.0).is_err());
}

#[test]
fn escape_time_interpolates_the_crossing() {
    let reports = series(101, 10.0, |t| (1e-4 * t.exp(), 0.0));
    let eps = 1e-2;
    let t = detect_escape_time(&reports, eps, &[]).unwrap();
    assert!((t - (100f64).ln()).abs() < 1e-12);
    assert_eq!(detect_escape_time(&reports, 1e10, &[]), None);
    assert_eq!(detect_escape_time(&reports, 0.0, &[]), None);
    let t1 = detect_escape_time(&reports, eps, &[0]).unwrap();
    assert_eq!(t, t1);
}

fn eta1_snapshots(t_end: f64, y1_amp: f64) -> Vec<(f64, Field)> {
    let g = grid();
    (0..=100)
        .map(|i| {
            let t = t_end * i as f64 / 100.0;
            let f = Field::from_fn(g, Parity::Neumann, |y1, y2| {
                0.01 * (PI * y2).cos() + y1_amp * (-t).exp() * y1.cos() * (PI * y2).cos()
            });
            (t, f)
        })
        .collect()
}

#[test]
fn drift_limit_separates_mean_and_fluctuation() {
    let d = drift_limit(&eta1_snapshots(40.0, 1e-3)).unwrap();
    // ‖0.01 cos(πy₂)‖₀ over the slab is 0.01·√(2π·½).
    assert!((d.estimate_norm - 0.01 * PI.sqrt()).abs() < 1e-12);
    assert!(d.y1_dependence < 1e-10);
    assert!(d.residual_decreasing());
    assert_eq!(d.windows.len(), 3);
    assert!((d.profile[0] - 0.01).abs() < 1e-12);
    assert!(drift_limit(&[]).is_err());
}

#[test]
fn weighted_functionals_at_rest() {
    let state = FlowState::zero(grid());
    let parts = total_energy_and_dissipation(&state);
    assert_eq!(parts.energy(), 0.0);
    assert_eq!(weighted_functionals(&state, 3.0), (0.0, 0.0));
}

fn random_state(scale: f64, a: f64, b: f64) -> FlowState {
    let g = grid();
    let mut s = FlowState::zero(g);
    s.eta = VectorField::from_fns(
        g,
        |y1, y2| scale * a * (2.0 * y1).sin() * (PI * y2).cos(),
        |y1, y2| scale * b * y1.cos() * (2.0 * PI * y2).sin(),
    )
    .spectral();
    s.u = VectorField::from_fns(
        g,
        |y1, y2| scale * b * y1.sin() * (PI * y2).cos(),
        |y1, y2| scale * a * (3.0 * y1).cos() * (PI * y2).sin(),
    )
    .spectral();
    s.ut = s.u.scale(0.5);
    s.q = Field::from_fn(g, Parity::Neumann, |y1, y2| {
        scale * a * y1.cos() * (PI * y2).cos()
    })
    .spectral();
    s
}

proptest! {
    #[test]
    fn functionals_are_quadratic(a in -1.0f64..1.0, b in -1.0f64..1.0, c in 0.1f64..10.0, t in 0.0f64..20.0) {
        let s1 = random_state(1.0, a, b);
        let s2 = random_state(c, a, b);
        let p1 = total_energy_and_dissipation(&s1);
        let p2 = total_energy_and_dissipation(&s2);
        prop_assert!((p2.energy() - c * c * p1.energy()).abs() <= 1e-10 * (1.0 + p2.energy()));
        prop_assert!((p2.dissipation() - c * c * p1.dissipation()).abs() <= 1e-10 * (1.0 + p2.dissipation()));
        let (e1, d1) = weighted_functionals(&s1, t);
        let (e2, _) = weighted_functionals(&s2, t);
        prop_assert!((e2 - c * c * e1).abs() <= 1e-10 * (1.0 + e2));
        // Weights ⟨t⟩ ≥ 1 only increase the functionals.
        let (e0, d0) = weighted_functionals(&s1, 0.0);
        prop_assert!(e1 >= e0 * (1.0 - 1e-12) && d1 >= d0 * (1.0 - 1e-12));
    }

    #[test]
    fn escape_time_shifts_with_amplitude(rate in 0.2f64..2.0, shift in 0.5f64..4.0) {
        let a = series(400, 20.0, |t| (1e-4 * (rate * t).exp(), 0.0));
        let b = series(400, 20.0, |t| (1e-4 * (rate * (t - shift)).exp(), 0.0));
        let ta = detect_escape_time(&a, 1e-2, &[]);
        let tb = detect_escape_time(&b, 1e-2, &[]);
        if let (Some(ta), Some(tb)) = (ta, tb) {
            prop_assert!((tb - ta - shift).abs() < 1e-9);
        }
    }
}
