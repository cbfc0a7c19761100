use mrt_core::dynamics::{
    build_a, read_snapshot, run, seed_initial_data, step, to_eulerian, write_snapshot, FlowState,
    Physics, SeedOptions, SimConfig, SnapshotMeta, Termination, Tolerances,
};
use mrt_core::energetics::ReportContext;
use mrt_core::linstab::{LinearMode, LinearParams, LinearProblem};
use mrt_core::profiles::DensityProfile;
use mrt_core::spectral::{Field, Parity, SlabGrid, VectorField};
use proptest::prelude::*;

const N1: usize = 16;
const N2: usize = 32;

fn profile() -> DensityProfile {
    DensityProfile::affine(2.0, 3.0, 1.0, 1025).unwrap()
}

fn problem() -> LinearProblem {
    let p = LinearParams {
        g: 9.8,
        lambda: 1.0,
        mu: 0.1,
    };
    LinearProblem::new(&profile(), p, N2).unwrap()
}

fn config(m: f64, dt: f64, t_end: f64) -> SimConfig {
    SimConfig {
        physics: Physics {
            mu: 0.1,
            g: 9.8,
            lambda: 1.0,
            m,
        },
        grid: SlabGrid::new(1.0, 1.0, N1, N2).unwrap(),
        profile: profile(),
        dt,
        dt_min: 1e-6,
        t_end,
        report_interval: 0.1,
        tolerances: Tolerances::default(),
    }
}

fn mode(m: f64) -> LinearMode {
    problem().mode(1, 1.0, m).unwrap().unwrap()
}

#[test]
fn validation_rejects_bad_configs() {
    assert!(config(0.0, 0.01, 1.0).validate().is_ok());
    assert!(config(0.0, 0.0, 1.0).validate().is_err());
    assert!(config(0.0, 0.01, -1.0).validate().is_err());
    let mut c = config(0.0, 0.01, 1.0);
    c.physics.mu = 0.0;
    assert!(c.validate().is_err());
    let mut c = config(0.0, 0.01, 1.0);
    c.profile = DensityProfile::affine(2.0, 3.0, 2.0, 65).unwrap();
    assert!(c.validate().is_err());
}

#[test]
fn equilibrium_is_a_fixed_point() {
    let cfg = config(0.5, 0.05, 0.5);
    let rest = FlowState::zero(cfg.grid);
    let next = step(&rest, &cfg).unwrap();
    assert_eq!(next.u.max_abs(), 0.0);
    assert_eq!(next.eta.max_abs(), 0.0);
    assert_eq!(next.q.max_abs(), 0.0);
    let result = run(&cfg, rest, &mut []).unwrap();
    assert_eq!(result.termination, Termination::Completed);
    assert_eq!(result.final_state.u.max_abs(), 0.0);
    assert!((result.final_state.t - 0.5).abs() < 1e-12);
    assert_eq!(result.reports.len(), 6);
}

#[test]
fn seed_is_linear_in_delta_and_gauge_fixed() {
    let cfg = config(0.3, 0.01, 0.0);
    let m = mode(0.3);
    let a = seed_initial_data(&m, SeedOptions::new(1e-6), &cfg).unwrap();
    let b = seed_initial_data(&m, SeedOptions::new(2e-6), &cfg).unwrap();
    let ratio = b.state.u.norm_l2() / a.state.u.norm_l2();
    assert!((ratio - 2.0).abs() < 1e-5);
    // The constraint correction is second order in delta.
    assert!((b.correction / a.correction - 4.0).abs() < 0.05);
    assert!(a.correction < 1e-5 * a.state.u.norm_l2());
    let rho = profile().on_grid(&cfg.grid);
    assert!(FlowState::weighted_mean(&a.state.u.c1, &rho).abs() < 1e-15);
    assert!(FlowState::weighted_mean(&a.state.eta.c1, &rho).abs() < 1e-15);
    assert!(a.state.j_drift() < 1e-12);
    assert!(seed_initial_data(&m, SeedOptions::new(0.0), &cfg).is_err());
}

#[test]
fn small_seed_grows_at_the_linear_rate() {
    let m = mode(0.3);
    let t_end = 1.0 / m.lambda;
    let cfg = config(0.3, 0.01, t_end);
    let seeded = seed_initial_data(&m, SeedOptions::new(1e-7), &cfg).unwrap();
    let result = run(&cfg, seeded.state, &mut []).unwrap();
    assert_eq!(result.termination, Termination::Completed);
    let first = &result.reports[1];
    let last = result.reports.last().unwrap();
    let rate = (last.norms.u_l2 / first.norms.u_l2).ln() / (last.t - first.t);
    assert!(
        (rate - m.lambda).abs() < 0.02 * m.lambda,
        "{rate} vs {}",
        m.lambda
    );
    assert!(result.counters.max_div_residual < 1e-10);
    assert_eq!(result.counters.clamp_events, 0);
}

#[test]
fn snapshot_round_trip_restores_the_state() {
    let cfg = config(0.3, 0.01, 0.0);
    let seeded = seed_initial_data(&mode(0.3), SeedOptions::new(1e-3), &cfg).unwrap();
    let dir = std::env::temp_dir().join(format!("mrt-snapshot-{}", std::process::id()));
    let mut meta = SnapshotMeta::new();
    meta.insert("label".into(), "seed".into());
    let files = write_snapshot(&dir, &seeded.state, &meta).unwrap();
    assert_eq!(files.len(), 6);
    let (back, meta_back) = read_snapshot(&dir, &cfg).unwrap();
    assert_eq!(meta_back.get("label").map(String::as_str), Some("seed"));
    assert_eq!(back.t, seeded.state.t);
    assert_eq!((&back.u - &seeded.state.u).max_abs(), 0.0);
    assert_eq!((&back.eta - &seeded.state.eta).max_abs(), 0.0);
    assert!((&back.ut - &seeded.state.ut).max_abs() < 1e-12 * seeded.state.ut.max_abs());

    let other = config(0.3, 0.01, 0.0);
    let coarse = SimConfig {
        grid: SlabGrid::new(1.0, 1.0, 8, 16).unwrap(),
        ..other
    };
    assert!(read_snapshot(&dir, &coarse).is_err());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn eulerian_velocity_of_a_translated_map() {
    let grid = SlabGrid::new(1.0, 1.0, N1, N2).unwrap();
    let c = 0.3;
    let eta = VectorField::new(
        Field::from_fn(grid, Parity::Neumann, |_, _| c),
        Field::zeros(grid, Parity::Dirichlet, mrt_core::spectral::Space::Physical),
    )
    .unwrap()
    .spectral();
    let u = VectorField::new(
        Field::from_fn(grid, Parity::Neumann, |y1, _| y1.cos()),
        Field::zeros(grid, Parity::Dirichlet, mrt_core::spectral::Space::Physical),
    )
    .unwrap()
    .spectral();
    let mut state = FlowState::zero(grid);
    state.metric = build_a(&eta).unwrap();
    state.eta = eta;
    state.u = u;
    let e = to_eulerian(&state, &profile(), 0.0).unwrap();
    let expect = Field::from_fn(grid, Parity::Neumann, |x1, _| (x1 - c).cos());
    assert!((&e.v.c1.physical() - &expect).max_abs() < 1e-10);
    assert!(e.rho_pert.max_abs() < 1e-12);
}

#[test]
fn reports_at_rest_vanish() {
    let cfg = config(0.3, 0.01, 0.0);
    let ctx = ReportContext::new(&cfg).unwrap();
    let r = ctx.report(&FlowState::zero(cfg.grid)).unwrap();
    assert_eq!(r.e_total, 0.0);
    assert_eq!(r.d_total, 0.0);
    assert_eq!(r.frak_e, 0.0);
    assert!(r.escape.iter().all(|q| *q == 0.0));
    assert_eq!(r.j_drift, 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn energy_is_invariant_under_horizontal_shifts(phase in 0.0f64..std::f64::consts::TAU) {
        let cfg = config(0.3, 0.01, 0.0);
        let m = mode(0.3);
        let ctx = ReportContext::new(&cfg).unwrap();
        let base = seed_initial_data(&m, SeedOptions::new(1e-3), &cfg).unwrap();
        let opts = SeedOptions { phase, ..SeedOptions::new(1e-3) };
        let shifted = seed_initial_data(&m, opts, &cfg).unwrap();
        let a = ctx.report(&base.state).unwrap();
        let b = ctx.report(&shifted.state).unwrap();
        prop_assert!((a.e_total - b.e_total).abs() < 1e-8 * a.e_total);
        prop_assert!((a.norms.u_l2 - b.norms.u_l2).abs() < 1e-8 * a.norms.u_l2);
    }

    #[test]
    fn a_step_keeps_gauges_and_parities(delta in 1e-5f64..1e-3, shear in 0.0f64..1.0) {
        let cfg = config(0.3, 0.02, 0.0);
        let opts = SeedOptions { shear, ..SeedOptions::new(delta) };
        let seeded = seed_initial_data(&mode(0.3), opts, &cfg).unwrap();
        let next = step(&seeded.state, &cfg).unwrap();
        let rho = profile().on_grid(&cfg.grid);
        prop_assert!(FlowState::weighted_mean(&next.u.c1, &rho).abs() < 1e-10);
        prop_assert!(FlowState::weighted_mean(&next.eta.c1, &rho).abs() < 1e-10);
        prop_assert_eq!(next.u.c2.parity(), Parity::Dirichlet);
        prop_assert_eq!(next.eta.c1.parity(), Parity::Neumann);
        prop_assert!(next.div_residual < 1e-10);
        prop_assert!(next.j_drift() < 1e-12);
        prop_assert!((next.t - 0.02).abs() < 1e-14);
    }
}
