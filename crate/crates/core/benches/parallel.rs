//! Sequential versus rayon execution of the data-parallel kernels.
//!
//! Both variants run in one binary; `par::set_parallel` switches the
//! dispatch. Built without the `parallel` feature, both rows take the
//! sequential path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mrt_core::dynamics::{seed_initial_data, Physics, SeedOptions, SimConfig, Stepper, Tolerances};
use mrt_core::linstab::{LinearParams, LinearProblem};
use mrt_core::par;
use mrt_core::profiles::DensityProfile;
use mrt_core::spectral::{Field, Parity, SlabGrid};

const MODES: [(&str, bool); 2] = [("sequential", false), ("parallel", true)];

fn setup() -> (DensityProfile, LinearProblem, SimConfig) {
    let profile = DensityProfile::affine(2.0, 3.0, 1.0, 1025).unwrap();
    let params = LinearParams {
        g: 9.8,
        lambda: 1.0,
        mu: 0.1,
    };
    let problem = LinearProblem::new(&profile, params, 64).unwrap();
    let cfg = SimConfig {
        physics: Physics {
            mu: 0.1,
            g: 9.8,
            lambda: 1.0,
            m: 0.5,
        },
        grid: SlabGrid::new(1.0, 1.0, 64, 128).unwrap(),
        profile: profile.clone(),
        dt: 0.01,
        dt_min: 1e-6,
        t_end: 0.01,
        report_interval: 0.01,
        tolerances: Tolerances::default(),
    };
    (profile, problem, cfg)
}

fn transforms(c: &mut Criterion) {
    let grid = SlabGrid::new(1.0, 1.0, 128, 256).unwrap();
    let f = Field::from_fn(grid, Parity::Neumann, |y1, y2| {
        (3.0 * y1).sin() * (2.0 * y2).cos() + y2
    });
    let mut group = c.benchmark_group("transform_round_trip_128x256");
    for (name, on) in MODES {
        par::set_parallel(on);
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| f.spectral().physical())
        });
    }
    group.finish();
}

fn dispersion(c: &mut Criterion) {
    let (_, problem, _) = setup();
    let mut group = c.benchmark_group("dispersion_16_modes");
    group.sample_size(10);
    for (name, on) in MODES {
        par::set_parallel(on);
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| problem.dispersion(0.3, 1.0, 16).unwrap())
        });
    }
    group.finish();
}

fn time_step(c: &mut Criterion) {
    let (_, problem, cfg) = setup();
    let mode = problem.fastest_mode(0.5, 1.0, 8).unwrap().unwrap();
    let state = seed_initial_data(&mode, SeedOptions::new(1e-3), &cfg)
        .unwrap()
        .state;
    let stepper = Stepper::new(&cfg).unwrap();
    let mut group = c.benchmark_group("step_64x128");
    group.sample_size(10);
    for (name, on) in MODES {
        par::set_parallel(on);
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| stepper.advance(&state, cfg.dt).unwrap())
        });
    }
    group.finish();
    par::set_parallel(true);
}

criterion_group!(benches, transforms, dispersion, time_step);
criterion_main!(benches);
