use std::f64::consts::PI;

use mrt_core::spectral::{
    divergence, gradient, helmholtz_solve, inverse_laplacian, laplacian, leray_project,
    project_div_free, read_field, write_field, Field, HMode, MetricField, Parity,
    ProjectionOptions, SlabGrid, Space, VectorField,
};
use proptest::prelude::*;

fn grid() -> SlabGrid {
    SlabGrid::new(1.3, 0.8, 16, 16).unwrap()
}

fn max_diff(a: &Field, b: &Field) -> f64 {
    (&a.physical() - &b.physical()).max_abs()
}

#[test]
fn rejects_bad_grids() {
    assert!(SlabGrid::new(1.0, 1.0, 12, 16).is_err());
    assert!(SlabGrid::new(1.0, 1.0, 16, 2).is_err());
    assert!(SlabGrid::new(-1.0, 1.0, 16, 16).is_err());
}

#[test]
fn dirichlet_walls_are_enforced() {
    let g = grid();
    let data = vec![1.0; g.len()];
    assert!(Field::from_data(g, Parity::Dirichlet, Space::Physical, data.clone()).is_err());
    assert!(Field::from_data(g, Parity::Neumann, Space::Physical, data).is_ok());
    let f = Field::from_fn(g, Parity::Dirichlet, |_, _| 1.0);
    let nv = g.nv();
    for i in 0..g.n1() {
        assert_eq!(f.at(i, 0), 0.0);
        assert_eq!(f.at(i, nv - 1), 0.0);
    }
}

#[test]
fn derivatives_of_trigonometric_products() {
    let g = grid();
    let (l, h) = (g.l(), g.h());
    let (n, j) = (3.0, 2.0);
    let (k, kap) = (n / l, j * PI / h);
    let c = Field::from_fn(g, Parity::Neumann, |y1, y2| {
        (k * y1).sin() * (kap * y2).cos()
    });
    let s = Field::from_fn(g, Parity::Dirichlet, |y1, y2| {
        (k * y1).cos() * (kap * y2).sin()
    });

    let c1 = Field::from_fn(g, Parity::Neumann, |y1, y2| {
        k * (k * y1).cos() * (kap * y2).cos()
    });
    let c2 = Field::from_fn(g, Parity::Dirichlet, |y1, y2| {
        -kap * (k * y1).sin() * (kap * y2).sin()
    });
    let s2 = Field::from_fn(g, Parity::Neumann, |y1, y2| {
        kap * (k * y1).cos() * (kap * y2).cos()
    });

    assert!(max_diff(&c.ddy1(), &c1) < 1e-12);
    assert_eq!(c.ddy2().parity(), Parity::Dirichlet);
    assert!(max_diff(&c.ddy2(), &c2) < 1e-12);
    assert!(max_diff(&s.ddy2(), &s2) < 1e-12);
    let lap = Field::from_fn(g, Parity::Neumann, |y1, y2| {
        -(k * k + kap * kap) * (k * y1).sin() * (kap * y2).cos()
    });
    assert!(max_diff(&laplacian(&c), &lap) < 1e-10);
}

#[test]
fn continuum_norms_of_single_modes() {
    let g = grid();
    let (l, h) = (g.l(), g.h());
    let f = Field::from_fn(g, Parity::Neumann, |y1, y2| {
        (2.0 * y1 / l).cos() * (3.0 * PI * y2 / h).cos()
    });
    // ∫ cos² over one period is πL, over (0, h) it is h/2.
    let expect = (PI * l * h / 2.0).sqrt();
    assert!((f.norm_l2() - expect).abs() < 1e-12);
    assert!((f.discrete_l2() - expect).abs() < 1e-12);
    let one = Field::from_fn(g, Parity::Neumann, |_, _| 1.0);
    assert!((one.integral() - 2.0 * PI * l * h).abs() < 1e-12);
    assert!((one.norm_l2() - (2.0 * PI * l * h).sqrt()).abs() < 1e-12);
    assert!((f.coeff(HMode::Cos(2), 3) - 1.0).abs() < 1e-12);
}

#[test]
fn leray_projection_is_divergence_free_and_idempotent() {
    let g = grid();
    let v = VectorField::from_fns(
        g,
        |y1, y2| (y1 / g.l()).sin() * (1.0 + y2 * y2),
        |y1, y2| (2.0 * y1 / g.l()).cos() * (PI * y2 / g.h()).sin() + y2 * (g.h() - y2),
    );
    let (w, _) = leray_project(&v);
    assert!(divergence(&w).norm_l2() < 1e-10 * v.norm_l2());
    let (w2, phi2) = leray_project(&w);
    assert!((&w2 - &w).norm_l2() < 1e-12);
    assert!(phi2.norm_l2() < 1e-12);
}

#[test]
fn helmholtz_inverts_its_operator() {
    let g = grid();
    let rhs = Field::from_fn(g, Parity::Dirichlet, |y1, y2| {
        (y1 / g.l()).cos() * y2 * (g.h() - y2)
    })
    .spectral()
    .remove_nyquist();
    let x = helmholtz_solve(2.0, 0.3, &rhs, Parity::Dirichlet).unwrap();
    let back = &x.scale(2.0) - &laplacian(&x).scale(0.3);
    assert!(max_diff(&back, &rhs) < 1e-12);
    assert!(helmholtz_solve(0.0, 1.0, &rhs, Parity::Dirichlet).is_err());
    assert!(helmholtz_solve(1.0, 1.0, &rhs, Parity::Neumann).is_err());
}

#[test]
fn identity_metric_projection_matches_leray() {
    let g = grid();
    let v = VectorField::from_fns(
        g,
        |y1, y2| (y1 / g.l()).sin() * y2,
        |y1, y2| (y1 / g.l()).cos() * (PI * y2 / g.h()).sin(),
    );
    let eta = VectorField::zeros(g, Space::Spectral);
    let metric = MetricField::from_eta(&eta);
    assert_eq!(metric.j_range(), (1.0, 1.0));
    let rho = vec![1.0; g.nv()];
    let p = project_div_free(&v, &metric, &rho, None, &ProjectionOptions::default()).unwrap();
    let (w, _) = leray_project(&v);
    assert!((&p.u - &w).norm_l2() < 1e-10);
    assert!(p.residual < 1e-10);
}

#[test]
fn field_serialization_round_trip() {
    let g = grid();
    let f = Field::from_fn(g, Parity::Dirichlet, |y1, y2| y1.sin() * y2 * (g.h() - y2));
    let mut buf = Vec::new();
    write_field(&mut buf, &f).unwrap();
    let back = read_field(buf.as_slice()).unwrap();
    assert_eq!(back.parity(), Parity::Dirichlet);
    assert!(max_diff(&back, &f) == 0.0);
}

fn field_strategy(parity: Parity) -> impl Strategy<Value = Field> {
    let g = grid();
    prop::collection::vec(-1.0f64..1.0, g.len()).prop_map(move |mut data| {
        if parity == Parity::Dirichlet {
            let nv = g.nv();
            for i in 0..g.n1() {
                data[i * nv] = 0.0;
                data[i * nv + nv - 1] = 0.0;
            }
        }
        Field::from_data(g, parity, Space::Physical, data).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn transforms_round_trip(f in field_strategy(Parity::Neumann), s in field_strategy(Parity::Dirichlet)) {
        prop_assert!(max_diff(&f.spectral().physical(), &f) < 1e-12);
        prop_assert!(max_diff(&s.spectral().physical(), &s) < 1e-12);
    }

    #[test]
    fn parseval_holds_for_grid_data(f in field_strategy(Parity::Neumann)) {
        // Below the Nyquist slots the trapezoid rule is exact for products
        // of cosine modes.
        let f = f.spectral().remove_nyquist();
        let a = f.discrete_l2();
        prop_assert!((f.norm_l2() - a).abs() <= 1e-10 * a.max(1.0));
    }

    #[test]
    fn inverse_laplacian_inverts_on_mean_free(f in field_strategy(Parity::Neumann)) {
        let mut s = f.spectral().remove_nyquist();
        s.set(0, 0, 0.0);
        let back = laplacian(&inverse_laplacian(&s));
        prop_assert!(max_diff(&back, &s) < 1e-9 * s.max_abs().max(1.0));
    }

    #[test]
    fn gradient_is_curl_free(f in field_strategy(Parity::Neumann)) {
        let v = gradient(&f.spectral().remove_nyquist());
        let curl = &v.c2.ddy1() - &v.c1.ddy2();
        prop_assert!(curl.max_abs() < 1e-8 * v.max_abs().max(1.0));
    }

    #[test]
    fn inner_product_is_bilinear(f in field_strategy(Parity::Dirichlet), g in field_strategy(Parity::Dirichlet), c in -3.0f64..3.0) {
        let mut h = f.clone();
        h.axpy(c, &g);
        let lhs = h.inner(&f);
        let rhs = f.inner(&f) + c * g.inner(&f);
        prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
    }
}
