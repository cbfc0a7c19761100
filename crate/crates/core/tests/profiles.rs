use mrt_core::profiles::{
    check_rt_condition, eval_gravity_term, hydrostatic_pressure, DensityProfile, ProfileKind,
};
use mrt_core::spectral::{Field, Parity, SlabGrid};
use proptest::prelude::*;

fn tanh_exact(lo: f64, hi: f64, c: f64, w: f64, y: f64) -> (f64, f64) {
    let t = ((y - c) / w).tanh();
    (
        lo + (hi - lo) * 0.5 * (1.0 + t),
        (hi - lo) * 0.5 * (1.0 - t * t) / w,
    )
}

#[test]
fn affine_profile_is_exact() {
    let p = DensityProfile::affine(2.0, 3.0, 1.0, 65).unwrap();
    assert_eq!(p.kind(), ProfileKind::Affine);
    for y in [0.0, 0.123, 0.5, 0.999, 1.0] {
        assert!((p.eval(y) - (2.0 + y)).abs() < 1e-14);
        assert!((p.eval_d1(y) - 1.0).abs() < 1e-14);
        assert!(p.eval_d2(y).abs() < 1e-14);
    }
    assert_eq!(p.max_positive_slope(), 1.0);
    assert!(check_rt_condition(&p));
    let stable = DensityProfile::affine(3.0, 2.0, 1.0, 65).unwrap();
    assert!(!check_rt_condition(&stable));
}

#[test]
fn rejects_invalid_parameters() {
    assert!(DensityProfile::affine(-1.0, 2.0, 1.0, 65).is_err());
    assert!(DensityProfile::affine(1.0, 2.0, 1.0, 8).is_err());
    assert!(DensityProfile::tanh_layer(1.0, 2.0, 1.5, 0.1, 1.0, 65).is_err());
    assert!(DensityProfile::tanh_layer(1.0, 2.0, 0.5, 0.0, 1.0, 65).is_err());
}

#[test]
fn tanh_interpolation_converges_at_fourth_order() {
    let (lo, hi, c, w) = (1.0, 2.0, 0.45, 0.1);
    let err = |n: usize| {
        let p = DensityProfile::tanh_layer(lo, hi, c, w, 1.0, n).unwrap();
        (0..997)
            .map(|i| {
                let y = (i as f64 + 0.37) / 997.0;
                (p.eval(y) - tanh_exact(lo, hi, c, w, y).0).abs()
            })
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(129), err(257));
    let order = (e1 / e2).log2();
    assert!(order > 3.5, "order {order}, errors {e1:e} {e2:e}");
    let p = DensityProfile::tanh_layer(lo, hi, c, w, 1.0, 1025).unwrap();
    assert!(!p.unresolved());
    assert!((p.eval_d1(c) - tanh_exact(lo, hi, c, w, c).1).abs() < 1e-8);
    assert!(DensityProfile::tanh_layer(lo, hi, c, 0.01, 1.0, 65)
        .unwrap()
        .unresolved());
}

#[test]
fn hydrostatic_pressure_of_affine_profile() {
    let p = DensityProfile::affine(2.0, 3.0, 1.0, 101).unwrap();
    let g = 9.8;
    let eq = hydrostatic_pressure(&p, g).unwrap();
    // P = −g(2y + y²/2) + C with zero mean: C = g(1 + 1/6).
    for (y, v) in p.sample_points().iter().zip(&eq.pressure) {
        let exact = -g * (2.0 * y + 0.5 * y * y) + g * (1.0 + 1.0 / 6.0);
        assert!((v - exact).abs() < 1e-12, "y={y}: {v} vs {exact}");
    }
    assert!(hydrostatic_pressure(&p, -1.0).is_err());
}

#[test]
fn table_round_trip() {
    let p = DensityProfile::tanh_layer(1.0, 2.5, 0.6, 0.2, 1.0, 129).unwrap();
    let mut buf = Vec::new();
    p.write_table(&mut buf).unwrap();
    let q = DensityProfile::read_table(buf.as_slice()).unwrap();
    assert_eq!(q.kind(), ProfileKind::Tabulated);
    assert_eq!(q.len(), p.len());
    assert!((q.h() - 1.0).abs() < 1e-15);
    for (a, b) in p.samples().iter().zip(q.samples()) {
        assert_eq!(a, b);
    }
    assert!(DensityProfile::read_table("0 1\n0.5 2\n".as_bytes()).is_err());
    assert!(DensityProfile::read_table("0 x\n".as_bytes()).is_err());
}

#[test]
fn gravity_term_counts_clamps() {
    let p = DensityProfile::affine(2.0, 3.0, 1.0, 65).unwrap();
    let grid = SlabGrid::new(1.0, 1.0, 8, 8).unwrap();
    let big = Field::from_fn(grid, Parity::Dirichlet, |_, _| 0.5);
    let t = eval_gravity_term(&p, 9.8, &big, 1.0).unwrap();
    assert!(t.clamped > 0);
    assert!(eval_gravity_term(&p, 9.8, &big, 0.0).is_err());
}

proptest! {
    #[test]
    fn affine_gravity_term_is_linear(a in -0.05f64..0.05, n in 1usize..3) {
        let p = DensityProfile::affine(2.0, 3.0, 1.0, 65).unwrap();
        let grid = SlabGrid::new(1.0, 1.0, 16, 16).unwrap();
        let eta = Field::from_fn(grid, Parity::Dirichlet, |y1, y2| {
            a * (n as f64 * y1).cos() * (std::f64::consts::PI * y2).sin()
        });
        let t = eval_gravity_term(&p, 9.8, &eta, 0.0).unwrap();
        prop_assert_eq!(t.clamped, 0);
        prop_assert!(t.g_cal.physical().data().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn tanh_remainder_is_quadratic(a in 1e-4f64..1e-3) {
        let (lo, hi, c, w) = (1.0, 2.0, 0.5, 0.2);
        let p = DensityProfile::tanh_layer(lo, hi, c, w, 1.0, 2049).unwrap();
        let grid = SlabGrid::new(1.0, 1.0, 8, 16).unwrap();
        let eta = Field::from_fn(grid, Parity::Dirichlet, |_, y2| a * (std::f64::consts::PI * y2).sin());
        let t = eval_gravity_term(&p, 1.0, &eta, 1.0).unwrap();
        let e = eta.physical();
        for (idx, (r, v)) in t.g_cal.physical().data().iter().zip(e.data()).enumerate() {
            let y = grid.y2(idx % grid.nv());
            let expect = 0.5 * p.eval_d2(y) * v * v;
            prop_assert!((r - expect).abs() <= 100.0 * a * a * a + 1e-12);
        }
    }

    #[test]
    fn hydrostatic_pressure_has_zero_mean(lo in 0.5f64..3.0, jump in -1.0f64..1.0) {
        let p = DensityProfile::affine(lo, lo + jump.max(-0.4), 1.0, 201).unwrap();
        let eq = hydrostatic_pressure(&p, 9.8).unwrap();
        let dy = p.dy();
        let n = eq.pressure.len();
        let mean: f64 = eq.pressure.iter().enumerate().map(|(i, v)| {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            w * v * dy
        }).sum();
        prop_assert!(mean.abs() < 1e-4);
    }
}
