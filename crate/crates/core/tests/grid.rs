use hsbmo_core::grid::*;
use hsbmo_core::seminorms::{bmo_norm, bmo_norm_default, holder_seminorm, PairPolicy};
use hsbmo_core::{Error, C64};

#[test]
fn grid_extents() {
    assert_eq!(BoundaryGrid::new(1, 1024, 1.0 / 64.0).unwrap().half_extent(), 8.0);
    assert_eq!(BoundaryGrid::new(2, 256, 1.0 / 32.0).unwrap().half_extent(), 4.0);
    assert!(matches!(BoundaryGrid::new(1, 100, 0.1), Err(Error::NotPowerOfTwo(100))));
}

#[test]
fn constant_generator_is_constant() {
    let g = BoundaryGrid::new(2, 16, 0.25).unwrap();
    let f = generate(&Generator::Constant { value: C64::new(3.0, 0.0) }, &g, 1, 0).unwrap();
    assert!(f.values().iter().all(|z| *z == C64::new(3.0, 0.0)));
}

#[test]
fn power_eta_is_holder_with_unit_constant() {
    let g = BoundaryGrid::new(1, 1024, 1.0 / 64.0).unwrap();
    let f = generate(&Generator::PowerEta { eta: 0.5 }, &g, 1, 0).unwrap();
    let x = g.coords(g.node([g.n() / 2 + 16, 0]))[0];
    assert_eq!(f.value(g.node([g.n() / 2 + 16, 0]), 0).re, x.sqrt());
    let c = holder_seminorm(&f, 0.5, &PairPolicy::default()).unwrap();
    assert!(c <= 1.0 + 1e-9 && c > 0.9, "{c}");
}

#[test]
fn log_abs_bmo_is_positive_and_stable_under_refinement() {
    // Same physical box, twice the resolution.
    let coarse = BoundaryGrid::new(1, 2048, 1.0 / 128.0).unwrap();
    let fine = BoundaryGrid::new(1, 4096, 1.0 / 256.0).unwrap();
    let a = bmo_norm_default(&generate(&Generator::LogAbs, &coarse, 1, 0).unwrap(), 1.0).unwrap();
    let b = bmo_norm_default(&generate(&Generator::LogAbs, &fine, 1, 0).unwrap(), 1.0).unwrap();
    assert!(a > 0.0 && (a - b).abs() < 0.02 * b, "{a} {b}");
    let sweep = bmo_norm(
        &generate(&Generator::LogAbs, &coarse, 1, 0).unwrap(),
        &DyadicCubeFamily::new(coarse, CubeLattice::Dyadic),
        1.0,
    )
    .unwrap();
    assert!(sweep > 0.0 && sweep <= a);
}

#[test]
fn indicator_oscillation_on_a_straddling_cube() {
    let g = BoundaryGrid::new(1, 64, 1.0).unwrap();
    let f = generate(&Generator::Indicator, &g, 1, 0).unwrap();
    let cube = Cube {
        level: 3,
        corner: [g.n() / 2 - 4, 0],
    };
    let st = cube_statistics(&f, &cube, 1.0).unwrap();
    assert!((st.oscillation - 0.5).abs() < 1e-15);
    assert!((st.mean[0].re - 0.5).abs() < 1e-15);
}

#[test]
fn square_root_oscillation_matches_direct_sum() {
    let g = BoundaryGrid::new(1, 256, 1.0 / 32.0).unwrap();
    let f = generate(&Generator::PowerEta { eta: 0.5 }, &g, 1, 0).unwrap();
    // Q = [0, 1): 32 nodes starting at the origin.
    let cube = Cube {
        level: 5,
        corner: [g.n() / 2, 0],
    };
    let xs: Vec<f64> = (0..32).map(|k| (k as f64 / 32.0).sqrt()).collect();
    let mean = xs.iter().sum::<f64>() / 32.0;
    let osc = xs.iter().map(|x| (x - mean).abs()).sum::<f64>() / 32.0;
    let st = cube_statistics(&f, &cube, 1.0).unwrap();
    assert!((st.mean[0].re - mean).abs() < 1e-14);
    assert!((st.oscillation - osc).abs() < 1e-14);
}

#[test]
fn translation_preserves_bmo_exactly() {
    let g = BoundaryGrid::new(2, 32, 0.125).unwrap();
    let f = generate(&Generator::LacunaryBmo { terms: 3 }, &g, 1, 7).unwrap();
    let base = bmo_norm_default(&f, 2.0).unwrap();
    for z in [[1, 0], [3, -5], [16, 16]] {
        let moved = bmo_norm_default(&f.translate(z), 2.0).unwrap();
        assert!((moved - base).abs() <= 1e-12 * base);
    }
    let c = generate(&Generator::Constant { value: C64::new(2.0, 0.0) }, &g, 1, 0).unwrap();
    assert_eq!(c.translate([5, 3]), c);
}

#[test]
fn dilation_stays_in_a_band() {
    let g = BoundaryGrid::new(1, 1024, 1.0 / 32.0).unwrap();
    let f = generate(&Generator::LacunaryBmo { terms: 6 }, &g, 1, 1).unwrap();
    let a = bmo_norm_default(&f, 1.0).unwrap();
    let b = bmo_norm_default(&f.dilate(2).unwrap(), 1.0).unwrap();
    assert!(b / a > 0.5 && b / a < 2.0, "{a} {b}");
    assert!(f.dilate(256).is_err());
}

#[test]
fn generators_are_reproducible() {
    let g = BoundaryGrid::new(2, 64, 0.125).unwrap();
    for name in Generator::NAMES {
        let gen = Generator::by_name(name).unwrap();
        let gen = match gen {
            Generator::LacunaryBmo { .. } => Generator::LacunaryBmo { terms: 4 },
            other => other,
        };
        let a = generate(&gen, &g, 2, 11).unwrap();
        let b = generate(&gen, &g, 2, 11).unwrap();
        assert_eq!(a, b, "{name}");
    }
    let a = generate(&Generator::LacunaryBmo { terms: 4 }, &g, 1, 1).unwrap();
    let b = generate(&Generator::LacunaryBmo { terms: 4 }, &g, 1, 2).unwrap();
    assert_ne!(a, b);
}

#[test]
fn invalid_generator_parameters() {
    let g = BoundaryGrid::new(1, 64, 0.125).unwrap();
    assert!(generate(&Generator::PowerEta { eta: 1.0 }, &g, 1, 0).is_err());
    assert!(Generator::by_name("gauss").is_err());
}
