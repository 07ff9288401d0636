use hsbmo_core::approx::upsilon_sharp;
use hsbmo_core::extension::*;
use hsbmo_core::grid::*;
use hsbmo_core::kernels::*;
use hsbmo_core::seminorms::carleson_norm;
use hsbmo_core::C64;

fn laplacian(g: &BoundaryGrid) -> PoissonPropagator {
    build_propagator(&named_system(&SystemSpec::Laplacian, g.ambient_dim()).unwrap(), g, &[]).unwrap()
}

#[test]
fn constants_are_reproduced() {
    let g = BoundaryGrid::new(2, 32, 0.25).unwrap();
    let lame = named_system(&SystemSpec::Lame { mu: 1.0, lambda: 1.0 }, 3).unwrap();
    let prop = build_propagator(&lame, &g, &[]).unwrap();
    let f = generate(&Generator::Constant { value: C64::new(2.0, -1.0) }, &g, 3, 0).unwrap();
    let levels = TLadder::new(0.1, 1.5, 6).unwrap().levels();
    let u = extend(&ExtensionRequest::new(&f, &prop, levels.clone(), true).unwrap()).unwrap();
    for l in 0..levels.len() {
        assert!(u.level_field(l).sub(&f).unwrap().sup_norm() < 1e-12);
        for ch in 0..3 {
            assert!(u.gradient_channel(l, ch).unwrap().iter().all(|z| z.norm() < 1e-12));
        }
    }
    let shifted = vertical_shift(&ExtensionRequest::new(&f, &prop, levels, false).unwrap(), 0.3).unwrap();
    assert!(shifted.level_field(2).sub(&f).unwrap().sup_norm() < 1e-12);
}

#[test]
fn single_cosine_decays_exponentially() {
    let g = BoundaryGrid::new(1, 128, 1.0 / 8.0).unwrap();
    let omega = 3.0 * std::f64::consts::PI / g.half_extent();
    let f = SampledField::from_fn(g, |x| C64::new((omega * x[0]).cos(), 0.0));
    let prop = laplacian(&g);
    let levels = vec![0.25, 0.5, 1.0];
    let u = extend(&ExtensionRequest::new(&f, &prop, levels.clone(), true).unwrap()).unwrap();
    for (l, &t) in levels.iter().enumerate() {
        let damp = (-omega * t).exp();
        for node in 0..g.node_count() {
            let x = g.coords(node)[0];
            assert!((u.value(node, l, 0).re - damp * (omega * x).cos()).abs() < 1e-10);
            let dx = u.gradient_channel(l, 0).unwrap()[node].re;
            let dt = u.gradient_channel(l, 1).unwrap()[node].re;
            assert!((dx + omega * damp * (omega * x).sin()).abs() < 1e-10);
            assert!((dt + omega * damp * (omega * x).cos()).abs() < 1e-10);
        }
    }
}

#[test]
fn normal_derivative_matches_centered_difference() {
    let g = BoundaryGrid::new(1, 256, 1.0 / 16.0).unwrap();
    let lame = named_system(&SystemSpec::Lame { mu: 1.0, lambda: 1.0 }, 2).unwrap();
    let prop = build_propagator(&lame, &g, &[]).unwrap();
    let f = generate(&Generator::Bump { radius: Some(2.0) }, &g, 2, 0).unwrap();
    let t = 0.5;
    let ext = Extender::new(&f, &prop).unwrap();
    let exact = &ext.channels(t, &[Channel::Normal])[0];
    let err = |delta: f64| {
        let up = &ext.channels(t + delta, &[Channel::Value])[0];
        let down = &ext.channels(t - delta, &[Channel::Value])[0];
        exact
            .iter()
            .zip(up.iter().zip(down))
            .map(|(e, (a, b))| (*e - (*a - *b) / (2.0 * delta)).norm())
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(0.02), err(0.01));
    assert!((e1 / e2).log2() > 1.8, "{e1} {e2}");
}

#[test]
fn extension_preserves_means_and_commutes_with_translation() {
    let g = BoundaryGrid::new(2, 32, 0.25).unwrap();
    let prop = build_propagator(&named_system(&SystemSpec::ScalarDivA { matrix: None }, 3).unwrap(), &g, &[]).unwrap();
    let f = generate(&Generator::LacunaryBmo { terms: 3 }, &g, 1, 5).unwrap();
    let levels = TLadder::new(0.125, 2.0, 4).unwrap().levels();
    let u = extend(&ExtensionRequest::new(&f, &prop, levels.clone(), false).unwrap()).unwrap();
    let moved = extend(&ExtensionRequest::new(&f.translate([3, -2]), &prop, levels.clone(), false).unwrap()).unwrap();
    for l in 0..levels.len() {
        assert!((u.level_field(l).mean()[0] - f.mean()[0]).norm() < 1e-13);
        let diff = moved.level_field(l).sub(&u.level_field(l).translate([3, -2])).unwrap();
        assert!(diff.sup_norm() < 1e-12);
    }
}

#[test]
fn zero_shift_is_identity() {
    let g = BoundaryGrid::new(1, 64, 0.125).unwrap();
    let prop = laplacian(&g);
    let f = generate(&Generator::LogAbs, &g, 1, 0).unwrap();
    let req = ExtensionRequest::new(&f, &prop, vec![0.25, 0.5], true).unwrap();
    assert_eq!(vertical_shift(&req, 0.0).unwrap(), extend(&req).unwrap());
}

#[test]
fn shifted_carleson_norm_stays_comparable() {
    let g = BoundaryGrid::new(1, 1024, 1.0 / 64.0).unwrap();
    let prop = laplacian(&g);
    let f = generate(&Generator::LogAbs, &g, 1, 0).unwrap();
    let levels = TLadder::covering(g.h() / 4.0, 1.2, g.half_extent()).unwrap().levels();
    let fam = DyadicCubeFamily::new(g, CubeLattice::Sliding);
    let base = carleson_norm(&LevelEnergy::from_datum(&f, &prop, &levels, 0.0, &Channel::gradient(1)).unwrap(), &fam).unwrap();
    let shifted =
        carleson_norm(&LevelEnergy::from_datum(&f, &prop, &levels, levels[0], &Channel::gradient(1)).unwrap(), &fam).unwrap();
    assert!(shifted <= 2.0 * base && shifted > 0.0, "{base} {shifted}");
}

fn trace_residual(gen: &Generator, t_min_nodes: f64) -> f64 {
    let g = BoundaryGrid::new(1, 4096, 1.0 / 256.0).unwrap();
    let t_min = t_min_nodes * g.h();
    let prop = laplacian(&g);
    let f = generate(gen, &g, 1, 0).unwrap();
    let levels = TLadder::new(t_min, 1.25, 12).unwrap().levels();
    let u = extend(&ExtensionRequest::new(&f, &prop, levels, false).unwrap()).unwrap();
    nontangential_trace(&u, 1.0).unwrap().sup_residual()
}

#[test]
fn trace_diagnostics_shrink_with_the_ladder() {
    let bump = Generator::Bump { radius: None };
    let (a, b) = (trace_residual(&bump, 2.0), trace_residual(&bump, 1.0));
    assert!((a / b).log2() > 0.85, "{a} {b}");
    let power = Generator::PowerEta { eta: 0.5 };
    let (a, b) = (trace_residual(&power, 2.0), trace_residual(&power, 1.0));
    assert!((a / b).log2() > 0.35, "{a} {b}");
    assert_eq!(trace_residual(&Generator::Constant { value: C64::new(1.0, 0.0) }, 2.0), 0.0);
}

#[test]
fn coarse_ladder_is_rejected() {
    let g = BoundaryGrid::new(1, 64, 0.125).unwrap();
    let prop = laplacian(&g);
    let f = generate(&Generator::Bump { radius: None }, &g, 1, 0).unwrap();
    let u = extend(&ExtensionRequest::new(&f, &prop, vec![1.0, 2.0], false).unwrap()).unwrap();
    assert!(matches!(nontangential_trace(&u, 1.0), Err(hsbmo_core::Error::LadderTooCoarse { .. })));
}

#[test]
fn horizontal_oscillation_is_controlled_by_the_sharp_modulus() {
    let g = BoundaryGrid::new(1, 512, 1.0 / 32.0).unwrap();
    let prop = laplacian(&g);
    let f = generate(&Generator::LogAbs, &g, 1, 0).unwrap();
    let levels = TLadder::new(g.h(), 1.5, 10).unwrap().levels();
    let u = extend(&ExtensionRequest::new(&f, &prop, levels.clone(), true).unwrap()).unwrap();
    let mut c_u = 0.0f64;
    for (l, &t) in levels.iter().enumerate() {
        for node in 0..g.node_count() {
            c_u = c_u.max(t * u.gradient_norm_sqr(node, l).unwrap().sqrt());
        }
    }
    for (l, &t) in levels.iter().enumerate() {
        for a in (0..g.node_count()).step_by(7) {
            for b in (0..g.node_count()).step_by(13) {
                let lhs = (u.value(a, l, 0) - u.value(b, l, 0)).norm();
                let rhs = 2.0 * c_u * upsilon_sharp(g.torus_distance(a, b) / t);
                assert!(lhs <= rhs * (1.0 + 1e-6), "level {l}: {lhs} > {rhs}");
            }
        }
    }
}

#[test]
fn bloch_constant_is_bounded_by_the_carleson_norm() {
    let g = BoundaryGrid::new(1, 1024, 1.0 / 64.0).unwrap();
    let prop = laplacian(&g);
    let fam = DyadicCubeFamily::new(g, CubeLattice::Sliding);
    let levels = TLadder::covering(g.h() / 4.0, 1.2, g.half_extent()).unwrap().levels();
    for name in ["log_abs", "bump", "indicator"] {
        let f = generate(&Generator::by_name(name).unwrap(), &g, 1, 0).unwrap();
        let e = LevelEnergy::from_datum(&f, &prop, &levels, 0.0, &Channel::gradient(1)).unwrap();
        let ratio = bloch_constant(&e) / carleson_norm(&e, &fam).unwrap();
        assert!(ratio > 0.1 && ratio < 10.0, "{name}: {ratio}");
    }
}
