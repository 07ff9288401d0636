use hsbmo_core::approx::*;
use hsbmo_core::grid::*;
use hsbmo_core::kernels::*;
use hsbmo_core::seminorms::{bmo_norm, PairPolicy, Thresholds, Verdict};
use hsbmo_core::C64;

fn psi_closed_form(a: f64, n: usize) -> f64 {
    let l = (1.0 + a).ln();
    match n {
        2 => ((a + 1.0) / a).ln() + l / a,
        3 => {
            let inner = ((a + 1.0) / a).ln() + 2.0 * a / (a + 1.0) - 1.5 - a * a / (2.0 * (a + 1.0).powi(2));
            let outer = 1.0 / (1.0 + a) - a / (2.0 * (1.0 + a).powi(2));
            let log_part = l / (2.0 * a) + 1.0 / (2.0 * (1.0 + a));
            inner + outer + log_part
        }
        _ => unreachable!(),
    }
}

#[test]
fn psi_matches_closed_forms_and_bounds() {
    for n in [2, 3] {
        for i in 0..25 {
            let a = 10f64.powf(-3.0 + 6.0 * i as f64 / 24.0);
            let c = psi_bound_check(a, n).unwrap();
            let exact = psi_closed_form(a, n);
            assert!((c.value - exact).abs() <= 1e-9 * exact, "n={n} a={a}: {} vs {exact}", c.value);
            assert!(c.ok && c.value <= c.sharp_bound, "n={n} a={a}");
        }
    }
    assert!((psi_bound_check(1.0, 3).unwrap().value - 1.5 * 2f64.ln()).abs() < 1e-10);
    assert!(psi_bound_check(0.0, 2).is_err());
}

#[test]
fn moduli_of_continuity() {
    assert!((upsilon_sharp(std::f64::consts::E.powi(2)) - 3.0).abs() < 1e-14);
    assert!(ModulusOfContinuity::Power { eta: 1.5 }.validate().is_err());
    let wiggle = ModulusOfContinuity::Custom {
        name: "wiggle",
        eval: |s| s.sin().abs(),
    };
    assert!(wiggle.validate().is_err());
    let offset = ModulusOfContinuity::Custom {
        name: "offset",
        eval: |s| 1.0 + s,
    };
    assert!(offset.validate().is_err());
    assert_eq!(ModulusOfContinuity::Sharp.name(), "sharp");
}

#[test]
fn upsilon_seminorm_examples() {
    let g = BoundaryGrid::new(1, 1024, 1.0 / 64.0).unwrap();
    let policy = PairPolicy::default();
    let c = generate(&Generator::Constant { value: C64::new(1.0, 0.0) }, &g, 1, 0).unwrap();
    assert_eq!(upsilon_seminorm(&c, &ModulusOfContinuity::Sharp, &policy).unwrap(), 0.0);
    let f = generate(&Generator::PowerEta { eta: 0.5 }, &g, 1, 0).unwrap();
    let v = upsilon_seminorm(&f, &ModulusOfContinuity::Power { eta: 0.5 }, &policy).unwrap();
    assert!(v <= 1.0 + 1e-9 && v > 0.9, "{v}");
    let log = generate(&Generator::LogAbs, &g, 1, 0).unwrap();
    let s = upsilon_seminorm(&log, &ModulusOfContinuity::Sharp, &policy).unwrap();
    assert!(s.is_finite() && s > 0.0);
}

fn desk() -> (BoundaryGrid, PoissonPropagator, DyadicCubeFamily) {
    let g = BoundaryGrid::new(1, 2048, 1.0 / 128.0).unwrap();
    let prop = build_propagator(&named_system(&SystemSpec::Laplacian, 2).unwrap(), &g, &[]).unwrap();
    (g, prop, DyadicCubeFamily::new(g, CubeLattice::Sliding))
}

fn dyadic_ladder(top: f64, bottom: f64) -> Vec<f64> {
    let mut out = vec![top];
    while out.last().unwrap() / 2.0 >= bottom * (1.0 - 1e-12) {
        out.push(out.last().unwrap() / 2.0);
    }
    out
}

#[test]
fn approximation_of_a_smooth_datum() {
    let (g, prop, fam) = desk();
    let f = generate(&Generator::Bump { radius: None }, &g, 1, 0).unwrap();
    let settings = DecaySettings { family: &fam, p: 2.0 };
    let eps = dyadic_ladder(g.half_extent() / 4.0, 4.0 * g.h());
    let rep = vmo_approximation_run(&f, &prop, &eps, &[0.25, 0.5], &settings, &PairPolicy::default()).unwrap();
    assert!(rep.table.is_monotone());
    assert_eq!(rep.table.verdict(&Thresholds::default()), Verdict::Vanishing);
    for row in &rep.rows {
        assert!(row.holder.iter().all(|c| c.is_finite()));
        assert!(row.gradient_sup * row.eps <= f.sup_norm());
    }
    let norm = bmo_norm(&f, &fam, 2.0).unwrap();
    assert!(rep.table.last() < 0.05 * norm, "{} {norm}", rep.table.last());
}

#[test]
fn holder_constants_of_approximants_stay_bounded() {
    let (g, prop, fam) = desk();
    let f = generate(&Generator::PowerEta { eta: 0.5 }, &g, 1, 0).unwrap();
    let settings = DecaySettings { family: &fam, p: 2.0 };
    let eps = dyadic_ladder(g.half_extent() / 4.0, 4.0 * g.h());
    let rep = vmo_approximation_run(&f, &prop, &eps, &[0.5], &settings, &PairPolicy::default()).unwrap();
    for row in &rep.rows {
        assert!(row.holder[0] <= 2.0, "ε = {}: {}", row.eps, row.holder[0]);
    }
}

#[test]
fn mollifiers_on_smooth_and_rough_data() {
    let (g, _, fam) = desk();
    let settings = DecaySettings { family: &fam, p: 2.0 };
    let th = Thresholds::default();
    // The Poisson profile carries a quarter of its mass beyond S/2 at t = S/2.
    let ts = dyadic_ladder(g.half_extent() / 8.0, 4.0 * g.h());
    let bump = generate(&Generator::Bump { radius: None }, &g, 1, 0).unwrap();
    let norm = bmo_norm(&bump, &fam, 2.0).unwrap();
    let log = generate(&Generator::LogAbs, &g, 1, 0).unwrap();
    for name in Mollifier::NAMES {
        let m = Mollifier::by_name(name).unwrap();
        let smooth = mollifier_convergence(&bump, m, &ts, &settings, &th).unwrap();
        assert_eq!(smooth.verdict, Verdict::Vanishing, "{name}");
        if m == Mollifier::Gaussian || m == Mollifier::Bump {
            assert!(smooth.table.last() < 1e-2 * norm, "{name}: {}", smooth.table.last());
        }
        // The bump profile's effective width is about t/3, so its ladder
        // stops one step earlier on rough data.
        let floor = if m == Mollifier::Bump { 8.0 } else { 4.0 } * g.h();
        let rough_ts: Vec<f64> = ts.iter().copied().filter(|t| *t >= floor).collect();
        let rough = mollifier_convergence(&log, m, &rough_ts, &settings, &th).unwrap();
        assert_eq!(rough.verdict, Verdict::NotVanishing, "{name}: {}", rough.table.ratio());
    }
    assert!(Mollifier::by_name("boxcar").is_err());
    assert!(mollifier_convergence(&bump, Mollifier::Gaussian, &[g.half_extent()], &settings, &th).is_err());
}

#[test]
fn translations_by_regularity() {
    let (g, _, fam) = desk();
    let settings = DecaySettings { family: &fam, p: 2.0 };
    let th = Thresholds::default();
    let ray: Vec<[i64; 2]> = lattice_ray([1, 0], g.n() as i64 / 4)
        .unwrap()
        .into_iter()
        .filter(|z| z[0] >= 4)
        .collect();
    let bump = generate(&Generator::Bump { radius: None }, &g, 1, 0).unwrap();
    let table = translation_test(&bump, &ray, &settings).unwrap();
    assert_eq!(table.verdict(&th), Verdict::Vanishing);
    let log = generate(&Generator::LogAbs, &g, 1, 0).unwrap();
    assert_eq!(translation_test(&log, &ray, &settings).unwrap().verdict(&th), Verdict::NotVanishing);
    let c = generate(&Generator::Constant { value: C64::new(1.0, 0.0) }, &g, 1, 0).unwrap();
    assert_eq!(translation_test(&c, &ray, &settings).unwrap().ratio(), 0.0);
    assert!(translation_test(&c, &[[0, 0]], &settings).is_err());
    assert!(lattice_ray([0, 0], 8).is_err());
}
