//! Subcommand drivers. Each reads a validated configuration, runs the core
//! operations and writes its outputs plus a manifest into the output
//! directory.

use std::path::{Path, PathBuf};

use hsbmo_core::approx::{
    lattice_ray, mollifier_convergence, translation_test, vmo_approximation_run, DecaySettings, DecayTable, Mollifier,
};
use hsbmo_core::extension::{bloch_constant, extend, nontangential_trace, ExtensionRequest, LevelEnergy};
use hsbmo_core::grid::{BoundaryGrid, CubeLattice, DyadicCubeFamily, SampledField};
use hsbmo_core::kernels::{
    build_propagator, decay_constant_fit, homogeneity_error, kernel_field, kernel_integral, semigroup_error, Channel,
    EllipticSystem, PoissonPropagator,
};
use hsbmo_core::linalg::CMat;
use hsbmo_core::seminorms::{
    bmo_norm, carleson_norm, holder_seminorms, morrey_campanato, osc_curve, vanishing_carleson_test, PairPolicy,
    Thresholds,
};
use hsbmo_core::squarefun::molecule_check;
use serde::Serialize;
use serde_json::json;

use crate::calibration::{key, Calibration};
use crate::config::{Command, Operation, RunConfig};
use crate::error::{CliError, CliResult};
use crate::format;
use crate::report::{num, OutputSet, Table};
use crate::tolerances as tol;
use crate::verify::{self, Suite, VerifyReport};

/// Default calibration file, relative to the working directory.
pub const DEFAULT_CALIBRATION: &str = "calibration/calibration.json";

/// Flags shared by every subcommand.
#[derive(Clone, Debug, Default)]
pub struct Options {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub filter: Option<String>,
    pub calibrate: bool,
}

/// Loads the configuration (or the d=1 desk default) and applies flags.
pub fn resolve(opts: &Options) -> CliResult<RunConfig> {
    let mut cfg = match &opts.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::desk(1),
    };
    if let Some(seed) = opts.seed {
        cfg.seed = Some(seed);
    }
    if let Some(out) = &opts.out {
        cfg.output = Some(out.clone());
    }
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> PathBuf {
    cfg.output.clone().unwrap_or_else(|| PathBuf::from("hsbmo-out"))
}

fn describe_run(out: &mut OutputSet, cfg: &RunConfig, grid: &BoundaryGrid, system: &EllipticSystem) -> CliResult<()> {
    out.describe("system", system.name());
    out.describe("components", system.components());
    out.describe("grid", json!({"dim": grid.dim(), "n": grid.n(), "h": grid.h()}));
    out.describe("levels", cfg.ladder()?.levels());
    out.describe("aperture", cfg.aperture);
    Ok(())
}

/// Builds the propagator, or restores it from the configured cache.
fn propagator(cfg: &RunConfig, out: &mut OutputSet) -> CliResult<PoissonPropagator> {
    let grid = cfg.grid()?;
    let system = cfg.system()?;
    let prop = match &cfg.propagator_cache {
        Some(path) if path.exists() => {
            out.input("propagator_cache", path)?;
            format::load_propagator_cache(path, &system)?
        }
        cache => {
            let prop = build_propagator(&system, &grid, &[])?;
            if let Some(path) = cache {
                format::save(path, |w| format::write_propagator_cache(w, &prop))?;
            }
            prop
        }
    };
    if prop.max_residual() > tol::SOLVENT_RESIDUAL {
        return Err(CliError::Numerical(format!(
            "solvent residual {:e} exceeds {:e}",
            prop.max_residual(),
            tol::SOLVENT_RESIDUAL
        )));
    }
    Ok(prop)
}

fn load_datum(cfg: &RunConfig, out: &mut OutputSet, m: usize, seed: u64) -> CliResult<SampledField> {
    if let Some(path) = cfg.datum.as_ref().and_then(|d| d.file.as_ref()) {
        out.input("datum", path)?;
    }
    let f = cfg.datum(m, seed)?;
    if f.components() != m {
        return Err(cfg.error_at(
            "datum",
            format!("datum has {} components, system needs {m}", f.components()),
        ));
    }
    Ok(f)
}

fn load_calibration(cfg: &RunConfig) -> CliResult<Option<Calibration>> {
    match &cfg.calibration {
        Some(p) => Ok(Some(Calibration::load(p)?)),
        None => Ok(None),
    }
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

pub fn cmd_kernel(cfg: &RunConfig) -> CliResult<PathBuf> {
    cfg.validate(Command::Kernel)?;
    let grid = cfg.grid()?;
    let mut out = OutputSet::new(&out_dir(cfg), "kernel")?;
    let prop = propagator(cfg, &mut out)?;
    describe_run(&mut out, cfg, &grid, prop.system())?;
    let s = grid.half_extent();
    let heights = match cfg.operation(Command::Kernel) {
        Operation::Kernel { heights: Some(h) } => h,
        _ => vec![s / 32.0, s / 16.0, s / 8.0],
    };
    let m = prop.components();
    let dilated = BoundaryGrid::new(grid.dim(), grid.n(), 2.0 * grid.h())?;
    let big = build_propagator(prop.system(), &dilated, &[])?;
    let mut table = Table::new(&["t", "normalization_error", "decay_constant", "semigroup_error", "homogeneity_error"]);
    let mut rows = Vec::new();
    for (i, &t) in heights.iter().enumerate() {
        let k = kernel_field(&prop, t).map_err(|e| cfg.error_at("heights", e))?;
        let name = format!("kernel_{i}.bin");
        format::save(&out.path(&name), |w| format::write_field(w, &k))?;
        out.register(&name)?;
        let norm_err = kernel_integral(&k, m).sub(&CMat::identity(m)).max_abs();
        let decay = decay_constant_fit(&k, t);
        let semigroup = semigroup_error(&prop, t, t);
        let homogeneity = homogeneity_error(&prop, &big, t)?;
        table.push_numbers(&[t, norm_err, decay, semigroup, homogeneity]);
        rows.push(json!({
            "t": t, "file": name, "normalization_error": norm_err, "decay_constant": decay,
            "semigroup_error": semigroup, "homogeneity_error": homogeneity,
        }));
    }
    let t_mol = s / if grid.dim() == 1 { 64.0 } else { 32.0 };
    let mol = molecule_check(&prop, t_mol)?;
    out.write_table("kernel_properties.csv", &table)?;
    let mut annuli = Table::new(&["k", "annulus_norm"]);
    for (k, v) in mol.annulus_norms.iter().enumerate() {
        annuli.push(vec![(k + 1).to_string(), num(*v)]);
    }
    out.write_table("molecule_annuli.csv", &annuli)?;
    let report = json!({
        "config_hash": cfg.hash(),
        "system": prop.system().name(),
        "solvent_residual": prop.max_residual(),
        "decay_constant": prop.decay_constant(),
        "kernels": rows,
        "molecule": {
            "t": mol.t, "slope": mol.slope, "slope_all": mol.slope_all,
            "expected_slope": mol.expected_slope, "fitted_constant": mol.fitted_constant,
            "mean_defect": mol.mean_defect, "ball_norm": mol.ball_norm,
        },
    });
    out.write_json("kernel_report.json", &report)?;
    out.finish(cfg, None)
}

pub fn cmd_extend(cfg: &RunConfig) -> CliResult<PathBuf> {
    cfg.validate(Command::Extend)?;
    let seed = cfg.seed_for(Command::Extend)?;
    let grid = cfg.grid()?;
    let mut out = OutputSet::new(&out_dir(cfg), "extend")?;
    let prop = propagator(cfg, &mut out)?;
    describe_run(&mut out, cfg, &grid, prop.system())?;
    let f = load_datum(cfg, &mut out, prop.components(), seed)?;
    let (gradient, trace) = match cfg.operation(Command::Extend) {
        Operation::Extend { gradient, trace } => (gradient, trace),
        _ => (true, false),
    };
    let levels = cfg.ladder()?.levels();
    let req = ExtensionRequest::new(&f, &prop, levels.clone(), gradient || trace)?.with_aperture(cfg.aperture)?;
    let u = extend(&req)?;
    format::save(&out.path("half_space.bin"), |w| format::write_half_space(w, &u))?;
    out.register("half_space.bin")?;
    let mut summary = json!({
        "config_hash": cfg.hash(),
        "levels": levels.len(),
        "t_min": levels[0],
        "t_max": levels[levels.len() - 1],
        "datum_sup": f.sup_norm(),
    });
    if u.has_gradient() {
        let e = LevelEnergy::from_field(&u)?;
        let family = DyadicCubeFamily::new(grid, CubeLattice::Sliding);
        summary["carleson_norm"] = json!(carleson_norm(&e, &family)?);
        summary["bloch_constant"] = json!(bloch_constant(&e));
    }
    if trace {
        let rep = nontangential_trace(&u, cfg.aperture)?;
        format::save(&out.path("trace.bin"), |w| format::write_field(w, &rep.trace))?;
        out.register("trace.bin")?;
        let err = rep.trace.sub(&f)?.sup_norm();
        summary["trace_sup_residual"] = json!(rep.sup_residual());
        summary["trace_error"] = json!(err);
    }
    out.write_json("extend_summary.json", &summary)?;
    out.finish(cfg, None)
}

#[derive(Serialize)]
struct NormsReport {
    config_hash: String,
    calibration_hash: Option<String>,
    bmo: Vec<(f64, f64)>,
    morrey_campanato: Vec<(f64, f64)>,
    holder: Vec<(f64, Option<f64>)>,
    carleson_norm: f64,
    bloch_constant: f64,
    vanishing_verdict: &'static str,
    carleson_over_bmo: Option<f64>,
    band: Option<[f64; 2]>,
    in_band: Option<bool>,
}

pub fn cmd_norms(cfg: &RunConfig) -> CliResult<PathBuf> {
    cfg.validate(Command::Norms)?;
    let seed = cfg.seed_for(Command::Norms)?;
    let cal = load_calibration(cfg)?;
    let grid = cfg.grid()?;
    let mut out = OutputSet::new(&out_dir(cfg), "norms")?;
    if let Some(p) = &cfg.calibration {
        out.input("calibration", p)?;
    }
    let prop = propagator(cfg, &mut out)?;
    describe_run(&mut out, cfg, &grid, prop.system())?;
    let f = load_datum(cfg, &mut out, prop.components(), seed)?;
    let (ps, etas) = match cfg.operation(Command::Norms) {
        Operation::Norms { p, etas } => (p, etas),
        _ => unreachable!("norms operation"),
    };
    let family = DyadicCubeFamily::new(grid, CubeLattice::Sliding);
    let mut bmo = Vec::new();
    for &p in &ps {
        let curve = osc_curve(&f, &family, p)?;
        let mut t = Table::new(&["radius", "oscillation"]);
        for (r, v) in curve.radii.iter().zip(&curve.values) {
            t.push_numbers(&[*r, *v]);
        }
        out.write_table(&format!("osc_curve_p{p}.csv"), &t)?;
        bmo.push((p, bmo_norm(&f, &family, p)?));
    }
    let mc = etas
        .iter()
        .map(|&eta| Ok((eta, morrey_campanato(&f, &family, eta, 1.0)?)))
        .collect::<CliResult<Vec<_>>>()?;
    let policy = PairPolicy {
        seed,
        ..PairPolicy::default()
    };
    let holder: Vec<(f64, Option<f64>)> = etas
        .iter()
        .copied()
        .zip(holder_seminorms(&f, &etas, &policy)?.into_iter().map(finite))
        .collect();
    let levels = cfg.ladder()?.levels();
    let e = LevelEnergy::from_datum(&f, &prop, &levels, 0.0, &Channel::gradient(grid.dim()))?;
    let (verdict, profile) = vanishing_carleson_test(&e, &family, &Thresholds::default(), 4.0 * grid.h())?;
    let mut t = Table::new(&["radius", "carleson_profile"]);
    for (r, v) in profile.radii.iter().zip(&profile.values) {
        t.push_numbers(&[*r, *v]);
    }
    out.write_table("carleson_profile.csv", &t)?;
    let carleson = profile.top();
    let bmo1 = bmo_norm(&f, &family, 1.0)?;
    let ratio = (bmo1 > 0.0).then(|| carleson / bmo1);
    let band = match &cal {
        Some(c) => c
            .entries
            .get(&key(grid.dim(), prop.system().name(), "carleson_over_bmo"))
            .copied(),
        None => None,
    };
    let in_band = match (ratio, band) {
        (Some(r), Some(b)) => Some(r >= b[0] && r <= b[1]),
        _ => None,
    };
    let report = NormsReport {
        config_hash: cfg.hash(),
        calibration_hash: cal.as_ref().map(|c| c.hash()),
        bmo,
        morrey_campanato: mc,
        holder,
        carleson_norm: carleson,
        bloch_constant: bloch_constant(&e),
        vanishing_verdict: verdict.as_str(),
        carleson_over_bmo: ratio,
        band,
        in_band,
    };
    out.write_json("norms_report.json", &report)?;
    out.finish(cfg, cal.as_ref().map(|c| c.hash()).as_deref())
}

fn decay_csv(table: &DecayTable) -> Table {
    let mut t = Table::new(&[table.parameter, "bmo_distance"]);
    for (s, v) in table.scales.iter().zip(&table.values) {
        t.push_numbers(&[*s, *v]);
    }
    t
}

fn dyadic_ladder(top: f64, bottom: f64) -> Vec<f64> {
    let mut out = vec![top];
    while out.last().expect("nonempty") / 2.0 >= bottom * (1.0 - 1e-12) {
        out.push(out.last().expect("nonempty") / 2.0);
    }
    out
}

pub fn cmd_approx(cfg: &RunConfig) -> CliResult<PathBuf> {
    cfg.validate(Command::Approx)?;
    let seed = cfg.seed_for(Command::Approx)?;
    let grid = cfg.grid()?;
    let mut out = OutputSet::new(&out_dir(cfg), "approx")?;
    let prop = propagator(cfg, &mut out)?;
    describe_run(&mut out, cfg, &grid, prop.system())?;
    let f = load_datum(cfg, &mut out, prop.components(), seed)?;
    let (eps, etas, mollifiers) = match cfg.operation(Command::Approx) {
        Operation::Approx { eps, etas, mollifiers } => (eps, etas, mollifiers),
        _ => unreachable!("approx operation"),
    };
    let (h, s) = (grid.h(), grid.half_extent());
    let eps = eps.unwrap_or_else(|| dyadic_ladder(s / 4.0, 4.0 * h));
    let family = DyadicCubeFamily::new(grid, CubeLattice::Sliding);
    let settings = DecaySettings { family: &family, p: 2.0 };
    let th = Thresholds::default();
    let policy = PairPolicy {
        seed,
        ..PairPolicy::default()
    };
    let run = vmo_approximation_run(&f, &prop, &eps, &etas, &settings, &policy).map_err(|e| cfg.error_at("eps", e))?;
    let mut header = vec!["eps".to_string(), "bmo_error".into(), "gradient_sup".into()];
    header.extend(etas.iter().map(|e| format!("holder_{e}")));
    let mut t = Table {
        header,
        rows: Vec::new(),
    };
    for r in &run.rows {
        let mut row = vec![r.eps, r.bmo_error, r.gradient_sup];
        row.extend(&r.holder);
        t.push_numbers(&row);
    }
    out.write_table("approx_table.csv", &t)?;
    let mut moll = Vec::new();
    let ts = dyadic_ladder(s / 8.0, 4.0 * h);
    for name in &mollifiers {
        let m = Mollifier::by_name(name).map_err(|e| cfg.error_at("mollifiers", e))?;
        let rep = mollifier_convergence(&f, m, &ts, &settings, &th)?;
        out.write_table(&format!("mollifier_{name}.csv"), &decay_csv(&rep.table))?;
        moll.push(json!({"mollifier": name, "verdict": rep.verdict.as_str(), "ratio": rep.table.ratio()}));
    }
    let ray: Vec<[i64; 2]> = lattice_ray([1, 0], grid.n() as i64 / 4)?
        .into_iter()
        .filter(|z| z[0] >= 4)
        .collect();
    let shift = translation_test(&f, &ray, &settings)?;
    out.write_table("translation.csv", &decay_csv(&shift))?;
    let summary = json!({
        "config_hash": cfg.hash(),
        "approximation": {
            "monotone": run.table.is_monotone(),
            "slope": finite(run.table.slope()),
            "ratio": run.table.ratio(),
            "verdict": run.table.verdict(&th).as_str(),
        },
        "mollifiers": moll,
        "translation": {"verdict": shift.verdict(&th).as_str(), "ratio": shift.ratio()},
    });
    out.write_json("approx_summary.json", &summary)?;
    out.finish(cfg, None)
}

fn calibration_path(cfg: &RunConfig) -> PathBuf {
    cfg.calibration.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_CALIBRATION))
}

/// Loads the calibration, or regenerates this dimension's entries.
pub fn prepare_suite(cfg: &RunConfig, calibrate: bool, path: &Path) -> CliResult<Suite> {
    let grid = cfg.grid()?;
    let seed = cfg.seed_for(Command::Verify)?;
    if !calibrate {
        if !path.exists() {
            return Err(CliError::Config(format!(
                "calibration file {} is missing; rerun with --calibrate",
                path.display()
            )));
        }
        return Suite::new(grid, seed, cfg.aperture, Some(Calibration::load(path)?));
    }
    let mut cal = if path.exists() {
        Calibration::load(path)?
    } else {
        Calibration::new(tol::CALIBRATION_MARGIN)
    };
    let mut suite = Suite::new(grid, seed, cfg.aperture, None)?;
    let fresh = suite.calibrate(cal.margin)?;
    cal.merge_dimension(grid.dim(), fresh);
    cal.save(path)?;
    suite.set_calibration(cal);
    Ok(suite)
}

fn verify_table(report: &VerifyReport) -> Table {
    let mut t = Table::new(&["id", "criterion", "passed", "metric", "value"]);
    for c in &report.criteria {
        for (k, v) in &c.metrics {
            t.push(vec![c.id.to_string(), c.name.into(), c.passed.to_string(), k.clone(), num(*v)]);
        }
    }
    t
}

pub fn cmd_verify(cfg: &RunConfig, filter: Option<&str>, calibrate: bool) -> CliResult<(PathBuf, VerifyReport)> {
    cfg.validate(Command::Verify)?;
    let filter = filter.map(str::to_string).or(match cfg.operation(Command::Verify) {
        Operation::Verify { filter } => filter,
        _ => None,
    });
    verify::select(filter.as_deref())?;
    let path = calibration_path(cfg);
    let suite = prepare_suite(cfg, calibrate, &path)?;
    let report = verify::verify(&suite, filter.as_deref(), &cfg.hash(), true)?;
    let mut out = OutputSet::new(&out_dir(cfg), "verify")?;
    out.input("calibration", &path)?;
    out.describe("grid", json!({"dim": suite.grid.dim(), "n": suite.grid.n(), "h": suite.grid.h()}));
    out.describe("aperture", suite.aperture);
    out.describe("seed", suite.seed);
    out.write_json("verify_report.json", &report)?;
    out.write_table("verify_report.csv", &verify_table(&report))?;
    let manifest = out.finish(cfg, report.calibration_hash.as_deref())?;
    Ok((manifest, report))
}
