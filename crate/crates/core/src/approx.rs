//! Moduli of continuity, the `Ψ` integral, and three numerical VMO tests:
//! vertical approximation by the extension, mollification, and translation.
//!
//! Every test produces a [`DecayTable`]: a BMO distance recorded along a
//! ladder of scales, ordered from the largest scale down. Its verdict
//! compares the smallest-scale value with the largest value on the ladder.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

// Unused when std is linked: its inherent float methods take precedence.
#[allow(unused_imports)]
use num_traits::Float;

use crate::extension::Extender;
use crate::fft::FftNd;
use crate::grid::{DyadicCubeFamily, SampledField};
use crate::kernels::{Channel, PoissonPropagator};
use crate::quadrature::{adaptive_gauss, loglog_slope};
use crate::seminorms::{bmo_norm, holder_seminorm, pair_sweep, PairPolicy, Thresholds, Verdict};
use crate::{Error, Result, C64};

/// The sharp modulus `min{1, s} + max{0, ln s}`.
pub fn upsilon_sharp(s: f64) -> f64 {
    s.min(1.0) + s.ln().max(0.0)
}

/// A modulus of continuity `Υ`: nondecreasing with `Υ(0⁺) = 0`.
#[derive(Clone, Copy, Debug)]
pub enum ModulusOfContinuity {
    /// [`upsilon_sharp`].
    Sharp,
    /// `s^η`, `η ∈ (0, 1]`.
    Power { eta: f64 },
    /// A caller-supplied evaluator.
    Custom { name: &'static str, eval: fn(f64) -> f64 },
}

/// Sample radii used to check a modulus.
const MODULUS_SAMPLES: usize = 200;

impl ModulusOfContinuity {
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            ModulusOfContinuity::Sharp => upsilon_sharp(s),
            ModulusOfContinuity::Power { eta } => s.powf(eta),
            ModulusOfContinuity::Custom { eval, .. } => eval(s),
        }
    }

    pub fn name(&self) -> String {
        match *self {
            ModulusOfContinuity::Sharp => "sharp".into(),
            ModulusOfContinuity::Power { eta } => format!("power({eta})"),
            ModulusOfContinuity::Custom { name, .. } => name.into(),
        }
    }

    /// Checks `Υ(0) = 0` and monotonicity on a log grid of `[1e-8, 1e8]`.
    pub fn validate(&self) -> Result<()> {
        if let ModulusOfContinuity::Power { eta } = *self {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(Error::InvalidParameter(format!("modulus exponent {eta} must lie in (0,1]")));
            }
        }
        let bad = |why: &str| Err(Error::InvalidParameter(format!("modulus {}: {why}", self.name())));
        let at_zero = self.eval(0.0);
        if !(at_zero.abs() <= 1e-12) {
            return bad("does not vanish at 0");
        }
        let mut prev = at_zero;
        for i in 0..=MODULUS_SAMPLES {
            let s = 10f64.powf(-8.0 + 16.0 * i as f64 / MODULUS_SAMPLES as f64);
            let v = self.eval(s);
            if !v.is_finite() || v < prev {
                return bad("is not nondecreasing");
            }
            prev = v;
        }
        Ok(())
    }
}

/// `sup |f(a) - f(b)| / Υ(|a - b|)` on the pair policy.
pub fn upsilon_seminorm(f: &SampledField, modulus: &ModulusOfContinuity, policy: &PairPolicy) -> Result<f64> {
    modulus.validate()?;
    Ok(pair_sweep(f, policy, |r| modulus.eval(r)))
}

/// Outcome of [`psi_bound_check`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsiCheck {
    pub a: f64,
    pub value: f64,
    /// `3(1 + log⁺(1/a))`.
    pub bound: f64,
    /// `3(1 + ln a)/a` for `a > 1`, otherwise equal to `bound`.
    pub sharp_bound: f64,
    pub ok: bool,
}

/// Integrand cutoff relative to its peak.
const PSI_CUTOFF: f64 = 1e-14;

/// `Ψ(a) = ∫_0^∞ s^{n-1} (a+s)^{-n} Υ_#(s) ds/s`, integrated in `σ = ln s`
/// with breakpoints at the kink of `Υ_#` and at `s = a`.
pub fn psi_bound_check(a: f64, n: usize) -> Result<PsiCheck> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidParameter(format!("a = {a} must be positive")));
    }
    if n < 1 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let ni = n as i32;
    let g = |sigma: f64| -> f64 {
        let s = sigma.exp();
        // s^{n-1}(a+s)^{-n} written as (s/(a+s))^n / s to avoid overflow.
        (s / (a + s)).powi(ni) * upsilon_sharp(s) / s
    };
    let mut cuts = vec![0.0, a.ln()];
    cuts.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    let peak = (-400..=400)
        .map(|i| g(cuts[0] - 10.0 + (cuts[1] - cuts[0] + 20.0) * i as f64 / 800.0))
        .fold(0.0, f64::max)
        .max(g(cuts[0]))
        .max(g(cuts[1]));
    let floor = PSI_CUTOFF * peak;
    let mut lo = cuts[0];
    while g(lo) >= floor {
        lo -= 1.0;
    }
    let mut hi = cuts[1];
    while g(hi) >= floor {
        hi += 1.0;
    }
    let mut points = vec![lo];
    points.extend(cuts.iter().copied().filter(|c| *c > lo && *c < hi));
    points.push(hi);
    points.dedup();
    let mut value = 0.0;
    for w in points.windows(2) {
        value += adaptive_gauss(&g, w[0], w[1], 1e-13)?;
    }
    let bound = 3.0 * (1.0 + (1.0 / a).ln().max(0.0));
    let sharp_bound = if a > 1.0 { 3.0 * (1.0 + a.ln()) / a } else { bound };
    Ok(PsiCheck {
        a,
        value,
        bound,
        sharp_bound,
        ok: value <= bound,
    })
}

/// Values below this fraction of the datum's sup norm count as zero.
pub const NOISE_FLOOR: f64 = 1e-12;

/// A BMO distance along a ladder of scales, largest scale first.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayTable {
    /// Name of the scale parameter (`eps`, `t` or `z`).
    pub parameter: &'static str,
    pub scales: Vec<f64>,
    pub values: Vec<f64>,
    /// Sup norm of the datum, for the noise floor.
    pub scale: f64,
}

impl DecayTable {
    fn new(parameter: &'static str, scales: Vec<f64>, values: Vec<f64>, scale: f64) -> Self {
        DecayTable {
            parameter,
            scales,
            values,
            scale,
        }
    }

    fn cleaned(&self, v: f64) -> f64 {
        if v <= NOISE_FLOOR * self.scale {
            0.0
        } else {
            v
        }
    }

    pub fn first(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn last(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Smallest-scale value over the largest value on the ladder.
    pub fn ratio(&self) -> f64 {
        let top = self.cleaned(self.values.iter().copied().fold(0.0, f64::max));
        if top == 0.0 {
            0.0
        } else {
            self.cleaned(self.last()) / top
        }
    }

    pub fn verdict(&self, thresholds: &Thresholds) -> Verdict {
        let top = self.cleaned(self.values.iter().copied().fold(0.0, f64::max));
        thresholds.classify_pair(self.cleaned(self.last()), top)
    }

    /// Log-log slope of value against scale over all rows.
    pub fn slope(&self) -> f64 {
        loglog_slope(&self.scales, &self.values)
    }

    /// True when values never increase as the scale shrinks.
    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|w| self.cleaned(w[1]) <= w[0] * (1.0 + 1e-9))
    }
}

/// One row of [`vmo_approximation_run`].
#[derive(Clone, Debug, PartialEq)]
pub struct ApproxRow {
    pub eps: f64,
    /// `‖f - f_ε‖_BMO`.
    pub bmo_error: f64,
    /// Hölder seminorms of `f_ε`, one per requested exponent.
    pub holder: Vec<f64>,
    /// `sup |∇' f_ε|`.
    pub gradient_sup: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApproxReport {
    pub etas: Vec<f64>,
    pub rows: Vec<ApproxRow>,
    pub table: DecayTable,
}

/// Settings shared by the decay tests.
#[derive(Clone, Debug)]
pub struct DecaySettings<'a> {
    pub family: &'a DyadicCubeFamily,
    /// BMO exponent, 1 or 2.
    pub p: f64,
}

fn check_ladder(ladder: &[f64], top: f64, what: &str) -> Result<Vec<f64>> {
    if ladder.is_empty() {
        return Err(Error::InvalidParameter(format!("empty {what} ladder")));
    }
    if let Some(bad) = ladder.iter().find(|e| !(**e > 0.0 && **e <= top)) {
        return Err(Error::InvalidParameter(format!("{what} = {bad} must lie in (0, {top}]")));
    }
    let mut sorted = ladder.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    Ok(sorted)
}

/// Approximation of `f` by `f_ε = u(·, ε)`: BMO error, Hölder seminorms of
/// the approximants and their tangential gradient bound.
pub fn vmo_approximation_run(
    f: &SampledField,
    prop: &PoissonPropagator,
    eps_ladder: &[f64],
    etas: &[f64],
    settings: &DecaySettings,
    policy: &PairPolicy,
) -> Result<ApproxReport> {
    let grid = *f.grid();
    let eps = check_ladder(eps_ladder, grid.half_extent() / 4.0, "ε")?;
    let ext = Extender::new(f, prop)?;
    let m = f.components();
    let mut channels = vec![Channel::Value];
    channels.extend((0..grid.dim()).map(Channel::Tangential));
    let mut rows = Vec::with_capacity(eps.len());
    for &e in &eps {
        let mut planes = ext.channels(e, &channels).into_iter();
        let fe = SampledField::new(grid, m, planes.next().expect("value channel"))?;
        let mut grad = vec![0.0; grid.node_count()];
        for plane in planes {
            for (g, chunk) in grad.iter_mut().zip(plane.chunks_exact(m)) {
                *g += chunk.iter().map(|z| z.norm_sqr()).sum::<f64>();
            }
        }
        let gradient_sup = grad.iter().fold(0.0f64, |a, b| a.max(*b)).sqrt();
        let bmo_error = bmo_norm(&f.sub(&fe)?, settings.family, settings.p)?;
        let holder = etas
            .iter()
            .map(|&eta| holder_seminorm(&fe, eta, policy))
            .collect::<Result<Vec<_>>>()?;
        rows.push(ApproxRow {
            eps: e,
            bmo_error,
            holder,
            gradient_sup,
        });
    }
    let table = DecayTable::new(
        "eps",
        rows.iter().map(|r| r.eps).collect(),
        rows.iter().map(|r| r.bmo_error).collect(),
        f.sup_norm(),
    );
    Ok(ApproxReport {
        etas: etas.to_vec(),
        rows,
        table,
    })
}

/// The mollifier families accepted by [`mollifier_convergence`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mollifier {
    /// `e^{-|x|²/2}`.
    Gaussian,
    /// `(1 + |x|²)^{-(d+1)/2}`, the harmonic Poisson profile.
    HarmonicPoisson,
    /// `e^{-1/(1-|x|²)}` on the unit ball.
    Bump,
}

/// Decay exponent margin `ε` in `|φ(x)| ≤ C(1+|x|)^{-d-ε}`.
pub const DECAY_MARGIN: f64 = 0.5;

/// Largest relative deviation of the raw grid mass of `φ_t` from 1.
pub const MASS_TOLERANCE: f64 = 0.25;

impl Mollifier {
    pub const NAMES: [&'static str; 3] = ["gaussian", "harmonic_poisson", "bump"];

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "gaussian" => Ok(Mollifier::Gaussian),
            "harmonic_poisson" => Ok(Mollifier::HarmonicPoisson),
            "bump" => Ok(Mollifier::Bump),
            other => Err(Error::Unknown {
                kind: "mollifier",
                name: other.into(),
            }),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mollifier::Gaussian => "gaussian",
            Mollifier::HarmonicPoisson => "harmonic_poisson",
            Mollifier::Bump => "bump",
        }
    }

    /// Unnormalized profile at radius `r` in `d` dimensions.
    pub fn profile(&self, r: f64, d: usize) -> f64 {
        match self {
            Mollifier::Gaussian => (-0.5 * r * r).exp(),
            Mollifier::HarmonicPoisson => (1.0 + r * r).powf(-0.5 * (d as f64 + 1.0)),
            Mollifier::Bump => {
                if r < 1.0 {
                    (-1.0 / (1.0 - r * r)).exp()
                } else {
                    0.0
                }
            }
        }
    }

    /// Exact integral of the profile over `ℝ^d`, `d ∈ {1, 2}`.
    pub fn mass(&self, d: usize) -> f64 {
        use core::f64::consts::PI;
        match (self, d) {
            (Mollifier::Gaussian, 1) => (2.0 * PI).sqrt(),
            (Mollifier::Gaussian, _) => 2.0 * PI,
            (Mollifier::HarmonicPoisson, 1) => PI,
            (Mollifier::HarmonicPoisson, _) => 2.0 * PI,
            (Mollifier::Bump, 1) => BUMP_MASS_1D,
            (Mollifier::Bump, _) => BUMP_MASS_2D,
        }
    }

    /// Checks unit mass, the decay bound and a Lipschitz bound at sampled
    /// radii.
    pub fn validate(&self, d: usize) -> Result<()> {
        let bad = |why: String| Err(Error::InvalidKernel(format!("mollifier {}: {why}", self.name())));
        let mass = self.mass(d);
        let check = adaptive_gauss(
            &|r: f64| {
                let shell = if d == 1 { 2.0 } else { 2.0 * core::f64::consts::PI * r };
                shell * self.profile(r, d)
            },
            0.0,
            1.0,
            1e-12,
        )? + adaptive_gauss(
            &|u: f64| {
                // r = 1/u on (1, ∞).
                let r = 1.0 / u;
                let shell = if d == 1 { 2.0 } else { 2.0 * core::f64::consts::PI * r };
                shell * self.profile(r, d) / (u * u)
            },
            1e-9,
            1.0,
            1e-12,
        )?;
        if (check - mass).abs() > 1e-6 * mass {
            return bad(format!("mass {check} disagrees with {mass}"));
        }
        let weight = |r: f64| self.profile(r, d) * (1.0 + r).powf(d as f64 + DECAY_MARGIN);
        let radii: Vec<f64> = (0..=60).map(|i| 10f64.powf(-2.0 + i as f64 / 10.0)).collect();
        let near = radii.iter().filter(|r| **r <= 100.0).map(|r| weight(*r)).fold(0.0, f64::max);
        let far = radii.iter().filter(|r| **r > 100.0).map(|r| weight(*r)).fold(0.0, f64::max);
        if !(far <= near) {
            return bad(format!("decay weight grows from {near} to {far}"));
        }
        let lip = radii
            .windows(2)
            .map(|w| (self.profile(w[1], d) - self.profile(w[0], d)).abs() / (w[1] - w[0]))
            .fold(0.0, f64::max);
        if !lip.is_finite() || lip > 10.0 {
            return bad(format!("sampled Lipschitz bound {lip}"));
        }
        Ok(())
    }

    /// Transform of `φ_t = t^{-d} φ(·/t)` sampled on the grid and
    /// normalized to unit grid integral; index 0 is exactly 1.
    pub fn transfer(&self, grid: &crate::grid::BoundaryGrid, t: f64) -> Result<Vec<C64>> {
        let d = grid.dim();
        let h = grid.h();
        let mut samples: Vec<C64> = (0..grid.node_count())
            .map(|k| {
                let o = grid.frequency_offsets(k);
                let r = (o[0] as f64).hypot(o[1] as f64) * h / t;
                C64::new(self.profile(r, d), 0.0)
            })
            .collect();
        let raw: f64 = samples.iter().map(|z| z.re).sum::<f64>() * grid.cell_volume() / (self.mass(d) * t.powi(d as i32));
        if (raw - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidKernel(format!(
                "mollifier {} at t = {t} has grid mass {raw}; unresolved on this grid",
                self.name()
            )));
        }
        let fft = FftNd::new(d, grid.n());
        fft.forward(&mut samples);
        let dc = samples[0];
        for s in samples.iter_mut() {
            *s /= dc;
        }
        samples[0] = C64::new(1.0, 0.0);
        Ok(samples)
    }
}

/// `∫_{-1}^{1} e^{-1/(1-x²)} dx`.
const BUMP_MASS_1D: f64 = 0.443_993_816_168_079_4;
/// `2π ∫_0^1 r e^{-1/(1-r²)} dr`.
const BUMP_MASS_2D: f64 = 0.466_512_391_670_583_1;

#[derive(Clone, Debug, PartialEq)]
pub struct MollifierReport {
    pub mollifier: Mollifier,
    pub table: DecayTable,
    pub verdict: Verdict,
}

/// `‖φ_t * f - f‖_BMO` along the ladder, by multiplication on the
/// frequency side.
pub fn mollifier_convergence(
    f: &SampledField,
    mollifier: Mollifier,
    t_ladder: &[f64],
    settings: &DecaySettings,
    thresholds: &Thresholds,
) -> Result<MollifierReport> {
    let grid = *f.grid();
    mollifier.validate(grid.dim())?;
    let ts = check_ladder(t_ladder, grid.half_extent() / 2.0, "t")?;
    let fft = FftNd::new(grid.dim(), grid.n());
    let m = f.components();
    let spectra: Vec<Vec<C64>> = (0..m)
        .map(|c| {
            let mut p = f.component(c);
            fft.forward(&mut p);
            p
        })
        .collect();
    let mut values = Vec::with_capacity(ts.len());
    for &t in &ts {
        let phi = mollifier.transfer(&grid, t)?;
        let mut comps = Vec::with_capacity(m);
        for spec in &spectra {
            let mut p: Vec<C64> = spec.iter().zip(&phi).map(|(a, b)| *a * (*b - C64::new(1.0, 0.0))).collect();
            fft.inverse(&mut p);
            comps.push(p);
        }
        let diff = SampledField::from_components(grid, &comps)?;
        values.push(bmo_norm(&diff, settings.family, settings.p)?);
    }
    let table = DecayTable::new("t", ts, values, f.sup_norm());
    let verdict = table.verdict(thresholds);
    Ok(MollifierReport {
        mollifier,
        table,
        verdict,
    })
}

/// Offsets `2^k · direction` from the largest not exceeding `reach` nodes
/// down to one step.
pub fn lattice_ray(direction: [i64; 2], reach: i64) -> Result<Vec<[i64; 2]>> {
    let len = direction[0].abs().max(direction[1].abs());
    if len == 0 {
        return Err(Error::InvalidParameter("zero ray direction".into()));
    }
    let mut out = Vec::new();
    let mut k = 1i64;
    while k * len <= reach {
        out.push([k * direction[0], k * direction[1]]);
        k *= 2;
    }
    out.reverse();
    Ok(out)
}

/// `‖τ_z f - f‖_BMO` for each lattice offset `z`.
pub fn translation_test(f: &SampledField, z_ladder: &[[i64; 2]], settings: &DecaySettings) -> Result<DecayTable> {
    let grid = *f.grid();
    if z_ladder.is_empty() {
        return Err(Error::InvalidParameter("empty translation ladder".into()));
    }
    let mut rows: Vec<(f64, [i64; 2])> = z_ladder
        .iter()
        .map(|z| ((z[0] as f64).hypot(z[1] as f64) * grid.h(), *z))
        .collect();
    if rows.iter().any(|r| r.0 == 0.0) {
        return Err(Error::InvalidParameter("translation by zero".into()));
    }
    rows.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite"));
    let mut values = Vec::with_capacity(rows.len());
    for (_, z) in &rows {
        values.push(bmo_norm(&f.translate(*z).sub(f)?, settings.family, settings.p)?);
    }
    Ok(DecayTable::new("z", rows.iter().map(|r| r.0).collect(), values, f.sup_norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{generate, BoundaryGrid, CubeLattice, Generator};
    use crate::kernels::{build_propagator, named_system, SystemSpec};

    #[test]
    fn sharp_modulus_values() {
        assert_eq!(upsilon_sharp(0.0), 0.0);
        assert_eq!(upsilon_sharp(0.5), 0.5);
        assert_eq!(upsilon_sharp(1.0), 1.0);
        assert!((upsilon_sharp(core::f64::consts::E) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn moduli_validate() {
        ModulusOfContinuity::Sharp.validate().unwrap();
        ModulusOfContinuity::Power { eta: 0.5 }.validate().unwrap();
        assert!(ModulusOfContinuity::Power { eta: 1.5 }.validate().is_err());
        let bad = ModulusOfContinuity::Custom {
            name: "cos",
            eval: |s| 1.0 - s.cos(),
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn psi_at_one_in_two_dimensions() {
        let c = psi_bound_check(1.0, 2).unwrap();
        assert!((c.value - 2.0 * core::f64::consts::LN_2).abs() < 1e-10, "{}", c.value);
        assert!(c.ok);
    }

    #[test]
    fn psi_bounds_on_both_sides() {
        let big = psi_bound_check(10.0, 2).unwrap();
        assert!(big.value <= big.sharp_bound);
        let small = psi_bound_check(0.01, 2).unwrap();
        assert!(small.ok && small.value <= 3.0 * (1.0 + 100f64.ln()));
    }

    #[test]
    fn mollifiers_validate_and_reproduce_constants() {
        let g = BoundaryGrid::new(1, 256, 1.0 / 32.0).unwrap();
        let fam = DyadicCubeFamily::new(g, CubeLattice::Sliding);
        let st = DecaySettings { family: &fam, p: 2.0 };
        let c = SampledField::from_fn(g, |_| C64::new(3.0, 0.0));
        for name in Mollifier::NAMES {
            let m = Mollifier::by_name(name).unwrap();
            m.validate(1).unwrap();
            m.validate(2).unwrap();
            let rep = mollifier_convergence(&c, m, &[0.5, 0.25, 0.125], &st, &Thresholds::default()).unwrap();
            assert!(rep.table.values.iter().all(|v| *v < 1e-13));
            assert_eq!(rep.verdict, Verdict::Vanishing);
        }
    }

    #[test]
    fn unresolved_mollifier_is_rejected() {
        let g = BoundaryGrid::new(1, 64, 1.0).unwrap();
        assert!(Mollifier::Bump.transfer(&g, 0.3).is_err());
    }

    #[test]
    fn translation_of_bump_decays_linearly() {
        let g = BoundaryGrid::new(1, 512, 1.0 / 32.0).unwrap();
        let fam = DyadicCubeFamily::new(g, CubeLattice::Sliding);
        let st = DecaySettings { family: &fam, p: 2.0 };
        let f = generate(&Generator::Bump { radius: None }, &g, 1, 0).unwrap();
        let tab = translation_test(&f, &lattice_ray([1, 0], 32).unwrap(), &st).unwrap();
        assert_eq!(tab.scales.len(), 6);
        assert!(tab.slope() > 0.9, "{}", tab.slope());
        assert_eq!(tab.verdict(&Thresholds::default()), Verdict::Vanishing);
    }

    #[test]
    fn approximation_of_constant_is_exact() {
        let g = BoundaryGrid::new(1, 128, 1.0 / 16.0).unwrap();
        let sys = named_system(&SystemSpec::Laplacian, 2).unwrap();
        let prop = build_propagator(&sys, &g, &[]).unwrap();
        let fam = DyadicCubeFamily::new(g, CubeLattice::Sliding);
        let st = DecaySettings { family: &fam, p: 2.0 };
        let c = SampledField::from_fn(g, |_| C64::new(-2.0, 0.0));
        let rep = vmo_approximation_run(&c, &prop, &[0.5, 0.25], &[0.5], &st, &PairPolicy::default()).unwrap();
        assert!(rep.rows.iter().all(|r| r.bmo_error < 1e-13 && r.gradient_sup < 1e-12));
        assert_eq!(rep.table.verdict(&Thresholds::default()), Verdict::Vanishing);
    }
}
