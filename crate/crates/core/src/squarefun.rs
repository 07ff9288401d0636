//! Tent-space operators, Θ square functions, atoms and molecules, and the
//! Calderón reproducing identity.
//!
//! Half-space inputs are nonnegative densities `|F|²` on grid × ladder
//! ([`LevelEnergy`]). The area function integrates them over cones
//! against `dy' dt/t^n`; per level this is a periodic convolution with the
//! cone cross-section, done by FFT.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

// Unused when std is linked: its inherent float methods take precedence.
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::extension::LevelEnergy;
use crate::fft::FftNd;
use crate::grid::{BoundaryGrid, Cube, CubeLattice, DyadicCubeFamily, SampledField};
use crate::kernels::{kernel_integral, Channel, PoissonPropagator};
use crate::linalg::{expm, CMat};
use crate::quadrature::{gauss_legendre, linear_slope, log_weights};
use crate::seminorms::{box_integrals, window_max};
use crate::{Error, Result, C64};

/// Lattice offsets of the cone cross-sections `{|y'| < κ t_k}`, wrapped
/// onto the torus without repetition.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeStencil {
    grid: BoundaryGrid,
    aperture: f64,
    levels: Vec<f64>,
    offsets: Vec<Vec<[i64; 2]>>,
}

impl ConeStencil {
    pub fn new(grid: &BoundaryGrid, aperture: f64, levels: &[f64]) -> Result<Self> {
        if !(aperture > 0.0 && aperture.is_finite()) {
            return Err(Error::InvalidParameter(format!("aperture {aperture} must be positive")));
        }
        let n = grid.n() as i64;
        let h = grid.h();
        let mut offsets = Vec::with_capacity(levels.len());
        for &t in levels {
            let radius = aperture * t;
            let reach = ((radius / h).ceil() as i64).min(n / 2);
            let mut seen = vec![false; grid.node_count()];
            let mut list = Vec::new();
            let rows = if grid.dim() == 2 { reach } else { 0 };
            for a in -rows..=rows {
                for b in -reach..=reach {
                    if ((a as f64).hypot(b as f64)) * h >= radius {
                        continue;
                    }
                    let o = if grid.dim() == 1 { [b, 0] } else { [a, b] };
                    let node = grid.shifted(0, o);
                    if !seen[node] {
                        seen[node] = true;
                        list.push(o);
                    }
                }
            }
            if list.is_empty() {
                return Err(Error::InvalidParameter(format!("empty cone section at t = {t}")));
            }
            offsets.push(list);
        }
        Ok(ConeStencil {
            grid: *grid,
            aperture,
            levels: levels.to_vec(),
            offsets,
        })
    }

    pub fn aperture(&self) -> f64 {
        self.aperture
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn offsets(&self, level: usize) -> &[[i64; 2]] {
        &self.offsets[level]
    }

    fn check(&self, energy: &LevelEnergy) -> Result<()> {
        if energy.grid() != &self.grid || energy.levels() != self.levels.as_slice() {
            return Err(Error::ShapeMismatch("stencil and density use different ladders".into()));
        }
        Ok(())
    }

    /// Per-level weights `h^d Δlog t · t^{1-n}` realizing `dy' dt/t^n`.
    pub fn weights(&self) -> Vec<f64> {
        let n = self.grid.ambient_dim() as i32;
        let vol = self.grid.cell_volume();
        log_weights(&self.levels)
            .iter()
            .zip(&self.levels)
            .map(|(w, t)| vol * w * t.powi(1 - n))
            .collect()
    }
}

/// Lusin area function `(∫∫_{Γ_κ(x')} |F|² dy' dt/t^n)^{1/2}` of a density
/// `|F|²`.
pub fn area_function(energy: &LevelEnergy, stencil: &ConeStencil) -> Result<SampledField> {
    stencil.check(energy)?;
    let grid = *energy.grid();
    let nodes = grid.node_count();
    let fft = FftNd::new(grid.dim(), grid.n());
    let weights = stencil.weights();
    let mut acc = vec![C64::zero(); nodes];
    for (k, w) in weights.iter().enumerate() {
        let mut dens: Vec<C64> = energy.level(k).iter().map(|&v| C64::new(v, 0.0)).collect();
        if dens.iter().all(|z| z.re == 0.0) {
            continue;
        }
        let mut ind = vec![C64::zero(); nodes];
        for &o in stencil.offsets(k) {
            ind[grid.shifted(0, o)] = C64::new(1.0, 0.0);
        }
        fft.forward(&mut dens);
        fft.forward(&mut ind);
        // The section is symmetric, so correlation equals convolution.
        for (a, b) in acc.iter_mut().zip(dens.iter().zip(&ind)) {
            *a += b.0 * b.1 * *w;
        }
    }
    fft.inverse(&mut acc);
    // Round-off of the transforms sits near 1e-16 of the largest value.
    let floor = 1e-13 * acc.iter().map(|z| z.re).fold(0.0, f64::max);
    let values = acc
        .iter()
        .map(|z| C64::new(if z.re > floor { z.re.sqrt() } else { 0.0 }, 0.0))
        .collect();
    SampledField::new(grid, 1, values)
}

/// Direct stencil-sum evaluation of the area function (reference route).
pub fn area_function_direct(energy: &LevelEnergy, stencil: &ConeStencil) -> Result<SampledField> {
    stencil.check(energy)?;
    let grid = *energy.grid();
    let weights = stencil.weights();
    let mut acc = vec![0.0; grid.node_count()];
    for (k, w) in weights.iter().enumerate() {
        let dens = energy.level(k);
        for (x, a) in acc.iter_mut().enumerate() {
            let s: f64 = stencil.offsets(k).iter().map(|&o| dens[grid.shifted(x, o)]).sum();
            *a += w * s;
        }
    }
    SampledField::new(grid, 1, acc.iter().map(|v| C64::new(v.sqrt(), 0.0)).collect())
}

/// Carleson operator: at each node, the largest normalized box average
/// `((1/|Q|) ∫∫_{T(Q)} |F|² dy' dt/t)^{1/2}` over family cubes `Q ∋ x'`.
pub fn carleson_operator(energy: &LevelEnergy, family: &DyadicCubeFamily) -> Result<SampledField> {
    let grid = *energy.grid();
    if family.grid() != &grid {
        return Err(Error::ShapeMismatch("cube family built on another grid".into()));
    }
    let nodes = grid.node_count();
    let mut out = vec![0.0f64; nodes];
    for &level in family.levels() {
        let boxes = box_integrals(energy, level);
        let side = 1usize << level;
        match family.lattice() {
            CubeLattice::Sliding => {
                // Corners c with x ∈ Q(c) form the window x - [0, side).
                let maxima = window_max(&grid, &boxes, level);
                let back = [-(side as i64 - 1), if grid.dim() == 2 { -(side as i64 - 1) } else { 0 }];
                for (x, o) in out.iter_mut().enumerate() {
                    *o = o.max(maxima[grid.shifted(x, back)]);
                }
            }
            CubeLattice::Dyadic => {
                for (x, o) in out.iter_mut().enumerate() {
                    let idx = grid.multi_index(x);
                    let corner = grid.node([idx[0] / side * side, idx[1] / side * side]);
                    *o = o.max(boxes[corner]);
                }
            }
        }
    }
    SampledField::new(grid, 1, out.iter().map(|v| C64::new(v.sqrt(), 0.0)).collect())
}

/// Tent-duality ratio `∫∫|F G| dy' dt/t ÷ ∫ 𝓒F · 𝓐G dx'`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualityRatio {
    pub ratio: f64,
    pub numerator: f64,
    pub denominator: f64,
    /// Set when both sides vanish and the ratio is reported as 0.
    pub degenerate: bool,
}

pub fn tent_duality_ratio(
    f: &LevelEnergy,
    g: &LevelEnergy,
    family: &DyadicCubeFamily,
    stencil: &ConeStencil,
) -> Result<DualityRatio> {
    if f.grid() != g.grid() || f.levels() != g.levels() {
        return Err(Error::ShapeMismatch("tent functions on different ladders".into()));
    }
    let grid = f.grid();
    let vol = grid.cell_volume();
    let w = log_weights(f.levels());
    let mut numerator = 0.0;
    for (k, wk) in w.iter().enumerate() {
        let s: f64 = f.level(k).iter().zip(g.level(k)).map(|(a, b)| (a * b).sqrt()).sum();
        numerator += wk * vol * s;
    }
    let cf = carleson_operator(f, family)?;
    let ag = area_function(g, stencil)?;
    let denominator: f64 = cf
        .values()
        .iter()
        .zip(ag.values())
        .map(|(a, b)| a.re * b.re)
        .sum::<f64>()
        * vol;
    if denominator == 0.0 {
        if numerator == 0.0 {
            return Ok(DualityRatio {
                ratio: 0.0,
                numerator,
                denominator,
                degenerate: true,
            });
        }
        return Err(Error::QuadratureFault("zero denominator with a nonzero pairing".into()));
    }
    Ok(DualityRatio {
        ratio: numerator / denominator,
        numerator,
        denominator,
        degenerate: false,
    })
}

/// `S_Θ f`: the area function of `Θf = t ∂_j u`, `u` the extension of `f`.
pub fn theta_square_function(
    f: &SampledField,
    prop: &PoissonPropagator,
    channel: Channel,
    stencil: &ConeStencil,
) -> Result<SampledField> {
    if channel == Channel::Value {
        return Err(Error::InvalidParameter("Θ uses a derivative channel".into()));
    }
    let energy = LevelEnergy::from_datum(f, prop, stencil.levels(), 0.0, &[channel])?;
    area_function(&energy, stencil)
}

/// Mean-zero function supported on a cube with `sup|a| = |Q|^{-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub cube: Cube,
    pub field: SampledField,
}

impl Atom {
    /// Random atom on a cube of side between `2h` and `S/2`, with values
    /// drawn from `seed`.
    pub fn random(grid: &BoundaryGrid, components: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let top = grid.max_level().saturating_sub(1).max(1);
        let level = rng.gen_range(1..=top);
        let n = grid.n();
        let corner = [rng.gen_range(0..n), if grid.dim() == 2 { rng.gen_range(0..n) } else { 0 }];
        let cube = Cube { level, corner };
        let mut values = vec![C64::zero(); grid.node_count() * components];
        let members: Vec<usize> = cube.nodes(grid).collect();
        for &node in &members {
            for c in 0..components {
                values[node * components + c] = C64::new(rng.gen_range(-1.0..1.0), 0.0);
            }
        }
        for c in 0..components {
            let mean = members.iter().map(|&k| values[k * components + c]).sum::<C64>() / members.len() as f64;
            for &k in &members {
                values[k * components + c] -= mean;
            }
        }
        let sup = members
            .iter()
            .map(|&k| {
                values[k * components..(k + 1) * components]
                    .iter()
                    .map(|z| z.norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        let volume = cube.side(grid).powi(grid.dim() as i32);
        let scale = 1.0 / (volume * sup.max(f64::MIN_POSITIVE));
        for v in values.iter_mut() {
            *v *= scale;
        }
        let atom = Atom {
            cube,
            field: SampledField::new(*grid, components, values)?,
        };
        atom.check()?;
        Ok(atom)
    }

    /// Re-asserts support, size and cancellation.
    pub fn check(&self) -> Result<()> {
        let grid = self.field.grid();
        let volume = self.cube.side(grid).powi(grid.dim() as i32);
        let m = self.field.components();
        let mut sum = vec![C64::zero(); m];
        for node in 0..grid.node_count() {
            let vals = self.field.node_values(node);
            let size = vals.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if !self.cube.contains(grid, node) && size != 0.0 {
                return Err(Error::InvalidParameter("atom leaks outside its cube".into()));
            }
            if size > (1.0 + 1e-12) / volume {
                return Err(Error::InvalidParameter("atom exceeds |Q|^-1".into()));
            }
            for (s, v) in sum.iter_mut().zip(vals) {
                *s += v;
            }
        }
        let scale = 1.0 / volume;
        if sum.iter().any(|s| s.norm() * grid.cell_volume() > 1e-12 * scale * volume) {
            return Err(Error::InvalidParameter("atom has nonzero mean".into()));
        }
        Ok(())
    }
}

/// `L¹` norm `Σ |g| h^d` of a field.
pub fn l1_norm(f: &SampledField) -> f64 {
    f.l1_norm()
}

/// Annulus decay of `t∇K(·,t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MoleculeReport {
    pub t: f64,
    /// `‖t∇K‖_{L²(B_t)}`.
    pub ball_norm: f64,
    /// `‖t∇K‖_{L²}` on `2^{k-1}t ≤ |x'| < 2^k t`, `k = 1, 2, …`.
    pub annulus_norms: Vec<f64>,
    /// Least-squares slope of `log₂` annulus norm against `k` over the
    /// interior annuli: the first is pre-asymptotic (`∂_tK` changes sign at
    /// `|x'| = t`) and the last touches the edge of the periodic cell.
    pub slope: f64,
    /// Slope over every annulus.
    pub slope_all: f64,
    pub expected_slope: f64,
    /// `max_k norm_k · |2^k B_t|^{1/2} 2^k`.
    pub fitted_constant: f64,
    /// Largest `|Σ t∂_jK h^d|` entry over the gradient channels.
    pub mean_defect: f64,
}

/// Minimum number of annuli for a meaningful decay fit.
pub const MIN_ANNULI: usize = 4;

pub fn molecule_check(prop: &PoissonPropagator, t: f64) -> Result<MoleculeReport> {
    let grid = *prop.grid();
    let s = grid.half_extent();
    if !(t > 0.0) || t > s / 8.0 * (1.0 + 1e-12) {
        return Err(Error::HeightTooLarge { t, limit: s / 8.0 });
    }
    let mut annuli = 0usize;
    while (1u64 << (annuli + 1)) as f64 * t <= s * (1.0 + 1e-12) {
        annuli += 1;
    }
    if annuli < MIN_ANNULI {
        return Err(Error::BoxTooSmall(format!("only {annuli} annuli fit below S for t = {t}")));
    }
    let m = prop.components();
    let d = grid.dim();
    let vol = grid.cell_volume();
    let mut ball = 0.0;
    let mut rings = vec![0.0; annuli];
    let mut mean_defect = 0.0f64;
    for ch in Channel::gradient(d) {
        let field = prop.kernel_channel(t, ch)?;
        let integral = kernel_integral(&field, m);
        mean_defect = mean_defect.max(integral.max_abs() * t);
        for node in 0..grid.node_count() {
            let v = t * t * field.node_values(node).iter().map(|z| z.norm_sqr()).sum::<f64>() * vol;
            let r = grid.radius(node);
            if r < t {
                ball += v;
            } else {
                let k = ((r / t).log2().floor() as usize) + 1;
                if k <= annuli {
                    rings[k - 1] += v;
                }
            }
        }
    }
    let annulus_norms: Vec<f64> = rings.iter().map(|v| v.sqrt()).collect();
    let pts: Vec<(f64, f64)> = annulus_norms
        .iter()
        .enumerate()
        .map(|(i, v)| ((i + 1) as f64, v.log2()))
        .collect();
    let ball_volume = |radius: f64| if d == 1 { 2.0 * radius } else { core::f64::consts::PI * radius * radius };
    let fitted_constant = annulus_norms
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let k = (i + 1) as i32;
            v * ball_volume(2f64.powi(k) * t).sqrt() * 2f64.powi(k)
        })
        .fold(0.0, f64::max);
    Ok(MoleculeReport {
        t,
        ball_norm: ball.sqrt(),
        slope: linear_slope(&pts[1..pts.len() - 1]),
        slope_all: linear_slope(&pts),
        expected_slope: -(d as f64) / 2.0 - 1.0,
        annulus_norms,
        fitted_constant,
        mean_defect,
    })
}

/// Worst per-frequency discrepancy in the Calderón reproducing identity.
#[derive(Clone, Debug, PartialEq)]
pub struct CalderonReport {
    pub a: f64,
    pub b: f64,
    pub nodes: usize,
    pub max_error: f64,
    pub worst_frequency: usize,
}

/// Relative error at frequency `k` between `4∫_a^b tΛ²e^{2tΛ} dt` (by
/// Gauss–Legendre in `log t`) and `2bΛe^{2bΛ} - e^{2bΛ} - 2aΛe^{2aΛ} +
/// e^{2aΛ}`.
///
/// The integration interval is cut where `e^{-2c|ξ|(t-a)}` drops below
/// `e^{-36}`, `c` the propagator's decay constant; beyond it both sides
/// are below double precision relative to their size.
pub fn calderon_frequency_error(prop: &PoissonPropagator, k: usize, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let xi = prop.frequency_norm(k);
    if xi == 0.0 || a == b {
        return 0.0;
    }
    let lam = prop.solvent(k);
    let m = lam.rows();
    let e2 = |t: f64| expm(&lam.scale_real(2.0 * t));
    let edge = |t: f64| -> CMat {
        let e = e2(t);
        lam.matmul(&e).scale_real(2.0 * t).sub(&e)
    };
    let rhs = edge(b).sub(&edge(a));
    let c = prop.decay_constant().max(1e-3);
    let upper = b.min(a + 36.0 / (2.0 * c * xi));
    let (la, lb) = (a.ln(), upper.ln());
    let (mid, half) = (0.5 * (la + lb), 0.5 * (lb - la));
    let lam2 = lam.matmul(&lam);
    let mut lhs = CMat::zeros(m, m);
    for (x, w) in rule.0.iter().zip(&rule.1) {
        let t = (mid + half * x).exp();
        // dt = t d(log t)
        lhs.axpy(C64::new(4.0 * t * t * w * half, 0.0), &lam2.matmul(&e2(t)));
    }
    let scale = rhs.norm_fro().max(lhs.norm_fro()).max(1e-300);
    lhs.sub(&rhs).norm_fro() / scale
}

pub fn calderon_identity_check(prop: &PoissonPropagator, a: f64, b: f64, nodes: usize) -> Result<CalderonReport> {
    let limit = prop.grid().half_extent() / 8.0;
    if !(a > 0.0 && a <= b) || b > limit * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!("need 0 < a ≤ b ≤ S/8 = {limit}, got a = {a}, b = {b}")));
    }
    let rule = gauss_legendre(nodes);
    let mut report = CalderonReport {
        a,
        b,
        nodes,
        max_error: 0.0,
        worst_frequency: 0,
    };
    for k in 0..prop.grid().node_count() {
        let e = calderon_frequency_error(prop, k, a, b, &rule);
        if e > report.max_error {
            report.max_error = e;
            report.worst_frequency = k;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{generate, Generator};
    use crate::kernels::{build_propagator, named_system, SystemSpec};

    fn grid2() -> BoundaryGrid {
        BoundaryGrid::new(2, 16, 0.25).unwrap()
    }

    #[test]
    fn single_term_area_function() {
        let g = grid2();
        let levels = vec![0.25, 0.5, 1.0];
        let mut dens = vec![0.0; 3 * 256];
        let spot = g.node([8, 8]);
        dens[256 + spot] = 4.0;
        let energy = LevelEnergy::new(g, levels.clone(), dens).unwrap();
        let st = ConeStencil::new(&g, 1.0, &levels).unwrap();
        let a = area_function(&energy, &st).unwrap();
        let b = area_function_direct(&energy, &st).unwrap();
        let w = st.weights()[1];
        for x in 0..256 {
            assert!((a.value(x, 0).re - b.value(x, 0).re).abs() < 1e-12 * b.sup_norm());
            let inside = g.torus_distance(x, spot) < 0.5;
            let expect = if inside { (4.0 * w).sqrt() } else { 0.0 };
            assert!((b.value(x, 0).re - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn operators_are_homogeneous() {
        let g = grid2();
        let levels = vec![0.25, 0.5, 1.0];
        let dens: Vec<f64> = (0..768).map(|k| ((k * 7) % 13) as f64).collect();
        let e = LevelEnergy::new(g, levels.clone(), dens).unwrap();
        let e9 = e.scaled(9.0);
        let st = ConeStencil::new(&g, 1.0, &levels).unwrap();
        let fam = DyadicCubeFamily::new(g, CubeLattice::Sliding);
        let (a, a3) = (area_function(&e, &st).unwrap(), area_function(&e9, &st).unwrap());
        let (c, c3) = (carleson_operator(&e, &fam).unwrap(), carleson_operator(&e9, &fam).unwrap());
        for x in 0..256 {
            assert!((a3.value(x, 0).re - 3.0 * a.value(x, 0).re).abs() < 1e-10);
            assert!((c3.value(x, 0).re - 3.0 * c.value(x, 0).re).abs() < 1e-10);
        }
    }

    #[test]
    fn carleson_operator_matches_box_supremum() {
        let g = grid2();
        let levels = vec![0.25, 0.5, 1.0];
        let dens: Vec<f64> = (0..768).map(|k| ((k * 5) % 17) as f64).collect();
        let e = LevelEnergy::new(g, levels, dens).unwrap();
        for lattice in [CubeLattice::Sliding, CubeLattice::Dyadic] {
            let fam = DyadicCubeFamily::new(g, lattice);
            let c = carleson_operator(&e, &fam).unwrap();
            let norm = crate::seminorms::carleson_norm(&e, &fam).unwrap();
            let sup = c.values().iter().map(|z| z.re).fold(0.0, f64::max);
            assert!((sup - norm).abs() < 1e-12 * norm);
            // Brute force at one node.
            let x = 37;
            let mut best = 0.0f64;
            for &l in fam.levels() {
                let boxes = box_integrals(&e, l);
                for q in fam.cubes_at(l) {
                    if q.contains(&g, x) {
                        best = best.max(boxes[g.node(q.corner)]);
                    }
                }
            }
            assert!((c.value(x, 0).re - best.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_pairing_is_degenerate() {
        let g = grid2();
        let levels = vec![0.25, 0.5];
        let f = LevelEnergy::new(g, levels.clone(), vec![1.0; 512]).unwrap();
        let z = LevelEnergy::new(g, levels.clone(), vec![0.0; 512]).unwrap();
        let st = ConeStencil::new(&g, 1.0, &levels).unwrap();
        let fam = DyadicCubeFamily::new(g, CubeLattice::Sliding);
        let r = tent_duality_ratio(&f, &z, &fam, &st).unwrap();
        assert!(r.degenerate && r.ratio == 0.0);
    }

    #[test]
    fn atoms_satisfy_their_invariants() {
        let g = BoundaryGrid::new(2, 32, 0.125).unwrap();
        for seed in 0..10 {
            let a = Atom::random(&g, 2, seed).unwrap();
            a.check().unwrap();
        }
    }

    #[test]
    fn theta_of_constant_vanishes() {
        let g = BoundaryGrid::new(1, 64, 0.125).unwrap();
        let sys = named_system(&SystemSpec::Laplacian, 2).unwrap();
        let prop = build_propagator(&sys, &g, &[]).unwrap();
        let f = generate(&Generator::Constant { value: C64::new(2.0, 0.0) }, &g, 1, 0).unwrap();
        let st = ConeStencil::new(&g, 1.0, &[0.125, 0.25, 0.5]).unwrap();
        let s = theta_square_function(&f, &prop, Channel::Normal, &st).unwrap();
        assert!(s.sup_norm() < 1e-12);
    }

    #[test]
    fn calderon_laplacian_and_degenerate_interval() {
        let g = BoundaryGrid::new(1, 256, 1.0 / 16.0).unwrap();
        let sys = named_system(&SystemSpec::Laplacian, 2).unwrap();
        let prop = build_propagator(&sys, &g, &[]).unwrap();
        let r = calderon_identity_check(&prop, 0.25, 1.0, 64).unwrap();
        assert!(r.max_error < 1e-10, "{}", r.max_error);
        assert_eq!(calderon_identity_check(&prop, 0.5, 0.5, 64).unwrap().max_error, 0.0);
    }

    #[test]
    fn molecule_shape_for_laplacian() {
        let g = BoundaryGrid::new(1, 2048, 1.0 / 128.0).unwrap();
        let sys = named_system(&SystemSpec::Laplacian, 2).unwrap();
        let prop = build_propagator(&sys, &g, &[]).unwrap();
        assert!(molecule_check(&prop, g.half_extent() / 4.0).is_err());
        let rep = molecule_check(&prop, g.half_extent() / 64.0).unwrap();
        assert_eq!(rep.annulus_norms.len(), 6);
        assert!(rep.mean_defect < 1e-8);
        assert!((rep.slope - rep.expected_slope).abs() < 0.15, "{}", rep.slope);
    }
}
