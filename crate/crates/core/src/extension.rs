//! Poisson extension of boundary data into the half-space.
//!
//! `u(·,t) = P_t * f` is evaluated level by level on a geometric height
//! ladder: `û(ξ,t) = E(ξ,t) f̂(ξ)`, with gradients by the exact multipliers
//! `iξ_j E` and `ΛE`. Half-space functionals that only need a nonnegative
//! density per (node, level) consume a [`LevelEnergy`], which is built one
//! level at a time so the full gradient field never has to be stored.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

// Unused when std is linked: its inherent float methods take precedence.
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use crate::fft::FftNd;
use crate::grid::{BoundaryGrid, SampledField};
use crate::kernels::{Channel, PoissonPropagator};
use crate::linalg::CMat;
use crate::{Error, Result, C64};

/// Geometric ladder `t_k = t_min ρ^k`, `k = 0..count`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TLadder {
    t_min: f64,
    ratio: f64,
    count: usize,
}

impl TLadder {
    pub fn new(t_min: f64, ratio: f64, count: usize) -> Result<Self> {
        if !(t_min > 0.0 && t_min.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_min = {t_min} must be positive")));
        }
        if !(ratio > 1.0 && ratio <= 2.0) {
            return Err(Error::InvalidParameter(format!("ladder ratio {ratio} must lie in (1, 2]")));
        }
        if count == 0 {
            return Err(Error::InvalidParameter("ladder needs at least one level".into()));
        }
        Ok(TLadder { t_min, ratio, count })
    }

    /// Shortest ladder from `t_min` whose top level reaches `top`.
    pub fn covering(t_min: f64, ratio: f64, top: f64) -> Result<Self> {
        let steps = if top > t_min {
            ((top / t_min).ln() / ratio.ln() - 1e-9).ceil() as usize
        } else {
            0
        };
        Self::new(t_min, ratio, steps + 1)
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn levels(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.t_min * self.ratio.powi(k as i32)).collect()
    }
}

/// Boundary datum, propagator and ladder of an extension.
#[derive(Clone, Debug)]
pub struct ExtensionRequest<'a> {
    pub f: &'a SampledField,
    pub prop: &'a PoissonPropagator,
    pub levels: Vec<f64>,
    pub with_gradient: bool,
    pub aperture: f64,
}

impl<'a> ExtensionRequest<'a> {
    pub fn new(f: &'a SampledField, prop: &'a PoissonPropagator, levels: Vec<f64>, with_gradient: bool) -> Result<Self> {
        let req = ExtensionRequest {
            f,
            prop,
            levels,
            with_gradient,
            aperture: 1.0,
        };
        req.validate()?;
        Ok(req)
    }

    pub fn with_aperture(mut self, aperture: f64) -> Result<Self> {
        self.aperture = aperture;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.f.grid() != self.prop.grid() {
            return Err(Error::ShapeMismatch("datum and propagator live on different grids".into()));
        }
        if self.f.components() != self.prop.components() {
            return Err(Error::ShapeMismatch(format!(
                "datum has {} components, system has {}",
                self.f.components(),
                self.prop.components()
            )));
        }
        if !(self.aperture > 0.0 && self.aperture.is_finite()) {
            return Err(Error::InvalidParameter(format!("aperture {} must be positive", self.aperture)));
        }
        check_ladder(&self.levels)
    }
}

fn check_ladder(levels: &[f64]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::InvalidParameter("empty height ladder".into()));
    }
    if levels[0] <= 0.0 || levels.windows(2).any(|w| !(w[1] > w[0])) || levels.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("heights must be positive and strictly increasing".into()));
    }
    Ok(())
}

/// Fourier-side view of a datum, ready to be propagated to any height.
#[derive(Clone, Debug)]
pub struct Extender<'a> {
    prop: &'a PoissonPropagator,
    spectrum: Vec<Vec<C64>>,
    fft: FftNd,
}

impl<'a> Extender<'a> {
    pub fn new(f: &SampledField, prop: &'a PoissonPropagator) -> Result<Self> {
        if f.grid() != prop.grid() || f.components() != prop.components() {
            return Err(Error::ShapeMismatch("datum does not match the propagator".into()));
        }
        let fft = FftNd::new(prop.grid().dim(), prop.grid().n());
        let spectrum = (0..f.components())
            .map(|c| {
                let mut plane = f.component(c);
                fft.forward(&mut plane);
                plane
            })
            .collect();
        Ok(Extender { prop, spectrum, fft })
    }

    pub fn grid(&self) -> &BoundaryGrid {
        self.prop.grid()
    }

    /// Channels of `u` at height `t`, each node-major with components
    /// contiguous.
    pub fn channels(&self, t: f64, channels: &[Channel]) -> Vec<Vec<C64>> {
        let m = self.spectrum.len();
        let nodes = self.grid().node_count();
        let mut planes = vec![vec![vec![C64::zero(); nodes]; m]; channels.len()];
        if m == 1 {
            for k in 0..nodes {
                let lam = self.prop.solvents()[k];
                let e = (lam * t).exp();
                let fk = self.spectrum[0][k];
                for (ch, out) in channels.iter().zip(planes.iter_mut()) {
                    let mult = match *ch {
                        Channel::Value => e,
                        Channel::Normal => lam * e,
                        Channel::Tangential(j) => {
                            if self.grid().frequency_offsets(k)[j] == -(self.grid().n() as i64 / 2) {
                                C64::zero()
                            } else {
                                e * C64::new(0.0, self.grid().frequency(k)[j])
                            }
                        }
                    };
                    out[0][k] = mult * fk;
                }
            }
        } else {
            let mut fk = vec![C64::zero(); m];
            let mut out = vec![C64::zero(); m];
            for k in 0..nodes {
                let e = self.prop.propagator(k, t);
                for (c, v) in fk.iter_mut().enumerate() {
                    *v = self.spectrum[c][k];
                }
                for (ch, plane) in channels.iter().zip(planes.iter_mut()) {
                    let mult: CMat = self.prop.channel_multiplier(k, e.clone(), *ch);
                    mult.mat_vec(&fk, &mut out);
                    for (c, v) in out.iter().enumerate() {
                        plane[c][k] = *v;
                    }
                }
            }
        }
        planes
            .into_iter()
            .map(|comps| {
                let comps: Vec<Vec<C64>> = comps
                    .into_iter()
                    .map(|mut p| {
                        self.fft.inverse(&mut p);
                        p
                    })
                    .collect();
                let mut flat = Vec::with_capacity(nodes * m);
                for k in 0..nodes {
                    for c in &comps {
                        flat.push(c[k]);
                    }
                }
                flat
            })
            .collect()
    }

    /// `weight · Σ_channels Σ_β |∂u_β|²` per node at height `t`.
    pub fn energy(&self, t: f64, weight: f64, channels: &[Channel]) -> Vec<f64> {
        let m = self.spectrum.len();
        let mut acc = vec![0.0; self.grid().node_count()];
        for plane in self.channels(t, channels) {
            for (a, chunk) in acc.iter_mut().zip(plane.chunks_exact(m)) {
                *a += weight * chunk.iter().map(|z| z.norm_sqr()).sum::<f64>();
            }
        }
        acc
    }
}

/// `u` (and optionally `∇u`) on grid × ladder. Values are level-major;
/// gradient channels `∂_1 … ∂_d, ∂_t` are stored per level in that order.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfSpaceField {
    grid: BoundaryGrid,
    components: usize,
    levels: Vec<f64>,
    values: Vec<C64>,
    gradient: Option<Vec<C64>>,
}

impl HalfSpaceField {
    pub fn new(
        grid: BoundaryGrid,
        components: usize,
        levels: Vec<f64>,
        values: Vec<C64>,
        gradient: Option<Vec<C64>>,
    ) -> Result<Self> {
        check_ladder(&levels)?;
        let size = grid.node_count() * components * levels.len();
        if components == 0 || values.len() != size {
            return Err(Error::ShapeMismatch("half-space values do not cover grid × ladder".into()));
        }
        if let Some(g) = &gradient {
            if g.len() != size * (grid.dim() + 1) {
                return Err(Error::ShapeMismatch("gradient channels do not match the values".into()));
            }
        }
        let finite = |z: &C64| z.re.is_finite() && z.im.is_finite();
        if !values.iter().all(finite) || !gradient.iter().flatten().all(finite) {
            return Err(Error::NonFinite);
        }
        Ok(HalfSpaceField {
            grid,
            components,
            levels,
            values,
            gradient,
        })
    }

    pub fn grid(&self) -> &BoundaryGrid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn gradient(&self) -> Option<&[C64]> {
        self.gradient.as_deref()
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    fn plane(&self) -> usize {
        self.grid.node_count() * self.components
    }

    pub fn value(&self, node: usize, level: usize, comp: usize) -> C64 {
        self.values[level * self.plane() + node * self.components + comp]
    }

    pub fn level_values(&self, level: usize) -> &[C64] {
        &self.values[level * self.plane()..(level + 1) * self.plane()]
    }

    /// `u(·, t_level)` as a boundary field.
    pub fn level_field(&self, level: usize) -> SampledField {
        SampledField::new(self.grid, self.components, self.level_values(level).to_vec())
            .expect("level slice matches the grid")
    }

    /// One gradient channel at one level, node-major.
    pub fn gradient_channel(&self, level: usize, channel: usize) -> Result<&[C64]> {
        let g = self.gradient.as_ref().ok_or(Error::MissingGradient)?;
        let p = self.plane();
        let start = (level * (self.grid.dim() + 1) + channel) * p;
        Ok(&g[start..start + p])
    }

    /// `|∇u(x', t)|²` summed over channels and components.
    pub fn gradient_norm_sqr(&self, node: usize, level: usize) -> Result<f64> {
        let m = self.components;
        let mut acc = 0.0;
        for ch in 0..=self.grid.dim() {
            let plane = self.gradient_channel(level, ch)?;
            acc += plane[node * m..(node + 1) * m].iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        Ok(acc)
    }
}

/// Computes `u` and, on request, its gradient channels on the ladder.
pub fn extend(req: &ExtensionRequest) -> Result<HalfSpaceField> {
    req.validate()?;
    extend_at(req, &req.levels, &req.levels)
}

fn extend_at(req: &ExtensionRequest, labels: &[f64], heights: &[f64]) -> Result<HalfSpaceField> {
    let ext = Extender::new(req.f, req.prop)?;
    let d = req.f.grid().dim();
    let mut channels = vec![Channel::Value];
    if req.with_gradient {
        channels.extend(Channel::gradient(d));
    }
    let mut values = Vec::new();
    let mut gradient = if req.with_gradient { Some(Vec::new()) } else { None };
    for &t in heights {
        let mut planes = ext.channels(t, &channels).into_iter();
        values.extend(planes.next().expect("value channel"));
        if let Some(g) = gradient.as_mut() {
            for p in planes {
                g.extend(p);
            }
        }
    }
    HalfSpaceField::new(*req.f.grid(), req.f.components(), labels.to_vec(), values, gradient)
}

/// `u_ε(x', t) = u(x', t + ε)` on the same ladder, by re-extension.
pub fn vertical_shift(req: &ExtensionRequest, eps: f64) -> Result<HalfSpaceField> {
    req.validate()?;
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("shift {eps} must be nonnegative")));
    }
    let heights: Vec<f64> = req.levels.iter().map(|t| t + eps).collect();
    extend_at(req, &req.levels, &heights)
}

/// Nonnegative density `ψ(x', t_k)` on grid × ladder, integrated by the
/// half-space functionals against `dx' dt/t`. For Carleson norms of `u` it
/// holds `t²|∇u|²`; for a tent-space function `F` it holds `|F|²`.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelEnergy {
    grid: BoundaryGrid,
    levels: Vec<f64>,
    density: Vec<f64>,
}

impl LevelEnergy {
    pub fn new(grid: BoundaryGrid, levels: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        check_ladder(&levels)?;
        if density.len() != levels.len() * grid.node_count() {
            return Err(Error::ShapeMismatch("density does not cover grid × ladder".into()));
        }
        if density.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::NonFinite);
        }
        Ok(LevelEnergy { grid, levels, density })
    }

    /// `t²|∂u|²` over the given channels of `u(·, t + shift)`, streamed one
    /// level at a time.
    pub fn from_datum(
        f: &SampledField,
        prop: &PoissonPropagator,
        levels: &[f64],
        shift: f64,
        channels: &[Channel],
    ) -> Result<Self> {
        check_ladder(levels)?;
        let ext = Extender::new(f, prop)?;
        let mut density = Vec::with_capacity(levels.len() * f.grid().node_count());
        for &t in levels {
            density.extend(ext.energy(t + shift, t * t, channels));
        }
        Self::new(*f.grid(), levels.to_vec(), density)
    }

    /// `t²|∇u|²` (all gradient channels) from a stored extension.
    pub fn from_field(u: &HalfSpaceField) -> Result<Self> {
        let nodes = u.grid().node_count();
        let mut density = Vec::with_capacity(nodes * u.levels().len());
        for (l, &t) in u.levels().iter().enumerate() {
            for node in 0..nodes {
                density.push(t * t * u.gradient_norm_sqr(node, l)?);
            }
        }
        Self::new(*u.grid(), u.levels().to_vec(), density)
    }

    /// `|F|²` for a scalar channel `F` given level by level.
    pub fn from_channel(grid: BoundaryGrid, levels: Vec<f64>, values: &[C64], components: usize) -> Result<Self> {
        if components == 0 || values.len() != levels.len() * grid.node_count() * components {
            return Err(Error::ShapeMismatch("channel does not cover grid × ladder".into()));
        }
        let density = values
            .chunks_exact(components)
            .map(|c| c.iter().map(|z| z.norm_sqr()).sum())
            .collect();
        Self::new(grid, levels, density)
    }

    pub fn grid(&self) -> &BoundaryGrid {
        &self.grid
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn level(&self, k: usize) -> &[f64] {
        let n = self.grid.node_count();
        &self.density[k * n..(k + 1) * n]
    }

    pub fn scaled(&self, s: f64) -> Self {
        LevelEnergy {
            density: self.density.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }
}

/// `sup t|∇u|` over grid × ladder, from a `t²|∇u|²` density.
pub fn bloch_constant(energy: &LevelEnergy) -> f64 {
    energy.density().iter().fold(0.0f64, |a, &v| a.max(v)).sqrt()
}

/// Boundary trace `u(·, t_min)` and a convergence diagnostic.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceReport {
    pub trace: SampledField,
    /// Per node: largest `|u(y', t) - u(x', t_min)|` over sampled cone
    /// points with `t ≤ 8 t_min`.
    pub residual: Vec<f64>,
}

impl TraceReport {
    pub fn sup_residual(&self) -> f64 {
        self.residual.iter().fold(0.0, |a, &b| a.max(b))
    }
}

/// Points sampled per level inside the cone.
const CONE_SAMPLES: usize = 32;

/// Lattice offsets `y'` with `|y'| < κ t`, nearest first. Beyond `limit`
/// points an evenly spaced subset by radius is kept, so the cone edge is
/// still sampled.
pub fn cone_offsets(grid: &BoundaryGrid, radius: f64, limit: usize) -> Vec<[i64; 2]> {
    let h = grid.h();
    let reach = (radius / h).ceil() as i64;
    let d = grid.dim();
    let half = grid.n() as i64 / 2;
    let reach = reach.min(half - 1);
    let mut out = Vec::new();
    let span = |d: usize| if d == 2 { -reach..=reach } else { 0..=0 };
    for a in -reach..=reach {
        for b in span(d) {
            let r = (a as f64).hypot(b as f64) * h;
            if r < radius {
                out.push((r, [a, b]));
            }
        }
    }
    out.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    if out.len() > limit && limit > 1 {
        let last = out.len() - 1;
        out = (0..limit).map(|i| out[i * last / (limit - 1)]).collect();
    } else {
        out.truncate(limit);
    }
    out.into_iter().map(|(_, o)| o).collect()
}

/// Trace at the lowest level with the cone diagnostic of aperture `κ`.
pub fn nontangential_trace(u: &HalfSpaceField, aperture: f64) -> Result<TraceReport> {
    if !(aperture > 0.0) {
        return Err(Error::InvalidParameter(format!("aperture {aperture} must be positive")));
    }
    let grid = *u.grid();
    let t_min = u.levels()[0];
    let required = 4.0 * grid.h();
    if t_min > required {
        return Err(Error::LadderTooCoarse { t_min, required });
    }
    let m = u.components();
    let trace = u.level_field(0);
    let mut residual = vec![0.0; grid.node_count()];
    for (l, &t) in u.levels().iter().enumerate() {
        if t > 8.0 * t_min {
            break;
        }
        let mut offsets = cone_offsets(&grid, aperture * t, CONE_SAMPLES);
        if offsets.is_empty() {
            offsets.push([0, 0]);
        }
        for (node, r) in residual.iter_mut().enumerate() {
            let base = trace.node_values(node);
            for &o in &offsets {
                let y = grid.shifted(node, o);
                let dist: f64 = (0..m)
                    .map(|c| (u.value(y, l, c) - base[c]).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                *r = r.max(dist);
            }
        }
    }
    Ok(TraceReport { trace, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{generate, Generator};
    use crate::kernels::{build_propagator, named_system, SystemSpec};

    fn setup(spec: SystemSpec, n: usize) -> (BoundaryGrid, PoissonPropagator) {
        let grid = BoundaryGrid::new(1, n, 1.0 / 16.0).unwrap();
        let sys = named_system(&spec, 2).unwrap();
        let prop = build_propagator(&sys, &grid, &[]).unwrap();
        (grid, prop)
    }

    #[test]
    fn ladder_covering() {
        let l = TLadder::covering(0.25, 2.0, 4.0).unwrap();
        assert_eq!(l.levels(), vec![0.25, 0.5, 1.0, 2.0, 4.0]);
        assert!(TLadder::new(1.0, 2.5, 3).is_err());
    }

    #[test]
    fn constants_are_reproduced() {
        let (grid, prop) = setup(SystemSpec::Lame { mu: 1.0, lambda: 1.0 }, 64);
        let f = generate(&Generator::Constant { value: C64::new(2.0, -1.0) }, &grid, 2, 0).unwrap();
        let req = ExtensionRequest::new(&f, &prop, vec![0.1, 0.5, 1.0], true).unwrap();
        let u = extend(&req).unwrap();
        for l in 0..3 {
            for node in 0..64 {
                assert!((u.value(node, l, 0) - C64::new(2.0, -1.0)).norm() < 1e-12);
                assert!(u.gradient_norm_sqr(node, l).unwrap() < 1e-24);
            }
        }
    }

    #[test]
    fn single_cosine_decays_exponentially() {
        let (grid, prop) = setup(SystemSpec::Laplacian, 128);
        let omega = 3.0 * core::f64::consts::PI / grid.half_extent();
        let f = SampledField::from_fn(grid, |x| C64::new((omega * x[0]).cos(), 0.0));
        let req = ExtensionRequest::new(&f, &prop, vec![0.5], true).unwrap();
        let u = extend(&req).unwrap();
        for node in 0..128 {
            let x = grid.coords(node)[0];
            let exact = (-omega * 0.5).exp() * (omega * x).cos();
            assert!((u.value(node, 0, 0).re - exact).abs() < 1e-12);
            let dt = u.gradient_channel(0, 1).unwrap()[node].re;
            assert!((dt + omega * exact).abs() < 1e-12);
        }
    }

    #[test]
    fn shift_by_zero_is_identity() {
        let (grid, prop) = setup(SystemSpec::Laplacian, 64);
        let f = generate(&Generator::Bump { radius: None }, &grid, 1, 0).unwrap();
        let req = ExtensionRequest::new(&f, &prop, vec![0.1, 0.2], false).unwrap();
        assert_eq!(vertical_shift(&req, 0.0).unwrap(), extend(&req).unwrap());
    }

    #[test]
    fn constant_trace_has_zero_residual() {
        let (grid, prop) = setup(SystemSpec::Laplacian, 64);
        let f = generate(&Generator::Constant { value: C64::new(1.0, 0.0) }, &grid, 1, 0).unwrap();
        let levels = TLadder::new(grid.h(), 1.2, 20).unwrap().levels();
        let u = extend(&ExtensionRequest::new(&f, &prop, levels, false).unwrap()).unwrap();
        let rep = nontangential_trace(&u, 1.0).unwrap();
        assert!(rep.sup_residual() < 1e-12);
        let coarse = extend(&ExtensionRequest::new(&f, &prop, vec![1.0], false).unwrap()).unwrap();
        assert!(matches!(nontangential_trace(&coarse, 1.0), Err(Error::LadderTooCoarse { .. })));
    }

    #[test]
    fn streamed_energy_matches_stored_field() {
        let (grid, prop) = setup(SystemSpec::ScalarDivA { matrix: None }, 64);
        let f = generate(&Generator::Bump { radius: None }, &grid, 1, 0).unwrap();
        let levels = vec![0.1, 0.2, 0.4];
        let u = extend(&ExtensionRequest::new(&f, &prop, levels.clone(), true).unwrap()).unwrap();
        let a = LevelEnergy::from_field(&u).unwrap();
        let b = LevelEnergy::from_datum(&f, &prop, &levels, 0.0, &Channel::gradient(1)).unwrap();
        for (x, y) in a.density().iter().zip(b.density()) {
            assert!((x - y).abs() <= 1e-14 * (1.0 + x.abs()));
        }
    }
}
