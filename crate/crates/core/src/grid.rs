//! Periodic boundary grids, sampled fields, cube families, and the
//! deterministic test-function generators.
//!
//! The boundary `ℝ^d` (`d = n - 1 ∈ {1, 2}`) is replaced by the torus
//! `[-S, S)^d` with `S = N h / 2`. Node `k` sits at `x_k = (k - N/2) h`
//! along every axis, so the origin is a node. Cube suprema only range over
//! sides `≤ S`, so no cube overlaps itself on the torus.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

// Unused when std is linked: its inherent float methods take precedence.
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryGrid {
    dim: usize,
    n: usize,
    h: f64,
}

impl BoundaryGrid {
    pub fn new(dim: usize, n: usize, h: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid spacing {h} must be positive")));
        }
        Ok(BoundaryGrid { dim, n, h })
    }

    /// Boundary dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Ambient dimension `n = d + 1`.
    pub fn ambient_dim(&self) -> usize {
        self.dim + 1
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// `S = N h / 2`; the torus is `[-S, S)^d`.
    pub fn half_extent(&self) -> f64 {
        0.5 * self.n as f64 * self.h
    }

    pub fn node_count(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Volume element `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// Largest cube level: sides run over `2^level` nodes up to `N/2`.
    pub fn max_level(&self) -> u32 {
        (self.n / 2).trailing_zeros()
    }

    pub fn multi_index(&self, node: usize) -> [usize; 2] {
        if self.dim == 1 {
            [node, 0]
        } else {
            [node / self.n, node % self.n]
        }
    }

    pub fn node(&self, idx: [usize; 2]) -> usize {
        if self.dim == 1 {
            idx[0]
        } else {
            idx[0] * self.n + idx[1]
        }
    }

    pub fn origin(&self) -> usize {
        self.node([self.n / 2, if self.dim == 2 { self.n / 2 } else { 0 }])
    }

    pub fn coords(&self, node: usize) -> [f64; 2] {
        let idx = self.multi_index(node);
        let c = |i: usize| (i as f64 - (self.n / 2) as f64) * self.h;
        if self.dim == 1 {
            [c(idx[0]), 0.0]
        } else {
            [c(idx[0]), c(idx[1])]
        }
    }

    /// `|x'|` of a node, which equals its torus distance to the origin.
    pub fn radius(&self, node: usize) -> f64 {
        let x = self.coords(node);
        x[0].hypot(x[1])
    }

    /// Node reached from `node` by a lattice offset, wrapping periodically.
    pub fn shifted(&self, node: usize, offset: [i64; 2]) -> usize {
        let idx = self.multi_index(node);
        let n = self.n as i64;
        let wrap = |i: usize, o: i64| (i as i64 + o).rem_euclid(n) as usize;
        if self.dim == 1 {
            wrap(idx[0], offset[0])
        } else {
            self.node([wrap(idx[0], offset[0]), wrap(idx[1], offset[1])])
        }
    }

    /// Minimal signed lattice offset from `a` to `b` on the torus.
    pub fn offset_between(&self, a: usize, b: usize) -> [i64; 2] {
        let (ia, ib) = (self.multi_index(a), self.multi_index(b));
        let n = self.n as i64;
        let fold = |d: i64| {
            let d = d.rem_euclid(n);
            if d >= n / 2 {
                d - n
            } else {
                d
            }
        };
        [
            fold(ib[0] as i64 - ia[0] as i64),
            fold(ib[1] as i64 - ia[1] as i64),
        ]
    }

    pub fn torus_distance(&self, a: usize, b: usize) -> f64 {
        let o = self.offset_between(a, b);
        (o[0] as f64).hypot(o[1] as f64) * self.h
    }

    /// Integer frequency offsets `m ∈ [-N/2, N/2)` of FFT index `k`.
    pub fn frequency_offsets(&self, k: usize) -> [i64; 2] {
        let n = self.n as i64;
        let fold = |i: usize| {
            let i = i as i64;
            if i < n / 2 {
                i
            } else {
                i - n
            }
        };
        let idx = self.multi_index(k);
        if self.dim == 1 {
            [fold(idx[0]), 0]
        } else {
            [fold(idx[0]), fold(idx[1])]
        }
    }

    /// Angular frequency `ξ = 2π m / (2S)` of FFT index `k`.
    pub fn frequency(&self, k: usize) -> [f64; 2] {
        let m = self.frequency_offsets(k);
        let base = PI / self.half_extent();
        [m[0] as f64 * base, m[1] as f64 * base]
    }

    /// Offsets (in nodes) of the lattice point closest to `x`.
    pub fn nearest_offset(&self, x: [f64; 2]) -> [i64; 2] {
        [(x[0] / self.h).round() as i64, (x[1] / self.h).round() as i64]
    }
}

/// `ℂ^M`-valued function on the boundary grid. Values are stored node-major
/// with the components of a node contiguous.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledField {
    grid: BoundaryGrid,
    components: usize,
    values: Vec<C64>,
}

impl SampledField {
    pub fn new(grid: BoundaryGrid, components: usize, values: Vec<C64>) -> Result<Self> {
        if components == 0 || values.len() != grid.node_count() * components {
            return Err(Error::ShapeMismatch(format!(
                "expected {} values for {} components, found {}",
                grid.node_count() * components,
                components,
                values.len()
            )));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(SampledField {
            grid,
            components,
            values,
        })
    }

    pub fn zeros(grid: BoundaryGrid, components: usize) -> Self {
        SampledField {
            grid,
            components,
            values: vec![C64::zero(); grid.node_count() * components],
        }
    }

    /// Scalar field from a function of the node coordinates.
    pub fn from_fn(grid: BoundaryGrid, f: impl Fn([f64; 2]) -> C64) -> Self {
        let values = (0..grid.node_count()).map(|k| f(grid.coords(k))).collect();
        SampledField {
            grid,
            components: 1,
            values,
        }
    }

    /// Builds a field from one array per component.
    pub fn from_components(grid: BoundaryGrid, comps: &[Vec<C64>]) -> Result<Self> {
        let m = comps.len();
        let nodes = grid.node_count();
        if m == 0 || comps.iter().any(|c| c.len() != nodes) {
            return Err(Error::ShapeMismatch("component arrays must cover the grid".into()));
        }
        let mut values = Vec::with_capacity(nodes * m);
        for k in 0..nodes {
            for c in comps {
                values.push(c[k]);
            }
        }
        Self::new(grid, m, values)
    }

    pub fn grid(&self) -> &BoundaryGrid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn value(&self, node: usize, comp: usize) -> C64 {
        self.values[node * self.components + comp]
    }

    pub fn node_values(&self, node: usize) -> &[C64] {
        &self.values[node * self.components..(node + 1) * self.components]
    }

    pub fn component(&self, comp: usize) -> Vec<C64> {
        self.values
            .iter()
            .skip(comp)
            .step_by(self.components)
            .copied()
            .collect()
    }

    /// Repeats a scalar field into `weights.len()` components.
    pub fn embed(&self, weights: &[C64]) -> Result<Self> {
        if self.components != 1 {
            return Err(Error::ShapeMismatch("embed expects a scalar field".into()));
        }
        let values = self
            .values
            .iter()
            .flat_map(|v| weights.iter().map(move |w| v * w))
            .collect();
        Self::new(self.grid, weights.len(), values)
    }

    pub fn sub(&self, other: &SampledField) -> Result<Self> {
        self.check_same(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(SampledField {
            values,
            ..self.clone()
        })
    }

    pub fn scale(&self, s: C64) -> Self {
        SampledField {
            values: self.values.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }

    pub fn check_same(&self, other: &SampledField) -> Result<()> {
        if self.grid != other.grid || self.components != other.components {
            return Err(Error::ShapeMismatch("fields live on different grids".into()));
        }
        Ok(())
    }

    /// Grid average of every component.
    pub fn mean(&self) -> Vec<C64> {
        let mut acc = vec![C64::zero(); self.components];
        for chunk in self.values.chunks_exact(self.components) {
            for (a, v) in acc.iter_mut().zip(chunk) {
                *a += v;
            }
        }
        let inv = 1.0 / self.grid.node_count() as f64;
        acc.iter().map(|a| a * inv).collect()
    }

    /// Largest Euclidean norm of a node value.
    pub fn sup_norm(&self) -> f64 {
        self.values
            .chunks_exact(self.components)
            .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// `Σ |f| h^d` with the Euclidean norm on `ℂ^M`.
    pub fn l1_norm(&self) -> f64 {
        self.values
            .chunks_exact(self.components)
            .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .sum::<f64>()
            * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    /// `(τ_z f)(x') = f(x' + z)` for a lattice vector `z` given in nodes.
    pub fn translate(&self, z: [i64; 2]) -> Self {
        let m = self.components;
        let mut values = Vec::with_capacity(self.values.len());
        for k in 0..self.grid.node_count() {
            let src = self.grid.shifted(k, z);
            values.extend_from_slice(&self.values[src * m..(src + 1) * m]);
        }
        SampledField {
            values,
            ..self.clone()
        }
    }

    /// `(δ_λ f)(x') = f(λ x')` for `λ = 2^j`, resampled by index striding
    /// about the origin with periodic wrap.
    pub fn dilate(&self, lambda: usize) -> Result<Self> {
        if lambda == 0 || !lambda.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "dilation factor {lambda} must be a power of two"
            )));
        }
        let n = self.grid.n();
        if n / lambda < 8 {
            return Err(Error::InvalidParameter(format!(
                "dilation by {lambda} keeps fewer than 8 nodes per axis"
            )));
        }
        let m = self.components;
        let half = (n / 2) as i64;
        let map = |i: usize| ((half + lambda as i64 * (i as i64 - half)).rem_euclid(n as i64)) as usize;
        let mut values = Vec::with_capacity(self.values.len());
        for k in 0..self.grid.node_count() {
            let idx = self.grid.multi_index(k);
            let src = if self.grid.dim() == 1 {
                map(idx[0])
            } else {
                self.grid.node([map(idx[0]), map(idx[1])])
            };
            values.extend_from_slice(&self.values[src * m..(src + 1) * m]);
        }
        Ok(SampledField {
            values,
            ..self.clone()
        })
    }
}

/// Which corners a cube family admits at each level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CubeLattice {
    /// Corners on multiples of the side: the standard dyadic tiling.
    Dyadic,
    /// Every lattice node is a corner: the union of all translates of the
    /// dyadic tiling. Exactly covariant under lattice translations.
    #[default]
    Sliding,
}

/// Axis-aligned cube of `2^level` nodes per side with the given corner.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cube {
    pub level: u32,
    pub corner: [usize; 2],
}

impl Cube {
    pub fn side_nodes(&self) -> usize {
        1 << self.level
    }

    pub fn side(&self, grid: &BoundaryGrid) -> f64 {
        self.side_nodes() as f64 * grid.h()
    }

    /// Node indices covered by the cube (periodic).
    pub fn nodes<'a>(&self, grid: &'a BoundaryGrid) -> impl Iterator<Item = usize> + 'a {
        let s = self.side_nodes();
        let n = grid.n();
        let c = self.corner;
        let rows = if grid.dim() == 2 { s } else { 1 };
        (0..rows).flat_map(move |a| {
            (0..s).map(move |b| {
                if grid.dim() == 1 {
                    (c[0] + b) % n
                } else {
                    grid.node([(c[0] + a) % n, (c[1] + b) % n])
                }
            })
        })
    }

    pub fn contains(&self, grid: &BoundaryGrid, node: usize) -> bool {
        let idx = grid.multi_index(node);
        let n = grid.n();
        let s = self.side_nodes();
        let inside = |i: usize, c: usize| (i + n - c) % n < s;
        inside(idx[0], self.corner[0]) && (grid.dim() == 1 || inside(idx[1], self.corner[1]))
    }
}

/// All cubes with sides `2^ℓ h`, `ℓ ∈ levels`, on the chosen lattice.
#[derive(Clone, Debug)]
pub struct DyadicCubeFamily {
    grid: BoundaryGrid,
    levels: Vec<u32>,
    lattice: CubeLattice,
}

impl DyadicCubeFamily {
    /// Every level from single nodes up to side `S`.
    pub fn new(grid: BoundaryGrid, lattice: CubeLattice) -> Self {
        DyadicCubeFamily {
            grid,
            levels: (0..=grid.max_level()).collect(),
            lattice,
        }
    }

    pub fn with_levels(grid: BoundaryGrid, levels: Vec<u32>, lattice: CubeLattice) -> Result<Self> {
        if levels.iter().any(|&l| l > grid.max_level()) {
            return Err(Error::InvalidParameter("cube side exceeds S".into()));
        }
        Ok(DyadicCubeFamily {
            grid,
            levels,
            lattice,
        })
    }

    pub fn grid(&self) -> &BoundaryGrid {
        &self.grid
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn lattice(&self) -> CubeLattice {
        self.lattice
    }

    /// Corner stride along each axis at `level`.
    pub fn stride(&self, level: u32) -> usize {
        match self.lattice {
            CubeLattice::Dyadic => 1 << level,
            CubeLattice::Sliding => 1,
        }
    }

    pub fn cubes_at(&self, level: u32) -> impl Iterator<Item = Cube> + '_ {
        let stride = self.stride(level);
        let n = self.grid.n();
        let rows = if self.grid.dim() == 2 { n } else { 1 };
        (0..rows).step_by(stride).flat_map(move |a| {
            (0..n).step_by(stride).map(move |b| Cube {
                level,
                corner: if self.grid.dim() == 1 { [b, 0] } else { [a, b] },
            })
        })
    }

    pub fn cubes(&self) -> impl Iterator<Item = Cube> + '_ {
        self.levels.iter().flat_map(move |&l| self.cubes_at(l))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CubeStats {
    pub mean: Vec<C64>,
    pub oscillation: f64,
}

/// Mean over `Q` and the `L^p` mean oscillation `(⨍_Q |f - f_Q|^p)^{1/p}`.
pub fn cube_statistics(f: &SampledField, cube: &Cube, p: f64) -> Result<CubeStats> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("exponent p = {p} must be >= 1")));
    }
    let grid = f.grid();
    let m = f.components();
    let mut mean = vec![C64::zero(); m];
    let mut count = 0usize;
    for node in cube.nodes(grid) {
        for (a, v) in mean.iter_mut().zip(f.node_values(node)) {
            *a += v;
        }
        count += 1;
    }
    if count == 0 {
        return Err(Error::ShapeMismatch("empty cube".into()));
    }
    for a in mean.iter_mut() {
        *a /= count as f64;
    }
    let mut acc = 0.0;
    for node in cube.nodes(grid) {
        let d: f64 = f
            .node_values(node)
            .iter()
            .zip(&mean)
            .map(|(v, a)| (v - a).norm_sqr())
            .sum::<f64>()
            .sqrt();
        acc += if p == 1.0 { d } else { d.powf(p) };
    }
    acc /= count as f64;
    let oscillation = if p == 1.0 { acc } else { acc.powf(1.0 / p) };
    Ok(CubeStats { mean, oscillation })
}

/// Deterministic boundary data used across the test suite.
#[derive(Clone, Debug, PartialEq)]
pub enum Generator {
    Constant { value: C64 },
    /// `|x'|^η`, `η ∈ (0, 1)`.
    PowerEta { eta: f64 },
    /// `log|x'|`, with the origin set to `log(h/2)`.
    LogAbs,
    /// `exp(1 - 1/(1 - (|x'|/R)²))` inside `|x'| < R`; `R` defaults to `S/2`.
    Bump { radius: Option<f64> },
    /// `Σ_{k=1}^{terms} cos(2^k (π/S) x'_{k mod d} + φ_k)` with seeded phases.
    LacunaryBmo { terms: usize },
    /// Indicator of the half-space `x'_1 < 0`.
    Indicator,
}

impl Generator {
    pub const NAMES: [&'static str; 6] = [
        "constant",
        "power_eta",
        "log_abs",
        "bump",
        "lacunary_bmo",
        "indicator",
    ];

    /// Generator with default parameters.
    pub fn by_name(name: &str) -> Result<Self> {
        Ok(match name {
            "constant" => Generator::Constant {
                value: C64::new(1.0, 0.0),
            },
            "power_eta" => Generator::PowerEta { eta: 0.5 },
            "log_abs" => Generator::LogAbs,
            "bump" => Generator::Bump { radius: None },
            "lacunary_bmo" => Generator::LacunaryBmo { terms: 6 },
            "indicator" => Generator::Indicator,
            other => {
                return Err(Error::Unknown {
                    kind: "generator",
                    name: other.into(),
                })
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Generator::Constant { .. } => "constant",
            Generator::PowerEta { .. } => "power_eta",
            Generator::LogAbs => "log_abs",
            Generator::Bump { .. } => "bump",
            Generator::LacunaryBmo { .. } => "lacunary_bmo",
            Generator::Indicator => "indicator",
        }
    }

    pub fn validate(&self, grid: &BoundaryGrid) -> Result<()> {
        match *self {
            Generator::PowerEta { eta } if !(eta > 0.0 && eta < 1.0) => Err(
                Error::InvalidParameter(format!("power_eta needs η in (0,1), got {eta}")),
            ),
            Generator::Bump { radius: Some(r) } if !(r > 0.0 && r <= grid.half_extent()) => {
                Err(Error::InvalidParameter(format!("bump radius {r} must lie in (0, S]")))
            }
            Generator::LacunaryBmo { terms } if terms == 0 || (1usize << terms) >= grid.n() / 2 => {
                Err(Error::InvalidParameter(format!(
                    "lacunary_bmo with {terms} terms exceeds the grid's Nyquist limit"
                )))
            }
            Generator::Constant { value } if !(value.re.is_finite() && value.im.is_finite()) => {
                Err(Error::NonFinite)
            }
            _ => Ok(()),
        }
    }
}

/// Samples a generator on the grid. Vector-valued output repeats the scalar
/// profile with component weights `1/(β+1)`.
pub fn generate(gen: &Generator, grid: &BoundaryGrid, components: usize, seed: u64) -> Result<SampledField> {
    gen.validate(grid)?;
    if components == 0 {
        return Err(Error::InvalidParameter("at least one component".into()));
    }
    let s = grid.half_extent();
    let h = grid.h();
    let scalar = match *gen {
        Generator::Constant { value } => SampledField::from_fn(*grid, |_| value),
        Generator::PowerEta { eta } => {
            SampledField::from_fn(*grid, |x| C64::new(x[0].hypot(x[1]).powf(eta), 0.0))
        }
        Generator::LogAbs => SampledField::from_fn(*grid, |x| {
            let r = x[0].hypot(x[1]);
            C64::new(if r == 0.0 { (0.5 * h).ln() } else { r.ln() }, 0.0)
        }),
        Generator::Bump { radius } => {
            let r0 = radius.unwrap_or(0.5 * s);
            SampledField::from_fn(*grid, |x| {
                let rho = x[0].hypot(x[1]) / r0;
                C64::new(
                    if rho < 1.0 {
                        (1.0 - 1.0 / (1.0 - rho * rho)).exp()
                    } else {
                        0.0
                    },
                    0.0,
                )
            })
        }
        Generator::LacunaryBmo { terms } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let phases: Vec<f64> = (0..terms).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
            let base = PI / s;
            let d = grid.dim();
            SampledField::from_fn(*grid, |x| {
                let v: f64 = (1..=terms)
                    .map(|k| ((1u64 << k) as f64 * base * x[k % d] + phases[k - 1]).cos())
                    .sum();
                C64::new(v, 0.0)
            })
        }
        Generator::Indicator => {
            SampledField::from_fn(*grid, |x| C64::new(if x[0] < 0.0 { 1.0 } else { 0.0 }, 0.0))
        }
    };
    if components == 1 {
        return Ok(scalar);
    }
    let weights: Vec<C64> = (0..components)
        .map(|b| C64::new(1.0 / (b as f64 + 1.0), 0.0))
        .collect();
    scalar.embed(&weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn make_grid_examples() {
        let g = BoundaryGrid::new(1, 1024, 1.0 / 64.0).unwrap();
        assert_eq!(g.half_extent(), 8.0);
        let g = BoundaryGrid::new(2, 256, 1.0 / 32.0).unwrap();
        assert_eq!(g.half_extent(), 4.0);
        assert!(matches!(BoundaryGrid::new(1, 100, 0.1), Err(Error::NotPowerOfTwo(100))));
        assert!(matches!(BoundaryGrid::new(3, 64, 0.1), Err(Error::UnsupportedDimension(3))));
        assert!(BoundaryGrid::new(1, 4, 0.1).is_err());
        assert!(BoundaryGrid::new(1, 64, 0.0).is_err());
    }

    #[test]
    fn origin_is_a_node() {
        let g = BoundaryGrid::new(2, 16, 0.5).unwrap();
        assert_eq!(g.coords(g.origin()), [0.0, 0.0]);
        assert_eq!(g.radius(g.origin()), 0.0);
    }

    #[test]
    fn frequencies_cover_symmetric_band() {
        let g = BoundaryGrid::new(1, 8, 0.25).unwrap();
        let m: Vec<i64> = (0..8).map(|k| g.frequency_offsets(k)[0]).collect();
        assert_eq!(m, [0, 1, 2, 3, -4, -3, -2, -1]);
        assert!((g.frequency(1)[0] - PI).abs() < 1e-15);
    }

    #[test]
    fn constant_generator() {
        let g = BoundaryGrid::new(1, 64, 0.1).unwrap();
        let f = generate(&Generator::Constant { value: C64::new(3.0, 0.0) }, &g, 1, 0).unwrap();
        assert!(f.values().iter().all(|v| *v == C64::new(3.0, 0.0)));
    }

    #[test]
    fn generator_errors() {
        let g = BoundaryGrid::new(1, 64, 0.1).unwrap();
        assert!(Generator::by_name("nope").is_err());
        assert!(generate(&Generator::PowerEta { eta: 1.2 }, &g, 1, 0).is_err());
        assert!(generate(&Generator::PowerEta { eta: 0.0 }, &g, 1, 0).is_err());
    }

    #[test]
    fn log_abs_origin_value() {
        let g = BoundaryGrid::new(1, 64, 0.1).unwrap();
        let f = generate(&Generator::LogAbs, &g, 1, 0).unwrap();
        assert!((f.value(g.origin(), 0).re - 0.05f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn generators_are_reproducible() {
        let g = BoundaryGrid::new(2, 256, 0.1).unwrap();
        for name in Generator::NAMES {
            let gen = Generator::by_name(name).unwrap();
            let a = generate(&gen, &g, 2, 17).unwrap();
            let b = generate(&gen, &g, 2, 17).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn cube_statistics_examples() {
        let g = BoundaryGrid::new(1, 64, 0.1).unwrap();
        let c = generate(&Generator::Constant { value: C64::new(2.0, 1.0) }, &g, 1, 0).unwrap();
        let q = Cube { level: 3, corner: [5, 0] };
        assert_eq!(cube_statistics(&c, &q, 1.0).unwrap().oscillation, 0.0);
        let ind = generate(&Generator::Indicator, &g, 1, 0).unwrap();
        // Interface between nodes 31 and 32; cube [28, 36) straddles it evenly.
        let q = Cube { level: 3, corner: [28, 0] };
        let st = cube_statistics(&ind, &q, 1.0).unwrap();
        assert!((st.oscillation - 0.5).abs() < 1e-15);
        assert!((st.mean[0].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn power_eta_oscillation_matches_direct_sum() {
        // Q = [0, 1) with h = 1/64: nodes 0, h, ..., 63h.
        let g = BoundaryGrid::new(1, 1024, 1.0 / 64.0).unwrap();
        let f = generate(&Generator::PowerEta { eta: 0.5 }, &g, 1, 0).unwrap();
        let q = Cube { level: 6, corner: [512, 0] };
        let vals: Vec<f64> = (0..64).map(|k| (k as f64 / 64.0).sqrt()).collect();
        let mean = vals.iter().sum::<f64>() / 64.0;
        let osc = vals.iter().map(|v| (v - mean).abs()).sum::<f64>() / 64.0;
        let st = cube_statistics(&f, &q, 1.0).unwrap();
        assert!((st.oscillation - osc).abs() < 1e-14);
    }

    #[test]
    fn translate_and_dilate() {
        let g = BoundaryGrid::new(1, 64, 0.1).unwrap();
        let c = generate(&Generator::Constant { value: C64::new(1.0, -1.0) }, &g, 1, 0).unwrap();
        assert_eq!(c.translate([5, 0]), c);
        let f = generate(&Generator::PowerEta { eta: 0.5 }, &g, 1, 0).unwrap();
        let t = f.translate([3, 0]);
        assert_eq!(t.value(10, 0), f.value(13, 0));
        let d = f.dilate(2).unwrap();
        // (δ_2 f)(x) = f(2x): node at x = h maps to x = 2h.
        assert_eq!(d.value(33, 0), f.value(34, 0));
        assert!(f.dilate(3).is_err());
        assert!(f.dilate(16).is_err());
    }

    #[test]
    fn sliding_family_counts() {
        let g = BoundaryGrid::new(2, 16, 0.1).unwrap();
        let fam = DyadicCubeFamily::new(g, CubeLattice::Dyadic);
        assert_eq!(fam.cubes_at(2).count(), 16);
        let fam = DyadicCubeFamily::new(g, CubeLattice::Sliding);
        assert_eq!(fam.cubes_at(2).count(), 256);
        let q = Cube { level: 2, corner: [14, 15] };
        let nodes: Vec<usize> = q.nodes(&g).collect();
        assert_eq!(nodes.len(), 16);
        assert!(nodes.iter().all(|&k| q.contains(&g, k)));
    }
}
