//! Boundary and half-space functionals: mean oscillations, BMO, Morrey–
//! Campanato and Hölder seminorms, Carleson norms and profiles.
//!
//! Cube sums are computed for every corner at once by doubling: a window
//! of side `2^ℓ` is the sum of `2^d` windows of side `2^{ℓ-1}`. This is
//! exact up to ordinary rounding of positive sums, with no prefix-sum
//! cancellation.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Add;

// Unused when std is linked: its inherent float methods take precedence.
#[allow(unused_imports)]
use num_traits::Float;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::extension::LevelEnergy;
use crate::grid::{BoundaryGrid, CubeLattice, DyadicCubeFamily, SampledField};
use crate::quadrature::log_weights_to;
use crate::{Error, Result, C64};

/// `out[c] = op` over `data[c + a]`, `a ∈ {0, half}^d`, periodic.
fn double_window_by<T: Copy>(grid: &BoundaryGrid, data: &[T], half: usize, op: impl Fn(T, T) -> T) -> Vec<T> {
    let n = grid.n();
    if grid.dim() == 1 {
        return (0..n).map(|i| op(data[i], data[(i + half) % n])).collect();
    }
    let mut rows = Vec::with_capacity(data.len());
    for i in 0..n {
        for j in 0..n {
            rows.push(op(data[i * n + j], data[i * n + (j + half) % n]));
        }
    }
    let mut out = Vec::with_capacity(data.len());
    for i in 0..n {
        let i2 = (i + half) % n;
        for j in 0..n {
            out.push(op(rows[i * n + j], rows[i2 * n + j]));
        }
    }
    out
}

fn double_window<T: Copy + Add<Output = T>>(grid: &BoundaryGrid, data: &[T], half: usize) -> Vec<T> {
    double_window_by(grid, data, half, |a, b| a + b)
}

/// Maxima over the cube of side `2^level` nodes cornered at every node.
pub fn window_max(grid: &BoundaryGrid, data: &[f64], level: u32) -> Vec<f64> {
    let mut w = data.to_vec();
    for l in 0..level {
        w = double_window_by(grid, &w, 1 << l, f64::max);
    }
    w
}

/// Sums over the cube of side `2^level` nodes cornered at every node.
pub fn window_sums<T: Copy + Add<Output = T>>(grid: &BoundaryGrid, data: &[T], level: u32) -> Vec<T> {
    let mut w = data.to_vec();
    for l in 0..level {
        w = double_window(grid, &w, 1 << l);
    }
    w
}

/// Window sums for levels `0..=max_level`.
pub fn window_pyramid<T: Copy + Add<Output = T>>(grid: &BoundaryGrid, data: &[T], max_level: u32) -> Vec<Vec<T>> {
    let mut out = vec![data.to_vec()];
    for l in 0..max_level {
        let next = double_window(grid, &out[l as usize], 1 << l);
        out.push(next);
    }
    out
}

/// Corner nodes of the family's cubes at `level`.
pub fn corner_nodes(family: &DyadicCubeFamily, level: u32) -> impl Iterator<Item = usize> + '_ {
    let grid = *family.grid();
    family.cubes_at(level).map(move |q| grid.node(q.corner))
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("exponent p = {p} must lie in [1, ∞)")));
    }
    Ok(())
}

/// `Σ_Q |v - a|` for real samples, walking the cube one contiguous row
/// segment at a time.
fn real_deviation_sum(grid: &BoundaryGrid, v: &[Vec<f64>], cube: &crate::grid::Cube, a: &[f64]) -> f64 {
    let n = grid.n();
    let s = cube.side_nodes();
    let rows = if grid.dim() == 2 { s } else { 1 };
    let sum = |lo: usize, hi: usize| -> f64 {
        if v.len() == 1 {
            v[0][lo..hi].iter().map(|x| (x - a[0]).abs()).sum()
        } else {
            (lo..hi)
                .map(|k| v.iter().zip(a).map(|(c, m)| (c[k] - m) * (c[k] - m)).sum::<f64>().sqrt())
                .sum()
        }
    };
    let mut acc = 0.0;
    for r in 0..rows {
        let (base, start) = if grid.dim() == 2 {
            (((cube.corner[0] + r) % n) * n, cube.corner[1])
        } else {
            (0, cube.corner[0])
        };
        let first = (n - start).min(s);
        acc += sum(base + start, base + start + first) + sum(base, base + s - first);
    }
    acc
}

/// Largest `L^p` mean oscillation over the family's cubes, per level.
pub fn level_oscillations(f: &SampledField, family: &DyadicCubeFamily, p: f64) -> Result<Vec<f64>> {
    check_p(p)?;
    let grid = *f.grid();
    if family.grid() != &grid {
        return Err(Error::ShapeMismatch("cube family built on another grid".into()));
    }
    let m = f.components();
    let nodes = grid.node_count();
    // Oscillations ignore constants; centering limits cancellation.
    let mean = f.mean();
    let comps: Vec<Vec<C64>> = (0..m)
        .map(|c| f.component(c).iter().map(|v| v - mean[c]).collect())
        .collect();
    let top = family.levels().iter().copied().max().unwrap_or(0);
    let sums: Vec<Vec<Vec<C64>>> = comps.iter().map(|c| window_pyramid(&grid, c, top)).collect();
    let squares = if p == 2.0 {
        let sq: Vec<f64> = (0..nodes)
            .map(|k| comps.iter().map(|c| c[k].norm_sqr()).sum())
            .collect();
        Some(window_pyramid(&grid, &sq, top))
    } else {
        None
    };
    let real: Option<Vec<Vec<f64>>> = (p == 1.0 && comps.iter().flatten().all(|z| z.im == 0.0))
        .then(|| comps.iter().map(|c| c.iter().map(|z| z.re).collect()).collect());
    let mut out = Vec::with_capacity(family.levels().len());
    for &level in family.levels() {
        let count = (1usize << level).pow(grid.dim() as u32) as f64;
        let mut best = 0.0f64;
        for corner in corner_nodes(family, level) {
            let avg: Vec<C64> = sums.iter().map(|s| s[level as usize][corner] / count).collect();
            let osc = if let Some(sq) = &squares {
                let var = sq[level as usize][corner] / count - avg.iter().map(|a| a.norm_sqr()).sum::<f64>();
                var.max(0.0).sqrt()
            } else if let Some(v) = &real {
                let cube = crate::grid::Cube {
                    level,
                    corner: grid.multi_index(corner),
                };
                let centre: Vec<f64> = avg.iter().map(|z| z.re).collect();
                real_deviation_sum(&grid, v, &cube, &centre) / count
            } else {
                let cube = crate::grid::Cube {
                    level,
                    corner: grid.multi_index(corner),
                };
                let mut acc = 0.0;
                for node in cube.nodes(&grid) {
                    let d = (0..m)
                        .map(|c| (comps[c][node] - avg[c]).norm_sqr())
                        .sum::<f64>()
                        .sqrt();
                    acc += if p == 1.0 { d } else { d.powf(p) };
                }
                let acc = acc / count;
                if p == 1.0 {
                    acc
                } else {
                    acc.powf(1.0 / p)
                }
            };
            best = best.max(osc);
        }
        out.push(best);
    }
    Ok(out)
}

/// `sup_Q (⨍_Q |f - f_Q|^p)^{1/p}` over all cubes of side `≤ S` on the
/// family's lattice.
pub fn bmo_norm(f: &SampledField, family: &DyadicCubeFamily, p: f64) -> Result<f64> {
    Ok(level_oscillations(f, family, p)?.into_iter().fold(0.0, f64::max))
}

/// BMO seminorm over the default sliding family of every level.
pub fn bmo_norm_default(f: &SampledField, p: f64) -> Result<f64> {
    bmo_norm(f, &DyadicCubeFamily::new(*f.grid(), CubeLattice::default()), p)
}

/// `r ↦ osc_p(f; r)` at dyadic radii `r = 2^ℓ h`.
#[derive(Clone, Debug, PartialEq)]
pub struct OscillationCurve {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

impl OscillationCurve {
    /// `osc(f; r)` for arbitrary `r`: the value at the largest tabulated
    /// radius `≤ r`, zero below the table.
    pub fn at(&self, r: f64) -> f64 {
        self.radii
            .iter()
            .zip(&self.values)
            .filter(|(ri, _)| **ri <= r * (1.0 + 1e-12))
            .map(|(_, v)| *v)
            .fold(0.0, f64::max)
    }

    /// Value at the first radius `≥ r_min` divided by the top value; the
    /// VMO verdict compares it with a threshold.
    pub fn small_scale_ratio(&self, r_min: f64) -> f64 {
        let top = self.values.last().copied().unwrap_or(0.0);
        if top == 0.0 {
            return 0.0;
        }
        let i = self.radii.iter().position(|&r| r >= r_min * (1.0 - 1e-12)).unwrap_or(0);
        self.values[i] / top
    }
}

/// Oscillation curve over the family's levels, made monotone by taking the
/// supremum over all sides up to each radius.
pub fn osc_curve(f: &SampledField, family: &DyadicCubeFamily, p: f64) -> Result<OscillationCurve> {
    let per_level = level_oscillations(f, family, p)?;
    let h = f.grid().h();
    let mut pairs: Vec<(f64, f64)> = family
        .levels()
        .iter()
        .zip(per_level)
        .map(|(&l, v)| ((1u64 << l) as f64 * h, v))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut running = 0.0f64;
    let (radii, values) = pairs
        .into_iter()
        .map(|(r, v)| {
            running = running.max(v);
            (r, running)
        })
        .unzip();
    Ok(OscillationCurve { radii, values })
}

/// `sup_Q ℓ(Q)^{-η} (⨍_Q |f - f_Q|^p)^{1/p}`.
pub fn morrey_campanato(f: &SampledField, family: &DyadicCubeFamily, eta: f64, p: f64) -> Result<f64> {
    check_eta(eta)?;
    let per_level = level_oscillations(f, family, p)?;
    let h = f.grid().h();
    Ok(family
        .levels()
        .iter()
        .zip(per_level)
        .map(|(&l, v)| v / ((1u64 << l) as f64 * h).powf(eta))
        .fold(0.0, f64::max))
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidParameter(format!("η = {eta} must lie in (0,1)")));
    }
    Ok(())
}

/// Which node pairs a pairwise seminorm inspects: every pair within
/// `near` lattice steps, plus `far` seeded random pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairPolicy {
    pub near: usize,
    pub far: usize,
    pub seed: u64,
}

impl Default for PairPolicy {
    fn default() -> Self {
        PairPolicy {
            near: 64,
            far: 100_000,
            seed: 0,
        }
    }
}

/// `sup |f(a) - f(b)| / Υ(|a - b|)` over the pair policy, with torus
/// distances. A zero modulus at a distance with unequal values gives `∞`.
pub fn pair_sweep(f: &SampledField, policy: &PairPolicy, modulus: impl Fn(f64) -> f64) -> f64 {
    pair_sweep_many(f, policy, &[&modulus])[0]
}

/// [`pair_sweep`] for several moduli at once; the pair differences are
/// computed a single time.
pub fn pair_sweep_many(f: &SampledField, policy: &PairPolicy, moduli: &[&dyn Fn(f64) -> f64]) -> Vec<f64> {
    let grid = *f.grid();
    let m = f.components();
    let vals = f.values();
    let real: Option<Vec<f64>> = (m == 1 && vals.iter().all(|z| z.im == 0.0)).then(|| vals.iter().map(|z| z.re).collect());
    let diff = |a: usize, b: usize| -> f64 {
        match &real {
            Some(v) => (v[a] - v[b]).abs(),
            None => (0..m)
                .map(|c| (vals[a * m + c] - vals[b * m + c]).norm_sqr())
                .sum::<f64>()
                .sqrt(),
        }
    };
    let ratio = |num: f64, den: f64| -> f64 {
        if num == 0.0 {
            0.0
        } else if den > 0.0 {
            num / den
        } else {
            f64::INFINITY
        }
    };
    let mut best = vec![0.0f64; moduli.len()];
    let reach = policy.near.min(grid.n() / 2 - 1) as i64;
    // Half of the offset disk; the other half is the same set of pairs.
    let rows = if grid.dim() == 2 { reach } else { 0 };
    let n = grid.n();
    for a in 0..=rows {
        for b in -reach..=reach {
            if (a == 0 && b <= 0) || a * a + b * b > reach * reach {
                continue;
            }
            // The modulus depends on the offset only, so the largest
            // difference along the offset settles every ratio.
            let (da, db) = if grid.dim() == 1 { (b, 0) } else { (a, b) };
            let mut worst = 0.0f64;
            let row_count = if grid.dim() == 2 { n } else { 1 };
            for i in 0..row_count {
                let (base, other) = if grid.dim() == 2 {
                    (i * n, ((i as i64 + da).rem_euclid(n as i64) as usize) * n)
                } else {
                    (0, 0)
                };
                let shift = (if grid.dim() == 2 { db } else { da }).rem_euclid(n as i64) as usize;
                for j in 0..n {
                    worst = worst.max(diff(base + j, other + (j + shift) % n));
                }
            }
            let dist = (a as f64).hypot(b as f64) * grid.h();
            for (out, modulus) in best.iter_mut().zip(moduli) {
                *out = out.max(ratio(worst, modulus(dist)));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
    let nodes = grid.node_count();
    for _ in 0..policy.far {
        let a = rng.gen_range(0..nodes);
        let b = rng.gen_range(0..nodes);
        if a == b {
            continue;
        }
        let (num, dist) = (diff(a, b), grid.torus_distance(a, b));
        for (out, modulus) in best.iter_mut().zip(moduli) {
            *out = out.max(ratio(num, modulus(dist)));
        }
    }
    best
}

/// Homogeneous Hölder seminorm `sup |f(a) - f(b)| / |a - b|^η` on the pair
/// policy.
pub fn holder_seminorm(f: &SampledField, eta: f64, policy: &PairPolicy) -> Result<f64> {
    check_eta(eta)?;
    Ok(pair_sweep(f, policy, |r| r.powf(eta)))
}

/// Hölder seminorms for several exponents from one pair sweep.
pub fn holder_seminorms(f: &SampledField, etas: &[f64], policy: &PairPolicy) -> Result<Vec<f64>> {
    for &eta in etas {
        check_eta(eta)?;
    }
    let moduli: Vec<Box<dyn Fn(f64) -> f64>> = etas
        .iter()
        .map(|&eta| Box::new(move |r: f64| r.powf(eta)) as Box<dyn Fn(f64) -> f64>)
        .collect();
    let refs: Vec<&dyn Fn(f64) -> f64> = moduli.iter().map(|b| b.as_ref()).collect();
    Ok(pair_sweep_many(f, policy, &refs))
}

/// `r ↦ sup_{ℓ(Q) ≤ r} ((1/|Q|) ∫_0^{ℓ(Q)} ∫_Q ψ dx' dt/t)^{1/2}` at
/// dyadic radii.
#[derive(Clone, Debug, PartialEq)]
pub struct CarlesonProfile {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

impl CarlesonProfile {
    /// Value at the first radius `≥ r`, or the top value.
    pub fn at(&self, r: f64) -> f64 {
        let i = self
            .radii
            .iter()
            .position(|&x| x >= r * (1.0 - 1e-12))
            .unwrap_or(self.radii.len() - 1);
        self.values[i]
    }

    pub fn top(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Least-squares slope of `log value` against `log r` for radii in
    /// `[r_lo, r_hi]`.
    pub fn slope(&self, r_lo: f64, r_hi: f64) -> f64 {
        let (x, y): (Vec<f64>, Vec<f64>) = self
            .radii
            .iter()
            .zip(&self.values)
            .filter(|(r, _)| **r >= r_lo * (1.0 - 1e-12) && **r <= r_hi * (1.0 + 1e-12))
            .map(|(r, v)| (*r, *v))
            .unzip();
        crate::quadrature::loglog_slope(&x, &y)
    }
}

/// `G_ℓ(x') = ∫_0^{2^ℓ h} ψ(x', t) dt/t` on the ladder, with the lower
/// tail closed as for `ψ ∝ t²`.
pub fn vertical_integral(energy: &LevelEnergy, level: u32) -> Vec<f64> {
    let grid = energy.grid();
    let side = (1u64 << level) as f64 * grid.h();
    let w = log_weights_to(energy.levels(), side, true);
    let mut g = vec![0.0; grid.node_count()];
    for (k, wk) in w.iter().enumerate() {
        if *wk == 0.0 {
            continue;
        }
        for (a, v) in g.iter_mut().zip(energy.level(k)) {
            *a += wk * v;
        }
    }
    g
}

/// Normalized box integral `(1/|Q|) ∫∫_{T(Q)} ψ dx' dt/t` for every cube
/// of side `2^level` nodes, indexed by corner node.
pub fn box_integrals(energy: &LevelEnergy, level: u32) -> Vec<f64> {
    let grid = energy.grid();
    let count = (1usize << level).pow(grid.dim() as u32) as f64;
    window_sums(grid, &vertical_integral(energy, level), level)
        .into_iter()
        .map(|s| s / count)
        .collect()
}

fn check_family(energy: &LevelEnergy, family: &DyadicCubeFamily) -> Result<()> {
    if family.grid() != energy.grid() {
        return Err(Error::ShapeMismatch("cube family built on another grid".into()));
    }
    Ok(())
}

/// Local Carleson profile over the family's levels.
pub fn carleson_profile(energy: &LevelEnergy, family: &DyadicCubeFamily) -> Result<CarlesonProfile> {
    check_family(energy, family)?;
    let h = energy.grid().h();
    let mut levels = family.levels().to_vec();
    levels.sort_unstable();
    let mut running = 0.0f64;
    let mut radii = Vec::with_capacity(levels.len());
    let mut values = Vec::with_capacity(levels.len());
    for level in levels {
        let boxes = box_integrals(energy, level);
        let best = corner_nodes(family, level).map(|c| boxes[c]).fold(0.0, f64::max);
        running = running.max(best.sqrt());
        radii.push((1u64 << level) as f64 * h);
        values.push(running);
    }
    Ok(CarlesonProfile { radii, values })
}

/// `‖u‖_**` from a `t²|∇u|²` density.
pub fn carleson_norm(energy: &LevelEnergy, family: &DyadicCubeFamily) -> Result<f64> {
    Ok(carleson_profile(energy, family)?.top())
}

/// `sup_Q ℓ(Q)^{-η} (⨍_Q (∫_0^{ℓ(Q)} ψ dt/t)^{q/2} dx')^{1/q}`.
pub fn fractional_carleson(energy: &LevelEnergy, family: &DyadicCubeFamily, eta: f64, q: f64) -> Result<f64> {
    check_family(energy, family)?;
    check_eta(eta)?;
    check_p(q)?;
    let grid = energy.grid();
    let mut best = 0.0f64;
    for &level in family.levels() {
        let side = (1u64 << level) as f64 * grid.h();
        let count = (1usize << level).pow(grid.dim() as u32) as f64;
        let g: Vec<f64> = vertical_integral(energy, level)
            .into_iter()
            .map(|v| v.powf(0.5 * q))
            .collect();
        let sums = window_sums(grid, &g, level);
        let top = corner_nodes(family, level).map(|c| sums[c]).fold(0.0, f64::max);
        best = best.max((top / count).powf(1.0 / q) / side.powf(eta));
    }
    Ok(best)
}

/// Outcome of a threshold test on a small-to-large scale ratio.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Vanishing,
    NotVanishing,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Vanishing => "vanishing",
            Verdict::NotVanishing => "not_vanishing",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    pub vanishing: f64,
    pub non_vanishing: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            vanishing: 0.1,
            non_vanishing: 0.5,
        }
    }
}

impl Thresholds {
    pub fn classify(&self, ratio: f64) -> Verdict {
        if ratio <= self.vanishing {
            Verdict::Vanishing
        } else if ratio >= self.non_vanishing {
            Verdict::NotVanishing
        } else {
            Verdict::Inconclusive
        }
    }

    /// Verdict on `small / large`; a vanishing large-scale value is read as
    /// vanishing.
    pub fn classify_pair(&self, small: f64, large: f64) -> Verdict {
        if large == 0.0 {
            Verdict::Vanishing
        } else {
            self.classify(small / large)
        }
    }
}

/// Vanishing-Carleson verdict: `profile(r_min)` against `profile(r_max)`.
pub fn vanishing_carleson_test(
    energy: &LevelEnergy,
    family: &DyadicCubeFamily,
    thresholds: &Thresholds,
    r_min: f64,
) -> Result<(Verdict, CarlesonProfile)> {
    let profile = carleson_profile(energy, family)?;
    let verdict = thresholds.classify_pair(profile.at(r_min), profile.top());
    Ok((verdict, profile))
}

/// `∫_1^{S/r} osc(f; λr) dλ / λ^{1+ε}`, integrated exactly for the step
/// function given by the curve.
pub fn oscillation_tail(curve: &OscillationCurve, r: f64, eps: f64, half_extent: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("ε = {eps} must lie in (0,1]")));
    }
    if !(r > 0.0) || r > half_extent {
        return Err(Error::InvalidParameter(format!("radius {r} must lie in (0, S]")));
    }
    let top = half_extent / r;
    // Breakpoints in λ where the step function changes.
    let mut cuts: Vec<f64> = curve
        .radii
        .iter()
        .map(|&ri| ri / r)
        .filter(|&l| l > 1.0 && l < top)
        .collect();
    cuts.insert(0, 1.0);
    cuts.push(top);
    let antiderivative = |l: f64| -l.powf(-eps) / eps;
    let mut total = 0.0;
    for w in cuts.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let v = curve.at(w[0] * r);
        total += v * (antiderivative(w[1]) - antiderivative(w[0]));
    }
    Ok(total)
}
