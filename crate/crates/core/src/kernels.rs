//! Poisson propagators of constant-coefficient elliptic systems.
//!
//! Fourier transforming `∂_r(a^{αβ}_{rs} ∂_s u_β) = 0` in the tangential
//! variables and substituting `û(ξ,t) = e^{tΛ(ξ)} f̂(ξ)` gives the quadratic
//! matrix equation `B₂Λ² + iB₁(ξ)Λ - B₀(ξ) = 0`. The stable solvent (all
//! eigenvalues in the open left half-plane) is read off an ordered Schur
//! form of the companion linearization; `Λ` is positively homogeneous of
//! degree one, so it is computed once per reduced lattice direction.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

// Unused when std is linked: its inherent float methods take precedence.
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use crate::fft::FftNd;
use crate::grid::{BoundaryGrid, SampledField};
use crate::linalg::{expm, hermitian_eigen, CMat, Schur};
use crate::{Error, Result, C64};

/// Number of sampled unit directions used to certify ellipticity.
pub const ELLIPTICITY_SAMPLES: usize = 10_000;

/// Largest admissible condition number of the stable Schur block.
pub const MAX_CONDITION: f64 = 1e12;

/// Coefficient tensor `a^{αβ}_{rs}` with a certified ellipticity margin.
#[derive(Clone, Debug, PartialEq)]
pub struct EllipticSystem {
    name: String,
    n: usize,
    m: usize,
    coeff: Vec<C64>,
    kappa: f64,
}

impl EllipticSystem {
    /// Validates a tensor stored as `coeff[((α·M + β)·n + r)·n + s]`.
    pub fn new(name: &str, n: usize, m: usize, coeff: Vec<C64>) -> Result<Self> {
        if n != 2 && n != 3 {
            return Err(Error::UnsupportedDimension(n.saturating_sub(1)));
        }
        if m == 0 || coeff.len() != m * m * n * n {
            return Err(Error::ShapeMismatch(format!(
                "coefficient tensor for n = {n}, M = {m} needs {} entries, found {}",
                m * m * n * n,
                coeff.len()
            )));
        }
        if coeff.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mut sys = EllipticSystem {
            name: name.into(),
            n,
            m,
            coeff,
            kappa: 0.0,
        };
        let (margin, xi, eta) = sys.sample_ellipticity()?;
        if !(margin > 0.0) {
            return Err(Error::NotElliptic { margin, xi, eta });
        }
        sys.kappa = margin;
        Ok(sys)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Ambient dimension `n`.
    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn boundary_dim(&self) -> usize {
        self.n - 1
    }

    /// System size `M`.
    pub fn components(&self) -> usize {
        self.m
    }

    /// Sampled Legendre–Hadamard margin `κ_o`.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coeff
    }

    pub fn coeff(&self, alpha: usize, beta: usize, r: usize, s: usize) -> C64 {
        self.coeff[((alpha * self.m + beta) * self.n + r) * self.n + s]
    }

    /// Frobenius norm of the tensor.
    pub fn coeff_norm(&self) -> f64 {
        self.coeff.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `A(ξ)_{αβ} = Σ_{r,s} a^{αβ}_{rs} ξ_r ξ_s` for `ξ ∈ ℝ^n`.
    pub fn symbol(&self, xi: &[f64]) -> CMat {
        CMat::from_fn(self.m, self.m, |a, b| {
            let mut acc = C64::zero();
            for r in 0..self.n {
                for s in 0..self.n {
                    acc += self.coeff(a, b, r, s) * (xi[r] * xi[s]);
                }
            }
            acc
        })
    }

    /// Minimum of `Re⟨A(ξ)η, η⟩` over sampled unit `ξ` and exact unit `η`,
    /// with a minimizing pair.
    fn sample_ellipticity(&self) -> Result<(f64, Vec<f64>, Vec<C64>)> {
        let mut best = (f64::INFINITY, Vec::new(), Vec::new());
        for xi in sphere_directions(self.n, ELLIPTICITY_SAMPLES) {
            let a = self.symbol(&xi);
            let (value, eta) = if self.m == 1 {
                (a[(0, 0)].re, vec![C64::new(1.0, 0.0)])
            } else {
                let (vals, vecs) = hermitian_eigen(&a)?;
                let (i, v) = vals
                    .iter()
                    .enumerate()
                    .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
                (v, (0..self.m).map(|r| vecs[(r, i)]).collect())
            };
            if value < best.0 {
                best = (value, xi, eta);
            }
        }
        Ok(best)
    }

    /// Coefficient blocks `(B₂, B₁(ξ), B₀(ξ))` for tangential `ξ ∈ ℝ^d`.
    pub fn pencil(&self, xi: &[f64]) -> (CMat, CMat, CMat) {
        let (m, n) = (self.m, self.n);
        let t = n - 1;
        let b2 = CMat::from_fn(m, m, |a, b| self.coeff(a, b, t, t));
        let b1 = CMat::from_fn(m, m, |a, b| {
            (0..t)
                .map(|j| (self.coeff(a, b, j, t) + self.coeff(a, b, t, j)) * xi[j])
                .sum()
        });
        let b0 = CMat::from_fn(m, m, |a, b| {
            let mut acc = C64::zero();
            for j in 0..t {
                for k in 0..t {
                    acc += self.coeff(a, b, j, k) * (xi[j] * xi[k]);
                }
            }
            acc
        });
        (b2, b1, b0)
    }

    /// `‖B₂Λ² + iB₁Λ - B₀‖_F` at tangential frequency `ξ`.
    pub fn residual(&self, xi: &[f64], lambda: &CMat) -> f64 {
        let (b2, b1, b0) = self.pencil(xi);
        let l2 = lambda.matmul(lambda);
        b2.matmul(&l2)
            .add(&b1.matmul(lambda).scale(C64::i()))
            .sub(&b0)
            .norm_fro()
    }
}

/// Quasi-uniform unit vectors in `ℝ^n`, `n ∈ {2, 3}`; antipodes are
/// omitted since the quadratic form is even.
fn sphere_directions(n: usize, count: usize) -> impl Iterator<Item = Vec<f64>> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count).map(move |k| {
        if n == 2 {
            let th = PI * k as f64 / count as f64;
            vec![th.cos(), th.sin()]
        } else {
            // Fibonacci lattice on the upper hemisphere.
            let z = 1.0 - (k as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * k as f64;
            vec![r * phi.cos(), r * phi.sin(), z]
        }
    })
}

/// Named operators with their parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum SystemSpec {
    Laplacian,
    /// Scalar `div(A∇u)` for a real `n×n` matrix, row-major.
    ScalarDivA { matrix: Option<Vec<f64>> },
    /// Lamé operator `μΔu + (λ+μ)∇ div u`.
    Lame { mu: f64, lambda: f64 },
}

impl SystemSpec {
    pub const NAMES: [&'static str; 3] = ["laplacian", "scalar_divA", "lame"];

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "laplacian" => Ok(SystemSpec::Laplacian),
            "scalar_divA" => Ok(SystemSpec::ScalarDivA { matrix: None }),
            "lame" => Ok(SystemSpec::Lame { mu: 1.0, lambda: 1.0 }),
            other => Err(Error::Unknown {
                kind: "system",
                name: other.into(),
            }),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SystemSpec::Laplacian => "laplacian",
            SystemSpec::ScalarDivA { .. } => "scalar_divA",
            SystemSpec::Lame { .. } => "lame",
        }
    }
}

/// Default anisotropic matrix for `scalar_divA`.
pub fn default_div_matrix(n: usize) -> Vec<f64> {
    match n {
        2 => vec![1.0, 0.3, 0.3, 0.8],
        _ => vec![1.0, 0.3, 0.1, 0.3, 0.8, 0.2, 0.1, 0.2, 1.2],
    }
}

/// Builds and certifies a named system in ambient dimension `n`.
pub fn named_system(spec: &SystemSpec, n: usize) -> Result<EllipticSystem> {
    if n != 2 && n != 3 {
        return Err(Error::UnsupportedDimension(n.saturating_sub(1)));
    }
    let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    match spec {
        SystemSpec::Laplacian => {
            let coeff = (0..n * n).map(|k| C64::new(delta(k / n, k % n), 0.0)).collect();
            EllipticSystem::new("laplacian", n, 1, coeff)
        }
        SystemSpec::ScalarDivA { matrix } => {
            let a = matrix.clone().unwrap_or_else(|| default_div_matrix(n));
            if a.len() != n * n {
                return Err(Error::ShapeMismatch(format!("scalar_divA needs a {n}x{n} matrix")));
            }
            let coeff = a.iter().map(|&v| C64::new(v, 0.0)).collect();
            EllipticSystem::new("scalar_divA", n, 1, coeff)
        }
        &SystemSpec::Lame { mu, lambda } => {
            if !(mu > 0.0 && 2.0 * mu + lambda > 0.0) {
                let margin = mu.min(2.0 * mu + lambda);
                let mut xi = vec![0.0; n];
                xi[0] = 1.0;
                let mut eta = vec![C64::zero(); n];
                eta[if mu <= 0.0 { 1 } else { 0 }] = C64::new(1.0, 0.0);
                return Err(Error::NotElliptic { margin, xi, eta });
            }
            let m = n;
            let mut coeff = vec![C64::zero(); m * m * n * n];
            for a in 0..m {
                for b in 0..m {
                    for r in 0..n {
                        for s in 0..n {
                            let v = mu * delta(r, s) * delta(a, b) + (lambda + mu) * delta(a, r) * delta(b, s);
                            coeff[((a * m + b) * n + r) * n + s] = C64::new(v, 0.0);
                        }
                    }
                }
            }
            EllipticSystem::new("lame", n, m, coeff)
        }
    }
}

/// Stable solvent `Λ(ξ)` with the spectral data used to certify it.
#[derive(Clone, Debug)]
pub struct Solvent {
    pub lambda: CMat,
    /// `max Re λ / |ξ|` over the spectrum of `Λ(ξ)` (negative).
    pub max_real_part: f64,
    pub condition: f64,
}

/// Stable solvent at a nonzero tangential frequency, via the ordered Schur
/// form of the companion matrix `[[0, I], [B₂⁻¹B₀, -iB₂⁻¹B₁]]`.
pub fn solvent(system: &EllipticSystem, xi: &[f64]) -> Result<Solvent> {
    let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    if xi.len() != system.boundary_dim() {
        return Err(Error::ShapeMismatch(format!(
            "frequency has {} entries, system boundary dimension is {}",
            xi.len(),
            system.boundary_dim()
        )));
    }
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::InvalidParameter("solvent needs a finite nonzero frequency".into()));
    }
    let unit: Vec<f64> = xi.iter().map(|v| v / norm).collect();
    let mut s = unit_solvent(system, &unit)?;
    s.lambda = s.lambda.scale_real(norm);
    Ok(s)
}

fn unit_solvent(system: &EllipticSystem, unit: &[f64]) -> Result<Solvent> {
    let m = system.components();
    let (b2, b1, b0) = system.pencil(unit);
    let lower = b2
        .solve(&b0)
        .zip(b2.solve(&b1.scale(C64::new(0.0, -1.0))))
        .ok_or_else(|| Error::NotElliptic {
            margin: 0.0,
            xi: unit.to_vec(),
            eta: vec![C64::zero(); m],
        })?;
    let comp = CMat::from_fn(2 * m, 2 * m, |i, j| match (i < m, j < m) {
        (true, true) => C64::zero(),
        (true, false) => {
            if j - m == i {
                C64::new(1.0, 0.0)
            } else {
                C64::zero()
            }
        }
        (false, true) => lower.0[(i - m, j)],
        (false, false) => lower.1[(i - m, j - m)],
    });
    let mut schur = Schur::new(&comp)?;
    let tol = 1e-9;
    let stable = schur.reorder(|z| z.re < -tol);
    if stable != m {
        return Err(Error::SpectralSplit {
            xi: unit.to_vec(),
            stable,
            expected: m,
        });
    }
    let u1 = schur.q.submatrix(0, 0, m, m);
    let u2 = schur.q.submatrix(m, 0, m, m);
    let condition = u1.condition_one();
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned {
            xi: unit.to_vec(),
            condition,
        });
    }
    let inv = u1.inverse().ok_or(Error::IllConditioned {
        xi: unit.to_vec(),
        condition: f64::INFINITY,
    })?;
    let lambda = u2.matmul(&inv);
    let max_real_part = schur.eigenvalues()[..m]
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Solvent {
        lambda,
        max_real_part,
        condition,
    })
}

/// Which derivative of the extension a Fourier multiplier realizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Channel {
    Value,
    /// `∂_j`, `j < d`.
    Tangential(usize),
    /// `∂_t`.
    Normal,
}

impl Channel {
    /// Gradient channels `∂_1 … ∂_d, ∂_t` of a `d`-dimensional boundary.
    pub fn gradient(d: usize) -> Vec<Channel> {
        (0..d).map(Channel::Tangential).chain([Channel::Normal]).collect()
    }
}

/// Per-frequency solvents of a system on a grid, with optional cached
/// propagators `E(ξ,t) = exp(tΛ(ξ))` at requested heights.
#[derive(Clone, Debug)]
pub struct PoissonPropagator {
    grid: BoundaryGrid,
    system: EllipticSystem,
    solvents: Vec<C64>,
    decay: f64,
    max_residual: f64,
    levels: Vec<f64>,
    cached: Vec<Vec<C64>>,
}

/// Solves for `Λ` at every grid frequency and caches `E` at `t_levels`.
pub fn build_propagator(system: &EllipticSystem, grid: &BoundaryGrid, t_levels: &[f64]) -> Result<PoissonPropagator> {
    if grid.dim() != system.boundary_dim() {
        return Err(Error::ShapeMismatch(format!(
            "grid dimension {} does not match system boundary dimension {}",
            grid.dim(),
            system.boundary_dim()
        )));
    }
    let m = system.components();
    let mm = m * m;
    let mut directions: BTreeMap<(i64, i64), (CMat, f64)> = BTreeMap::new();
    let mut solvents = vec![C64::zero(); grid.node_count() * mm];
    let base = PI / grid.half_extent();
    for k in 0..grid.node_count() {
        let off = grid.frequency_offsets(k);
        if off == [0, 0] {
            continue;
        }
        let g = gcd(off[0].unsigned_abs(), off[1].unsigned_abs()) as i64;
        let key = (off[0] / g, off[1] / g);
        if !directions.contains_key(&key) {
            let len = (key.0 as f64).hypot(key.1 as f64);
            let unit = [key.0 as f64 / len, key.1 as f64 / len];
            let s = unit_solvent(system, &unit[..grid.dim()])?;
            directions.insert(key, (s.lambda, s.max_real_part));
        }
        let scale = base * (off[0] as f64).hypot(off[1] as f64);
        let lam = &directions[&key].0;
        for (dst, src) in solvents[k * mm..(k + 1) * mm].iter_mut().zip(lam.as_slice()) {
            *dst = src * scale;
        }
    }
    let decay = directions
        .values()
        .map(|(_, re)| -re)
        .fold(f64::INFINITY, f64::min);
    let mut prop = PoissonPropagator {
        grid: *grid,
        system: system.clone(),
        solvents,
        decay: if decay.is_finite() { decay } else { 0.0 },
        max_residual: 0.0,
        levels: Vec::new(),
        cached: Vec::new(),
    };
    prop.max_residual = prop.relative_residual();
    prop.cache_levels(t_levels)?;
    Ok(prop)
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

impl PoissonPropagator {
    /// Rebuilds a propagator from stored per-frequency solvents, recomputing
    /// the certificates.
    pub fn from_solvents(system: &EllipticSystem, grid: &BoundaryGrid, solvents: Vec<C64>) -> Result<Self> {
        let mm = system.components() * system.components();
        if grid.dim() != system.boundary_dim() || solvents.len() != grid.node_count() * mm {
            return Err(Error::ShapeMismatch("stored solvents do not match the grid".into()));
        }
        if solvents.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mut prop = PoissonPropagator {
            grid: *grid,
            system: system.clone(),
            solvents,
            decay: 0.0,
            max_residual: 0.0,
            levels: Vec::new(),
            cached: Vec::new(),
        };
        let mut decay = f64::INFINITY;
        for k in 0..grid.node_count() {
            let norm = prop.frequency_norm(k);
            if norm == 0.0 {
                continue;
            }
            let schur = Schur::new(&prop.solvent(k))?;
            let re = schur
                .eigenvalues()
                .iter()
                .map(|z| z.re)
                .fold(f64::NEG_INFINITY, f64::max);
            decay = decay.min(-re / norm);
        }
        if !(decay > 0.0) {
            return Err(Error::SpectralSplit {
                xi: Vec::new(),
                stable: 0,
                expected: system.components(),
            });
        }
        prop.decay = decay;
        prop.max_residual = prop.relative_residual();
        Ok(prop)
    }

    pub fn grid(&self) -> &BoundaryGrid {
        &self.grid
    }

    pub fn system(&self) -> &EllipticSystem {
        &self.system
    }

    pub fn components(&self) -> usize {
        self.system.components()
    }

    /// Constant `c` with `Re λ ≤ -c|ξ|` over every solvent spectrum.
    pub fn decay_constant(&self) -> f64 {
        self.decay
    }

    /// Largest `‖B₂Λ² + iB₁Λ - B₀‖ / ((1+|ξ|²)‖a‖)` over the grid.
    pub fn max_residual(&self) -> f64 {
        self.max_residual
    }

    pub fn cached_levels(&self) -> &[f64] {
        &self.levels
    }

    /// All solvents, frequency-major, `M×M` row-major blocks.
    pub fn solvents(&self) -> &[C64] {
        &self.solvents
    }

    pub fn solvent(&self, k: usize) -> CMat {
        let mm = self.components() * self.components();
        CMat::from_slice(self.components(), self.components(), &self.solvents[k * mm..(k + 1) * mm])
    }

    pub fn frequency_norm(&self, k: usize) -> f64 {
        let xi = self.grid.frequency(k);
        xi[0].hypot(xi[1])
    }

    fn relative_residual(&self) -> f64 {
        let norm = self.system.coeff_norm();
        let d = self.grid.dim();
        (0..self.grid.node_count())
            .filter(|&k| self.frequency_norm(k) > 0.0)
            .map(|k| {
                let xi = self.grid.frequency(k);
                let r = self.system.residual(&xi[..d], &self.solvent(k));
                r / ((1.0 + xi[0] * xi[0] + xi[1] * xi[1]) * norm)
            })
            .fold(0.0, f64::max)
    }

    /// Caches `E(·,t)` for additional heights.
    pub fn cache_levels(&mut self, t_levels: &[f64]) -> Result<()> {
        for &t in t_levels {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidParameter(format!("height {t} must be positive")));
            }
            if self.levels.contains(&t) {
                continue;
            }
            let table = self.propagator_table(t);
            self.levels.push(t);
            self.cached.push(table);
        }
        Ok(())
    }

    fn propagator_table(&self, t: f64) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.solvents.len());
        for k in 0..self.grid.node_count() {
            out.extend_from_slice(self.compute_propagator(k, t).as_slice());
        }
        out
    }

    fn compute_propagator(&self, k: usize, t: f64) -> CMat {
        let m = self.components();
        if self.frequency_norm(k) == 0.0 {
            return CMat::identity(m);
        }
        expm(&self.solvent(k).scale_real(t))
    }

    /// `E(ξ_k, t)`, served from the cache when `t` was requested at build.
    pub fn propagator(&self, k: usize, t: f64) -> CMat {
        if let Some(i) = self.levels.iter().position(|&l| l == t) {
            let mm = self.components() * self.components();
            return CMat::from_slice(self.components(), self.components(), &self.cached[i][k * mm..(k + 1) * mm]);
        }
        self.compute_propagator(k, t)
    }

    /// Fourier multiplier of a derivative channel of the extension at
    /// height `t`: `E`, `iξ_j E` (Nyquist mode zeroed), or `ΛE`.
    pub fn multiplier(&self, k: usize, t: f64, channel: Channel) -> CMat {
        self.channel_multiplier(k, self.propagator(k, t), channel)
    }

    /// Channel multiplier at frequency `k` given `E(ξ_k, t)`.
    pub fn channel_multiplier(&self, k: usize, e: CMat, channel: Channel) -> CMat {
        match channel {
            Channel::Value => e,
            Channel::Tangential(j) => {
                let off = self.grid.frequency_offsets(k);
                if off[j] == -(self.grid.n() as i64 / 2) {
                    CMat::zeros(e.rows(), e.cols())
                } else {
                    e.scale(C64::new(0.0, self.grid.frequency(k)[j]))
                }
            }
            Channel::Normal => self.solvent(k).matmul(&e),
        }
    }

    /// Physical-space field of a channel multiplier, `M×M` components,
    /// centered so the origin sits at node `N/2`.
    pub fn kernel_channel(&self, t: f64, channel: Channel) -> Result<SampledField> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("height {t} must be positive")));
        }
        let limit = 0.25 * self.grid.half_extent();
        if t > limit {
            return Err(Error::HeightTooLarge { t, limit });
        }
        let m = self.components();
        let mm = m * m;
        let nodes = self.grid.node_count();
        let mut planes = vec![vec![C64::zero(); nodes]; mm];
        for k in 0..nodes {
            let e = self.multiplier(k, t, channel);
            for (c, plane) in planes.iter_mut().enumerate() {
                plane[k] = e.as_slice()[c];
            }
        }
        let fft = FftNd::new(self.grid.dim(), self.grid.n());
        let inv_vol = 1.0 / self.grid.cell_volume();
        let half = (self.grid.n() / 2) as i64;
        let shift = [half, if self.grid.dim() == 2 { half } else { 0 }];
        let comps: Vec<Vec<C64>> = planes
            .into_iter()
            .map(|mut plane| {
                fft.inverse(&mut plane);
                let mut centered = vec![C64::zero(); nodes];
                for (k, v) in plane.iter().enumerate() {
                    centered[self.grid.shifted(k, shift)] = v * inv_vol;
                }
                centered
            })
            .collect();
        SampledField::from_components(self.grid, &comps)
    }
}

/// Physical-space Poisson kernel `K^L(·,t)` for `t ≤ S/4`.
pub fn kernel_field(prop: &PoissonPropagator, t: f64) -> Result<SampledField> {
    prop.kernel_channel(t, Channel::Value)
}

/// Grid integral `Σ K(x',t) h^d` as an `M×M` matrix.
pub fn kernel_integral(kernel: &SampledField, m: usize) -> CMat {
    let vol = kernel.grid().cell_volume();
    let mut acc = CMat::zeros(m, m);
    for node in 0..kernel.grid().node_count() {
        for (c, v) in kernel.node_values(node).iter().enumerate() {
            acc[(c / m, c % m)] += v * vol;
        }
    }
    acc
}

fn surface_area(n: usize) -> f64 {
    if n == 2 {
        2.0 * PI
    } else {
        4.0 * PI
    }
}

/// Closed-form harmonic Poisson kernel `(2/ω_{n-1}) t (t² + |x'|²)^{-n/2}`
/// sampled pointwise.
pub fn harmonic_kernel_exact(grid: &BoundaryGrid, t: f64) -> SampledField {
    let n = grid.ambient_dim();
    let c = 2.0 / surface_area(n);
    SampledField::from_fn(*grid, |x| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        C64::new(c * t / (t * t + r2).powf(0.5 * n as f64), 0.0)
    })
}

/// Periodization of the harmonic Poisson kernel over the torus `[-S,S)^d`:
/// a closed form in one dimension, an image sum with a continuum tail
/// estimate in two.
pub fn harmonic_kernel_periodized(grid: &BoundaryGrid, t: f64) -> SampledField {
    let s = grid.half_extent();
    if grid.dim() == 1 {
        let a = PI * t / s;
        return SampledField::from_fn(*grid, |x| {
            let v = a.sinh() / (a.cosh() - (PI * x[0] / s).cos()) / (2.0 * s);
            C64::new(v, 0.0)
        });
    }
    const IMAGES: i64 = 16;
    let c = 2.0 / surface_area(3);
    let half_width = (2 * IMAGES + 1) as f64 * s;
    let tail = c * t / (4.0 * s * s) * 4.0 * 2f64.sqrt() / half_width;
    SampledField::from_fn(*grid, |x| {
        let mut acc = 0.0;
        for i in -IMAGES..=IMAGES {
            for j in -IMAGES..=IMAGES {
                let y0 = x[0] + 2.0 * s * i as f64;
                let y1 = x[1] + 2.0 * s * j as f64;
                acc += c * t / (t * t + y0 * y0 + y1 * y1).powf(1.5);
            }
        }
        C64::new(acc + tail, 0.0)
    })
}

/// Largest per-frequency relative error of `E(t₁)E(t₂)` against `E(t₁+t₂)`.
/// Frequencies where every factor has underflowed are skipped.
pub fn semigroup_error(prop: &PoissonPropagator, t1: f64, t2: f64) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..prop.grid().node_count() {
        let e1 = prop.propagator(k, t1);
        let e2 = prop.propagator(k, t2);
        let e12 = prop.propagator(k, t1 + t2);
        let prod = e1.matmul(&e2);
        let scale = e12.norm_fro().max(prod.norm_fro());
        if scale < 1e-250 {
            continue;
        }
        worst = worst.max(prod.sub(&e12).norm_fro() / scale);
    }
    worst
}

/// Homogeneity defect `max |K(x',t) - λ^{n-1} K'(λx', λt)| / max |K|`,
/// where `K'` lives on the grid dilated by `λ`: same node count, spacing
/// `λh`, so node `k` of one grid sits at `λ` times node `k` of the other and
/// the two periodic cells scale together.
pub fn homogeneity_error(prop: &PoissonPropagator, dilated: &PoissonPropagator, t: f64) -> Result<f64> {
    let (g, gd) = (prop.grid(), dilated.grid());
    let lambda = gd.h() / g.h();
    if g.dim() != gd.dim() || g.n() != gd.n() || !(lambda > 1.0) {
        return Err(Error::ShapeMismatch("second grid is not a dilation of the first".into()));
    }
    if prop.system() != dilated.system() {
        return Err(Error::ShapeMismatch("propagators use different systems".into()));
    }
    let k = kernel_field(prop, t)?;
    let kd = kernel_field(dilated, lambda * t)?;
    let factor = lambda.powi(g.ambient_dim() as i32 - 1);
    let top = k.values().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let worst = k
        .values()
        .iter()
        .zip(kd.values())
        .map(|(a, b)| (*a - *b * factor).norm())
        .fold(0.0, f64::max);
    Ok(worst / top)
}

/// Smallest `C` with `|K(x',t)| ≤ C t (t + |x'|)^{-n}` on the grid, using
/// the Frobenius norm of the `M×M` kernel value.
pub fn decay_constant_fit(kernel: &SampledField, t: f64) -> f64 {
    let grid = kernel.grid();
    let n = grid.ambient_dim() as i32;
    (0..grid.node_count())
        .map(|k| {
            let v = kernel.node_values(k).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            v * (t + grid.radius(k)).powi(n) / t
        })
        .fold(0.0, f64::max)
}

/// Second-order finite-difference residual of `L` applied to the kernel
/// columns at height `t`, with vertical step `h`. Returns the largest
/// residual entry over nodes farther than `t` from the origin, relative to
/// the largest kernel entry.
pub fn fd_pde_residual(prop: &PoissonPropagator, t: f64) -> Result<f64> {
    let grid = *prop.grid();
    let h = grid.h();
    if t <= 2.0 * h {
        return Err(Error::InvalidParameter("finite-difference residual needs t > 2h".into()));
    }
    let below = kernel_field(prop, t - h)?;
    let mid = kernel_field(prop, t)?;
    let above = kernel_field(prop, t + h)?;
    let sys = prop.system();
    let (m, n, d) = (sys.components(), sys.ambient_dim(), grid.dim());
    let mut unit = [[0i64; 2]; 2];
    unit[0][0] = 1;
    unit[1][1] = 1;
    let scale = mid.values().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let at = |f: &SampledField, node: usize, off: [i64; 2], c: usize| f.value(grid.shifted(node, off), c);
    let add = |a: [i64; 2], b: [i64; 2], s: i64| [a[0] + s * b[0], a[1] + s * b[1]];
    let mut worst = 0.0f64;
    for node in 0..grid.node_count() {
        if grid.radius(node) <= t {
            continue;
        }
        // Second derivatives of every kernel entry, indexed [r][s][entry].
        let second = |r: usize, s: usize, c: usize| -> C64 {
            let z = [0, 0];
            match (r < d, s < d) {
                (true, true) if r == s => {
                    (at(&mid, node, unit[r], c) - at(&mid, node, z, c) * 2.0 + at(&mid, node, add(z, unit[r], -1), c))
                        / (h * h)
                }
                (true, true) => {
                    let (er, es) = (unit[r], unit[s]);
                    (at(&mid, node, add(er, es, 1), c) - at(&mid, node, add(er, es, -1), c)
                        - at(&mid, node, add(add(z, er, -1), es, 1), c)
                        + at(&mid, node, add(add(z, er, -1), es, -1), c))
                        / (4.0 * h * h)
                }
                (false, false) => (above.value(node, c) - mid.value(node, c) * 2.0 + below.value(node, c)) / (h * h),
                _ => {
                    let j = if r < d { r } else { s };
                    let e = unit[j];
                    (at(&above, node, e, c) - at(&above, node, add(z, e, -1), c) - at(&below, node, e, c)
                        + at(&below, node, add(z, e, -1), c))
                        / (4.0 * h * h)
                }
            }
        };
        for a in 0..m {
            for g in 0..m {
                let mut acc = C64::zero();
                for b in 0..m {
                    for r in 0..n {
                        for s in 0..n {
                            let coef = sys.coeff(a, b, r, s);
                            if coef != C64::zero() {
                                acc += coef * second(r, s, b * m + g);
                            }
                        }
                    }
                }
                worst = worst.max(acc.norm());
            }
        }
    }
    Ok(worst / scale.max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_system_examples() {
        let lap = named_system(&SystemSpec::Laplacian, 2).unwrap();
        assert_eq!(lap.components(), 1);
        assert!((lap.kappa() - 1.0).abs() < 1e-12);
        let lame = named_system(&SystemSpec::Lame { mu: 1.0, lambda: 1.0 }, 3).unwrap();
        assert_eq!(lame.components(), 3);
        assert!((lame.kappa() - 1.0).abs() < 1e-9);
        let bad = named_system(&SystemSpec::Lame { mu: 1.0, lambda: -3.0 }, 3);
        assert!(matches!(bad, Err(Error::NotElliptic { .. })));
    }

    #[test]
    fn explicit_tensor_rejected_when_not_elliptic() {
        // a_{rs} = diag(1, -1): the wave operator.
        let coeff = vec![C64::new(1.0, 0.0), C64::zero(), C64::zero(), C64::new(-1.0, 0.0)];
        assert!(matches!(EllipticSystem::new("wave", 2, 1, coeff), Err(Error::NotElliptic { .. })));
    }

    #[test]
    fn laplacian_solvents() {
        let lap = named_system(&SystemSpec::Laplacian, 2).unwrap();
        let s = solvent(&lap, &[1.0]).unwrap();
        assert!((s.lambda[(0, 0)] + 1.0).norm() < 1e-12);
        let lap3 = named_system(&SystemSpec::Laplacian, 3).unwrap();
        let s = solvent(&lap3, &[3.0, 4.0]).unwrap();
        assert!((s.lambda[(0, 0)] + 5.0).norm() < 1e-11);
    }

    #[test]
    fn lame_solvent_residual_and_spectrum() {
        let lame = named_system(&SystemSpec::Lame { mu: 1.0, lambda: 1.0 }, 3).unwrap();
        let s = solvent(&lame, &[1.0, 0.0]).unwrap();
        assert!(lame.residual(&[1.0, 0.0], &s.lambda) < 1e-10 * lame.coeff_norm());
        let eig = Schur::new(&s.lambda).unwrap().eigenvalues();
        assert!(eig.iter().all(|z| z.re < -0.5));
    }

    #[test]
    fn laplacian_multiplier_is_exponential() {
        let lap = named_system(&SystemSpec::Laplacian, 2).unwrap();
        let grid = BoundaryGrid::new(1, 64, 0.1).unwrap();
        let prop = build_propagator(&lap, &grid, &[1.0]).unwrap();
        for k in 0..64 {
            let xi = grid.frequency(k)[0].abs();
            assert!((prop.propagator(k, 1.0)[(0, 0)] - (-xi).exp()).norm() < 1e-13);
        }
        assert_eq!(prop.propagator(0, 1.0), CMat::identity(1));
    }

    #[test]
    fn kernel_normalization_and_peak() {
        let lap = named_system(&SystemSpec::Laplacian, 2).unwrap();
        let grid = BoundaryGrid::new(1, 1024, 1.0 / 64.0).unwrap();
        let prop = build_propagator(&lap, &grid, &[]).unwrap();
        let k = kernel_field(&prop, 1.0).unwrap();
        assert!((kernel_integral(&k, 1)[(0, 0)] - 1.0).norm() < 1e-12);
        let exact = harmonic_kernel_periodized(&grid, 1.0);
        let o = grid.origin();
        assert!((k.value(o, 0) - exact.value(o, 0)).norm() < 1e-10);
        assert!(kernel_field(&prop, 3.0).is_err());
    }

    #[test]
    fn harmonic_exact_values() {
        let grid = BoundaryGrid::new(1, 64, 0.1).unwrap();
        let o = grid.origin();
        assert!((harmonic_kernel_exact(&grid, 1.0).value(o, 0).re - 1.0 / PI).abs() < 1e-15);
        assert!((harmonic_kernel_exact(&grid, 2.0).value(o, 0).re - 0.5 / PI).abs() < 1e-15);
    }

    #[test]
    fn semigroup_holds_for_lame() {
        let lame = named_system(&SystemSpec::Lame { mu: 1.0, lambda: 1.0 }, 2).unwrap();
        let grid = BoundaryGrid::new(1, 256, 1.0 / 16.0).unwrap();
        let prop = build_propagator(&lame, &grid, &[]).unwrap();
        assert!(prop.max_residual() < 1e-10);
        assert!(prop.decay_constant() > 0.0);
        assert!(semigroup_error(&prop, 0.1, 0.3) < 1e-10);
    }

    #[test]
    fn from_solvents_round_trip() {
        let sys = named_system(&SystemSpec::ScalarDivA { matrix: None }, 2).unwrap();
        let grid = BoundaryGrid::new(1, 32, 0.25).unwrap();
        let prop = build_propagator(&sys, &grid, &[]).unwrap();
        let again = PoissonPropagator::from_solvents(&sys, &grid, prop.solvents().to_vec()).unwrap();
        assert!((again.decay_constant() - prop.decay_constant()).abs() < 1e-10);
    }
}
