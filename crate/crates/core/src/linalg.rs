//! Small dense complex linear algebra: products, LU inverse, complex Schur
//! decomposition with eigenvalue reordering, and the matrix exponential.
//!
//! Matrices here are tiny (at most `2M x 2M` with `M <= 3`), so everything is
//! a straightforward row-major `Vec<C64>` with no blocking.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

// Unused when std is linked: its inherent float methods take precedence.
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use crate::{Error, Result, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![C64::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMat { rows, cols, data }
    }

    /// Wraps a row-major slice.
    pub fn from_slice(rows: usize, cols: usize, data: &[C64]) -> Self {
        assert_eq!(data.len(), rows * cols);
        CMat {
            rows,
            cols,
            data: data.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows);
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mat_vec(&self, v: &[C64], out: &mut [C64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.rows) {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

    pub fn add(&self, other: &CMat) -> CMat {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: C64) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> CMat {
        self.scale(C64::new(s, 0.0))
    }

    /// `self + s * other`, in place.
    pub fn axpy(&mut self, s: C64, other: &CMat) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    fn zip_with(&self, other: &CMat, f: impl Fn(C64, C64) -> C64) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        }
    }

    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> CMat {
        CMat::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    /// Solves `self * X = rhs` by LU with partial pivoting. `None` when a
    /// pivot vanishes.
    pub fn solve(&self, rhs: &CMat) -> Option<CMat> {
        assert_eq!(self.rows, self.cols);
        assert_eq!(self.rows, rhs.rows);
        let n = self.rows;
        let mut a = self.clone();
        let mut b = rhs.clone();
        let scale = a.max_abs();
        if scale == 0.0 {
            return None;
        }
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, a[(i, k)].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax <= f64::EPSILON * 1e-3 * scale {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                for j in 0..b.cols {
                    b.data.swap(k * b.cols + j, p * b.cols + j);
                }
            }
            let pivot = a[(k, k)];
            for i in k + 1..n {
                let factor = a[(i, k)] / pivot;
                if factor.is_zero() {
                    continue;
                }
                for j in k..n {
                    let v = a[(k, j)];
                    a[(i, j)] -= factor * v;
                }
                for j in 0..b.cols {
                    let v = b[(k, j)];
                    b[(i, j)] -= factor * v;
                }
            }
        }
        for j in 0..b.cols {
            for i in (0..n).rev() {
                let mut s = b[(i, j)];
                for k in i + 1..n {
                    s -= a[(i, k)] * b[(k, j)];
                }
                b[(i, j)] = s / a[(i, i)];
            }
        }
        Some(b)
    }

    pub fn inverse(&self) -> Option<CMat> {
        self.solve(&CMat::identity(self.rows))
    }

    /// One-norm condition number, infinite for singular matrices.
    pub fn condition_one(&self) -> f64 {
        match self.inverse() {
            Some(inv) => self.norm_one() * inv.norm_one(),
            None => f64::INFINITY,
        }
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Rotation `[c s; -conj(s) c]` with real `c` mapping `(a, b)` to `(r, 0)`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    let (na, nb) = (a.norm(), b.norm());
    if nb == 0.0 {
        return (1.0, C64::zero());
    }
    if na == 0.0 {
        return (0.0, C64::new(1.0, 0.0));
    }
    let r = na.hypot(nb);
    (na / r, (a / na) * b.conj() / r)
}

fn rotate_rows(m: &mut CMat, k: usize, c: f64, s: C64, cols: core::ops::Range<usize>) {
    for j in cols {
        let x = m[(k, j)];
        let y = m[(k + 1, j)];
        m[(k, j)] = x * c + s * y;
        m[(k + 1, j)] = y * c - s.conj() * x;
    }
}

/// Right-multiplies columns `k, k+1` by the adjoint rotation.
fn rotate_cols(m: &mut CMat, k: usize, c: f64, s: C64, rows: core::ops::Range<usize>) {
    for i in rows {
        let x = m[(i, k)];
        let y = m[(i, k + 1)];
        m[(i, k)] = x * c + y * s.conj();
        m[(i, k + 1)] = y * c - x * s;
    }
}

/// Complex Schur form `A = Q T Q^H` with `Q` unitary and `T` upper triangular.
#[derive(Clone, Debug)]
pub struct Schur {
    pub q: CMat,
    pub t: CMat,
}

impl Schur {
    pub fn new(a: &CMat) -> Result<Self> {
        assert_eq!(a.rows, a.cols);
        let n = a.rows;
        let (mut h, mut q) = hessenberg(a);
        if n < 2 {
            return Ok(Schur { q, t: h });
        }
        let norm = h.norm_fro().max(f64::MIN_POSITIVE);
        let mut hi = n - 1;
        let mut iter = 0usize;
        let mut total = 0usize;
        while hi > 0 {
            // Locate the active unreduced block [lo, hi].
            let mut lo = hi;
            while lo > 0 {
                let sub = h[(lo, lo - 1)].norm();
                let diag = h[(lo, lo)].norm() + h[(lo - 1, lo - 1)].norm();
                if sub <= f64::EPSILON * diag || sub <= f64::EPSILON * 1e-3 * norm {
                    h[(lo, lo - 1)] = C64::zero();
                    break;
                }
                lo -= 1;
            }
            if lo == hi {
                hi -= 1;
                iter = 0;
                continue;
            }
            iter += 1;
            total += 1;
            if total > 60 * n {
                return Err(Error::SchurNonconvergence);
            }
            let mu = if iter % 11 == 10 {
                h[(hi, hi)] + C64::new(1.5 * h[(hi, hi - 1)].norm(), 0.0)
            } else {
                wilkinson_shift(
                    h[(hi - 1, hi - 1)],
                    h[(hi - 1, hi)],
                    h[(hi, hi - 1)],
                    h[(hi, hi)],
                )
            };
            for i in lo..=hi {
                h[(i, i)] -= mu;
            }
            let mut rotations = Vec::with_capacity(hi - lo);
            for k in lo..hi {
                let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
                rotate_rows(&mut h, k, c, s, k..n);
                h[(k + 1, k)] = C64::zero();
                rotations.push((c, s));
            }
            for (k, &(c, s)) in (lo..hi).zip(&rotations) {
                rotate_cols(&mut h, k, c, s, 0..(k + 2).min(hi + 1));
                rotate_cols(&mut q, k, c, s, 0..n);
            }
            for i in lo..=hi {
                h[(i, i)] += mu;
            }
        }
        for i in 1..n {
            for j in 0..i {
                h[(i, j)] = C64::zero();
            }
        }
        Ok(Schur { q, t: h })
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        (0..self.t.rows).map(|i| self.t[(i, i)]).collect()
    }

    /// Moves every eigenvalue satisfying `select` to the leading diagonal
    /// positions, preserving the relative order inside both groups. Returns
    /// the number of selected eigenvalues.
    pub fn reorder(&mut self, select: impl Fn(C64) -> bool) -> usize {
        let n = self.t.rows;
        let mut placed = 0;
        for j in 0..n {
            if select(self.t[(j, j)]) {
                for k in (placed..j).rev() {
                    self.swap_adjacent(k);
                }
                placed += 1;
            }
        }
        placed
    }

    fn swap_adjacent(&mut self, k: usize) {
        let n = self.t.rows;
        let t11 = self.t[(k, k)];
        let t22 = self.t[(k + 1, k + 1)];
        let (c, s) = givens(self.t[(k, k + 1)], t22 - t11);
        rotate_rows(&mut self.t, k, c, s, k + 2..n);
        rotate_cols(&mut self.t, k, c, s, 0..k);
        rotate_cols(&mut self.q, k, c, s, 0..n);
        self.t[(k, k)] = t22;
        self.t[(k + 1, k + 1)] = t11;
    }
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let m1 = (a + d) * 0.5 + disc;
    let m2 = (a + d) * 0.5 - disc;
    if (m1 - d).norm() <= (m2 - d).norm() {
        m1
    } else {
        m2
    }
}

/// Householder reduction to upper Hessenberg form, returning `(H, Q)` with
/// `A = Q H Q^H`.
fn hessenberg(a: &CMat) -> (CMat, CMat) {
    let n = a.rows;
    let mut h = a.clone();
    let mut q = CMat::identity(n);
    for k in 0..n.saturating_sub(2) {
        let norm: f64 = (k + 1..n).map(|i| h[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let phase = if x0.norm() > 0.0 {
            x0 / x0.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let mut v: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        v[0] += phase * norm;
        let vnorm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // H <- (I - 2vv^H) H (I - 2vv^H), acting on indices k+1..n.
        for j in 0..n {
            let dot: C64 = v
                .iter()
                .enumerate()
                .map(|(i, vi)| vi.conj() * h[(k + 1 + i, j)])
                .sum();
            for (i, vi) in v.iter().enumerate() {
                h[(k + 1 + i, j)] -= vi * dot * 2.0;
            }
        }
        for m in [&mut h, &mut q] {
            for i in 0..n {
                let dot: C64 = v
                    .iter()
                    .enumerate()
                    .map(|(j, vj)| m[(i, k + 1 + j)] * vj)
                    .sum();
                for (j, vj) in v.iter().enumerate() {
                    m[(i, k + 1 + j)] -= dot * vj.conj() * 2.0;
                }
            }
        }
    }
    (h, q)
}

/// Eigen-decomposition of a Hermitian matrix through its Schur form:
/// returns the real eigenvalues and the unitary eigenvector matrix.
pub fn hermitian_eigen(a: &CMat) -> Result<(Vec<f64>, CMat)> {
    let herm = a.add(&a.adjoint()).scale_real(0.5);
    let schur = Schur::new(&herm)?;
    Ok((schur.eigenvalues().iter().map(|z| z.re).collect(), schur.q))
}

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA: [f64; 5] = [
    1.495585217958292e-2,
    2.539398330063230e-1,
    9.504178996162932e-1,
    2.097847961257068,
    5.371920351148152,
];

/// Matrix exponential by scaling and squaring with a diagonal Padé
/// approximant (degree 3 to 13 chosen by the one-norm).
pub fn expm(a: &CMat) -> CMat {
    let n = a.rows;
    assert_eq!(n, a.cols);
    if n == 1 {
        return CMat::from_slice(1, 1, &[a[(0, 0)].exp()]);
    }
    let norm = a.norm_one();
    let id = CMat::identity(n);
    let low: [&[f64]; 4] = [&PADE3, &PADE5, &PADE7, &PADE9];
    for (coeffs, theta) in low.iter().zip(THETA) {
        if norm <= theta {
            return pade_low(a, coeffs, &id);
        }
    }
    let squarings = if norm > THETA[4] {
        (norm / THETA[4]).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a.scale_real(0.5f64.powi(squarings));
    let mut r = pade13(&scaled, &id);
    for _ in 0..squarings {
        r = r.matmul(&r);
    }
    r
}

fn pade_low(a: &CMat, b: &[f64], id: &CMat) -> CMat {
    let a2 = a.matmul(a);
    let mut u = id.scale_real(b[1]);
    let mut v = id.scale_real(b[0]);
    let mut power = id.clone();
    for k in (2..b.len()).step_by(2) {
        power = power.matmul(&a2);
        v.axpy(C64::new(b[k], 0.0), &power);
        u.axpy(C64::new(b[k + 1], 0.0), &power);
    }
    let u = a.matmul(&u);
    finish_pade(&u, &v)
}

fn pade13(a: &CMat, id: &CMat) -> CMat {
    let b = &PADE13;
    let a2 = a.matmul(a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);
    let c = |x: f64| C64::new(x, 0.0);
    let mut inner_u = a6.scale_real(b[13]);
    inner_u.axpy(c(b[11]), &a4);
    inner_u.axpy(c(b[9]), &a2);
    let mut u = a6.matmul(&inner_u);
    u.axpy(c(b[7]), &a6);
    u.axpy(c(b[5]), &a4);
    u.axpy(c(b[3]), &a2);
    u.axpy(c(b[1]), id);
    let u = a.matmul(&u);
    let mut inner_v = a6.scale_real(b[12]);
    inner_v.axpy(c(b[10]), &a4);
    inner_v.axpy(c(b[8]), &a2);
    let mut v = a6.matmul(&inner_v);
    v.axpy(c(b[6]), &a6);
    v.axpy(c(b[4]), &a4);
    v.axpy(c(b[2]), &a2);
    v.axpy(c(b[0]), id);
    finish_pade(&u, &v)
}

fn finish_pade(u: &CMat, v: &CMat) -> CMat {
    let num = v.add(u);
    let den = v.sub(u);
    den.solve(&num)
        .expect("Padé denominator is nonsingular inside its norm bound")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMat::from_fn(n, n, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    fn reconstruct(s: &Schur) -> CMat {
        s.q.matmul(&s.t).matmul(&s.q.adjoint())
    }

    #[test]
    fn schur_reconstructs_and_is_triangular() {
        for seed in 0..20 {
            let n = 2 + (seed as usize % 5);
            let a = random(n, seed);
            let s = Schur::new(&a).unwrap();
            assert!(reconstruct(&s).sub(&a).norm_fro() < 1e-12 * a.norm_fro().max(1.0));
            let qq = s.q.adjoint().matmul(&s.q);
            assert!(qq.sub(&CMat::identity(n)).norm_fro() < 1e-12);
            for i in 1..n {
                for j in 0..i {
                    assert_eq!(s.t[(i, j)], C64::zero());
                }
            }
        }
    }

    #[test]
    fn reorder_moves_selected_eigenvalues_first() {
        for seed in 0..20 {
            let a = random(6, 100 + seed);
            let mut s = Schur::new(&a).unwrap();
            let count = s.reorder(|z| z.re < 0.0);
            let ev = s.eigenvalues();
            assert!(ev[..count].iter().all(|z| z.re < 0.0));
            assert!(ev[count..].iter().all(|z| z.re >= 0.0));
            assert!(reconstruct(&s).sub(&a).norm_fro() < 1e-11 * a.norm_fro());
        }
    }

    #[test]
    fn schur_handles_jordan_block() {
        let a = CMat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) | (1, 1) => C64::new(-1.0, 0.0),
            (0, 1) => C64::new(1.0, 0.0),
            _ => C64::zero(),
        });
        let s = Schur::new(&a).unwrap();
        for z in s.eigenvalues() {
            assert!((z + 1.0).norm() < 1e-7);
        }
    }

    #[test]
    fn expm_matches_series_and_scalar() {
        let z = C64::new(-0.3, 0.7);
        let e = expm(&CMat::from_slice(1, 1, &[z]));
        assert!((e[(0, 0)] - z.exp()).norm() < 1e-15);
        // Diagonal: exact.
        let d = CMat::from_fn(3, 3, |i, j| {
            if i == j {
                C64::new(-(i as f64) * 4.0, i as f64)
            } else {
                C64::zero()
            }
        });
        let e = expm(&d);
        for i in 0..3 {
            assert!((e[(i, i)] - d[(i, i)].exp()).norm() < 1e-13);
        }
        // Jordan block: exp([[a,1],[0,a]]) = e^a [[1,1],[0,1]].
        let a = -2.5;
        let j = CMat::from_fn(2, 2, |i, k| match (i, k) {
            (0, 0) | (1, 1) => C64::new(a, 0.0),
            (0, 1) => C64::new(1.0, 0.0),
            _ => C64::zero(),
        });
        let e = expm(&j);
        assert!((e[(0, 1)].re - a.exp()).abs() < 1e-14);
        assert!((e[(0, 0)].re - a.exp()).abs() < 1e-14);
    }

    #[test]
    fn expm_additivity_for_commuting_arguments() {
        for seed in 0..10 {
            let a = random(3, 7 + seed).scale_real(3.0);
            let e1 = expm(&a.scale_real(0.3));
            let e2 = expm(&a.scale_real(0.7));
            let e = expm(&a);
            assert!(e1.matmul(&e2).sub(&e).norm_fro() < 1e-12 * e.norm_fro());
        }
    }

    #[test]
    fn solve_inverts() {
        let a = random(4, 42);
        let inv = a.inverse().unwrap();
        assert!(a.matmul(&inv).sub(&CMat::identity(4)).norm_fro() < 1e-12);
        assert!(CMat::zeros(3, 3).inverse().is_none());
    }
}
