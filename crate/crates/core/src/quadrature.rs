//! Quadrature helpers shared by the half-space functionals.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

// Unused when std is linked: its inherent float methods take precedence.
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Weights `w_k` such that `∫_0^upper ψ(t) dt/t ≈ Σ w_k ψ(t_k)` on an
/// increasing ladder, by trapezoid quadrature in `log t`.
///
/// The piece below `t_0` is closed with `ψ(t_0)/2`, exact when `ψ ∝ t²`
/// (the behavior of `t|∇u|²·t` near the boundary for smooth data). When
/// `upper` falls between two ladder levels the integrand is interpolated
/// linearly in `log t`. Levels above `upper` receive zero weight.
pub fn log_weights_to(levels: &[f64], upper: f64, lower_tail: bool) -> Vec<f64> {
    let mut w = vec![0.0; levels.len()];
    if levels.is_empty() || upper <= 0.0 {
        return w;
    }
    if upper <= levels[0] {
        if lower_tail {
            let r = upper / levels[0];
            w[0] = 0.5 * r * r;
        }
        return w;
    }
    if lower_tail {
        w[0] += 0.5;
    }
    let lu = upper.ln();
    for k in 0..levels.len() - 1 {
        let (a, b) = (levels[k].ln(), levels[k + 1].ln());
        if b <= lu {
            let d = b - a;
            w[k] += 0.5 * d;
            w[k + 1] += 0.5 * d;
        } else {
            if a < lu {
                let d = lu - a;
                let theta = d / (b - a);
                w[k] += 0.5 * d * (2.0 - theta);
                w[k + 1] += 0.5 * d * theta;
            }
            break;
        }
    }
    w
}

/// Trapezoid weights in `log t` over the full ladder (no tails).
pub fn log_weights(levels: &[f64]) -> Vec<f64> {
    match levels.last() {
        Some(&top) => log_weights_to(levels, top, false),
        None => Vec::new(),
    }
}

/// Least-squares slope of `log y` against `log x`. Pairs with a
/// nonpositive coordinate are skipped.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    linear_slope(&pts)
}

pub fn linear_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Adaptive Gauss–Legendre integration of a smooth function on `[a, b]`.
///
/// Panels are bisected until a 10-point rule and the sum over its two
/// halves agree to `tol` relative to the running magnitude.
pub fn adaptive_gauss(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let (nodes, weights) = gauss_legendre(10);
    let rule = |lo: f64, hi: f64| -> f64 {
        let (m, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        nodes
            .iter()
            .zip(&weights)
            .map(|(x, w)| w * f(m + r * x))
            .sum::<f64>()
            * r
    };
    let mut total = 0.0;
    let mut stack = vec![(a, b, rule(a, b), 0u32)];
    let scale = stack[0].2.abs().max(f64::MIN_POSITIVE);
    while let Some((lo, hi, coarse, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let (left, right) = (rule(lo, mid), rule(mid, hi));
        let fine = left + right;
        if (fine - coarse).abs() <= tol * scale.max(total.abs()) {
            total += fine;
        } else if depth >= 40 {
            return Err(Error::QuadratureNonconvergence(alloc::format!(
                "panel [{lo:e}, {hi:e}] did not settle"
            )));
        } else {
            stack.push((lo, mid, left, depth + 1));
            stack.push((mid, hi, right, depth + 1));
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 8, 16, 64] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            let deg = 2 * n - 1;
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((approx - exact).abs() < 1e-12, "n = {n}");
            let even: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(2 * n as i32 - 2)).sum();
            assert!((even - 2.0 / (2.0 * n as f64 - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn log_weights_integrate_power() {
        // ∫_0^1 t² dt/t = 1/2, with ψ = t², exact at the lower tail.
        let levels: Vec<f64> = (0..200).map(|k| 1e-3 * 1.05f64.powi(k)).collect();
        let w = log_weights_to(&levels, 1.0, true);
        let approx: f64 = w.iter().zip(&levels).map(|(w, t)| w * t * t).sum();
        assert!((approx - 0.5).abs() < 1e-3);
        // Interpolated upper endpoint.
        let w = log_weights_to(&levels, 0.5, true);
        let approx: f64 = w.iter().zip(&levels).map(|(w, t)| w * t * t).sum();
        assert!((approx - 0.125).abs() < 1e-3);
    }

    #[test]
    fn log_weights_full_ladder_sum_to_log_span() {
        let levels = [1.0, 2.0, 4.0, 8.0];
        let w = log_weights(&levels);
        assert!((w.iter().sum::<f64>() - 8f64.ln()).abs() < 1e-14);
        assert!((w[0] - 0.5 * 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn slope_of_power_law() {
        let x: Vec<f64> = (1..10).map(|k| k as f64).collect();
        let y: Vec<f64> = x.iter().map(|x| 3.0 * x.powf(0.7)).collect();
        assert!((loglog_slope(&x, &y) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn adaptive_gauss_handles_kinks() {
        let f = |x: f64| (x - 0.3).abs();
        let v = adaptive_gauss(&f, 0.0, 1.0, 1e-12).unwrap();
        assert!((v - (0.045 + 0.245)).abs() < 1e-10);
    }
}
