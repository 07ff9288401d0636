//! Radix-2 complex FFT for power-of-two lengths, and its row-major
//! extension to square 2-D arrays.

use alloc::vec::Vec;
use core::f64::consts::PI;

// Unused when std is linked: its inherent float methods take precedence.
#[allow(unused_imports)]
use num_traits::Float;

use crate::C64;

#[derive(Clone, Debug)]
pub struct Fft {
    n: usize,
    twiddles: Vec<C64>,
    bitrev: Vec<u32>,
}

impl Fft {
    /// Panics unless `n` is a power of two.
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two(), "FFT length must be a power of two");
        let twiddles = (0..n / 2)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / n as f64;
                C64::new(a.cos(), a.sin())
            })
            .collect();
        let bits = n.trailing_zeros();
        let bitrev = (0..n as u32)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (32 - bits) })
            .collect();
        Fft {
            n,
            twiddles,
            bitrev,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Unnormalized forward transform `X_m = Σ_k x_k e^{-2πi mk/n}`.
    pub fn forward(&self, data: &mut [C64]) {
        self.transform(data, false);
    }

    /// Inverse transform including the `1/n` factor.
    pub fn inverse(&self, data: &mut [C64]) {
        self.transform(data, true);
        let s = 1.0 / self.n as f64;
        for z in data.iter_mut() {
            *z *= s;
        }
    }

    fn transform(&self, data: &mut [C64], inverse: bool) {
        let n = self.n;
        assert_eq!(data.len(), n);
        for i in 0..n {
            let j = self.bitrev[i] as usize;
            if i < j {
                data.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            len *= 2;
        }
    }
}

/// Transform over a `n^dim` row-major array, `dim ∈ {1, 2}`.
#[derive(Clone, Debug)]
pub struct FftNd {
    dim: usize,
    plan: Fft,
}

impl FftNd {
    pub fn new(dim: usize, n: usize) -> Self {
        assert!(dim == 1 || dim == 2);
        FftNd {
            dim,
            plan: Fft::new(n),
        }
    }

    pub fn forward(&self, data: &mut [C64]) {
        self.apply(data, false);
    }

    pub fn inverse(&self, data: &mut [C64]) {
        self.apply(data, true);
    }

    fn apply(&self, data: &mut [C64], inverse: bool) {
        let n = self.plan.len();
        let run = |row: &mut [C64]| {
            if inverse {
                self.plan.inverse(row)
            } else {
                self.plan.forward(row)
            }
        };
        if self.dim == 1 {
            run(data);
            return;
        }
        assert_eq!(data.len(), n * n);
        for row in data.chunks_exact_mut(n) {
            run(row);
        }
        let mut column = alloc::vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            for i in 0..n {
                column[i] = data[i * n + j];
            }
            run(&mut column);
            for i in 0..n {
                data[i * n + j] = column[i];
            }
        }
    }
}
