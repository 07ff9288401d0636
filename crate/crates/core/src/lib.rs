//! Poisson propagators for constant-coefficient strongly elliptic systems in
//! the upper half-space, realized on a periodic boundary grid, together with
//! the boundary and half-space functionals used to study their Dirichlet
//! problem with BMO data: mean oscillations, Morrey–Campanato and Hölder
//! seminorms, Carleson norms, area functions and square functions.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, reports and
//! the command-line driver live in the companion `hsbmo` crate.
//!
//! Module map:
//!
//! * [`grid`]: periodic boundary grids, sampled fields, cube families and
//!   deterministic test-function generators.
//! * [`kernels`]: elliptic systems, the stable solvent of the Fourier-side
//!   quadratic matrix equation, and the Poisson propagator `exp(tΛ(ξ))`.
//! * [`extension`]: the Poisson extension `u = P_t * f`, its exact gradient
//!   channels, vertical shifts and nontangential traces.
//! * [`seminorms`]: BMO, oscillation curves, Morrey–Campanato and Hölder
//!   seminorms, Carleson norms and profiles.
//! * [`squarefun`]: area function, Carleson operator, tent duality, Θ square
//!   functions, atoms, molecules and the Calderón reproducing identity.
//! * [`approx`]: the Υ_# modulus, the Ψ integral bound, and the three VMO
//!   tests (vertical approximation, mollifiers, translations).
#![no_std]

extern crate alloc;

pub mod approx;
mod error;
pub mod extension;
pub mod fft;
pub mod grid;
pub mod kernels;
pub mod linalg;
pub mod quadrature;
pub mod seminorms;
pub mod squarefun;

pub use error::{Error, Result};

/// Complex scalar used for every field value and matrix entry.
pub type C64 = num_complex::Complex64;
