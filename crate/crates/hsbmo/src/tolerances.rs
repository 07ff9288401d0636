//! Pinned thresholds of the acceptance suite, each with its basis.
//!
//! Constants here are frozen; calibrated constants (the BMO/Carleson band,
//! `C_B`, `C_A`, `C_T`, the Meyers band) live in the calibration file and
//! are read through [`crate::calibration`].

// Machine precision.

/// Kernel mass against the identity matrix. The kernel is a sum of
/// `N^d` FFT outputs, each exact to a few ulps of the peak.
pub const KERNEL_NORMALIZATION: f64 = 1e-8;

/// Semigroup defect per frequency, relative. Both sides are one or two
/// scaled-and-squared exponentials of the same solvent.
pub const SEMIGROUP: f64 = 1e-10;

/// Solvent residual relative to `(1 + |ξ|²)·‖coeff‖`.
pub const SOLVENT_RESIDUAL: f64 = 1e-10;

/// Dilation defect of the kernel on the doubled grid: the two grids carry
/// identical per-frequency multipliers up to rounding in the solvent.
pub const HOMOGENEITY: f64 = 1e-6;

/// Grid mean of `t ∂_j K`, which vanishes at the zero frequency exactly.
pub const MOLECULE_MEAN: f64 = 1e-8;

// Discretization.

/// Sampled-versus-continuum harmonic kernel on `|x'| ≤ S/4`, relative to
/// the peak. The torus images contribute `O((t/S)^n)`.
pub const HARMONIC_ORACLE: f64 = 1e-4;

/// Calderón identity with 64 Gauss–Legendre nodes in `log t`.
pub const CALDERON: f64 = 1e-4;

/// Gauss–Legendre nodes for the first Calderón pass; the second doubles it.
pub const CALDERON_NODES: usize = 64;

/// Below this both Calderón passes sit at the rounding floor and
/// "halving under node doubling" is not measurable.
pub const CALDERON_ROUNDING_FLOOR: f64 = 1e-12;

/// Relative slack on the Υ_# oscillation inequality.
pub const UPSILON_SLACK: f64 = 1e-6;

// Fitted exponents.

/// Half-width of the band around `η` for the Carleson profile slope.
pub const PROFILE_SLOPE: f64 = 0.1;

/// Half-width of the band around the expected molecule annulus exponent.
pub const MOLECULE_SLOPE: f64 = 0.15;

/// Smallest fitted slope of the vertical BMO error for smooth data.
pub const VERTICAL_SLOPE_MIN: f64 = 0.9;

/// Rough data must keep this fraction of its initial vertical BMO error.
pub const VERTICAL_FLOOR: f64 = 0.5;

// Refinement and calibration.

/// Allowed relative drift of the BMO/Carleson band extremes between a grid
/// and its coarsening.
pub const BAND_REFINEMENT: f64 = 0.10;

/// Multiplicative headroom applied to observed extremes when a calibration
/// file is regenerated.
pub const CALIBRATION_MARGIN: f64 = 1.25;

// Wall clock.

/// Whole-suite budgets in seconds, by boundary dimension.
pub const SUITE_SECONDS_D1: f64 = 600.0;
pub const SUITE_SECONDS_D2: f64 = 1200.0;
