use alloc::string::String;
use alloc::vec::Vec;

use crate::C64;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("grid size {0} is not a power of two >= 8")]
    NotPowerOfTwo(usize),
    #[error("boundary dimension {0} is not supported (expected 1 or 2)")]
    UnsupportedDimension(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("field contains non-finite values")]
    NonFinite,
    #[error("ellipticity margin {margin:e} is not positive at xi = {xi:?}, eta = {eta:?}")]
    NotElliptic {
        margin: f64,
        xi: Vec<f64>,
        eta: Vec<C64>,
    },
    #[error("found {stable} stable eigenvalues at xi = {xi:?}, expected {expected}")]
    SpectralSplit {
        xi: Vec<f64>,
        stable: usize,
        expected: usize,
    },
    #[error("stable invariant basis is ill-conditioned (cond = {condition:e}) at xi = {xi:?}")]
    IllConditioned { xi: Vec<f64>, condition: f64 },
    #[error("Schur iteration did not converge")]
    SchurNonconvergence,
    #[error("height {t} exceeds the admissible limit {limit} for this grid")]
    HeightTooLarge { t: f64, limit: f64 },
    #[error("ladder starts at {t_min}, need t_min <= {required}")]
    LadderTooCoarse { t_min: f64, required: f64 },
    #[error("half-space field has no gradient channels")]
    MissingGradient,
    #[error("quadrature did not converge: {0}")]
    QuadratureNonconvergence(String),
    #[error("quadrature fault: {0}")]
    QuadratureFault(String),
    #[error("box too small: {0}")]
    BoxTooSmall(String),
    #[error("kernel failed validation: {0}")]
    InvalidKernel(String),
}
