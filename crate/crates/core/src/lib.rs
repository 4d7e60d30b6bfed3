//! Numerical laboratory for quantitative unique continuation of the heat
//! equation `∂_t u − Δu − (k/|x|) u = 0` on a ball in ℝ³.

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod error;
pub mod family;
pub mod field;
pub mod frequency;
pub mod grid;
pub mod hardy;
pub mod interpolation;
pub mod legendre;
pub mod localization;
pub mod quadrature;
pub mod report;
pub mod spectral;
pub mod suite;

pub use error::{Error, Result};

/// Spatial dimension used at runtime.
pub const DIM: usize = 3;

/// Best Hardy constant `(n − 2)²/4`.
pub fn mu_star(n: usize) -> f64 {
    let m = n as f64 - 2.0;
    m * m / 4.0
}
