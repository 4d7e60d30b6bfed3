//! Radial grid for the ball `B_R(0)` and the backward Gaussian weight.

use serde::Serialize;

use crate::error::{config, Error, Result};
use crate::DIM;

/// A point of ℝ³.
pub type Point = [f64; 3];

pub const MIN_NODES: usize = 16;

pub fn norm2(p: Point) -> f64 {
    p[0] * p[0] + p[1] * p[1] + p[2] * p[2]
}

pub fn dist2(a: Point, b: Point) -> f64 {
    norm2([a[0] - b[0], a[1] - b[1], a[2] - b[2]])
}

/// Returns the z coordinate of a point lying on the symmetry axis.
///
/// All fields are azimuthally symmetric about the z-axis, so weight and ball
/// centers must sit on it for the two-dimensional quadratures to be exact.
pub fn axial_offset(p: Point) -> Result<f64> {
    let scale = norm2(p).sqrt().max(1.0);
    if p[0].abs() > 1e-14 * scale || p[1].abs() > 1e-14 * scale {
        return Err(Error::Geometry(format!(
            "center ({}, {}, {}) is off the symmetry axis",
            p[0], p[1], p[2]
        )));
    }
    Ok(p[2])
}

/// Uniform grid `r_i = i·h`, `i = 1..=n`, `h = R/(n+1)` on `(0, R)`.
///
/// The endpoints `0` and `R` are not nodes; profiles `w = r·u` vanish there.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialGrid {
    radius: f64,
    n: usize,
    h: f64,
    #[serde(skip)]
    nodes: Vec<f64>,
}

impl RadialGrid {
    pub fn new(radius: f64, n: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return config(format!("grid radius must be positive, got {radius}"));
        }
        if n < MIN_NODES {
            return config(format!("grid needs at least {MIN_NODES} interior nodes, got {n}"));
        }
        Ok(Self::uniform(radius, n))
    }

    pub(crate) fn uniform(radius: f64, n: usize) -> Self {
        let h = radius / (n + 1) as f64;
        let nodes = (1..=n).map(|i| i as f64 * h).collect();
        Self { radius, n, h, nodes }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
}

/// `G_λ(x, t) = (T − t + λ)^{−n/2} exp(−|x − x₀|² / 4(T − t + λ))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatWeight {
    pub lambda: f64,
    pub center: Point,
    pub terminal: f64,
}

impl HeatWeight {
    pub fn new(lambda: f64, center: Point, terminal: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return config(format!("weight parameter lambda must be positive, got {lambda}"));
        }
        if !(terminal > 0.0 && terminal <= 1.0) {
            return config(format!("terminal time must lie in (0, 1], got {terminal}"));
        }
        Ok(Self { lambda, center, terminal })
    }

    /// `T − t + λ`.
    pub fn scale(&self, t: f64) -> f64 {
        self.terminal - t + self.lambda
    }

    pub fn eval(&self, x: Point, t: f64) -> Result<f64> {
        if !(0.0..=self.terminal).contains(&t) {
            return config(format!("weight evaluated at t = {t} outside [0, {}]", self.terminal));
        }
        Ok(self.eval_dist2(dist2(x, self.center), t))
    }

    /// Evaluation from the squared distance to the center, no range checks.
    #[inline]
    pub fn eval_dist2(&self, d2: f64, t: f64) -> f64 {
        let s = self.scale(t);
        s.powf(-(DIM as f64) / 2.0) * (-d2 / (4.0 * s)).exp()
    }

    /// `∂_t G_λ` at the given squared distance.
    pub fn time_derivative_dist2(&self, d2: f64, t: f64) -> f64 {
        let s = self.scale(t);
        // d/dt s = -1
        let g = self.eval_dist2(d2, t);
        g * (DIM as f64 / (2.0 * s) - d2 / (4.0 * s * s))
    }
}
