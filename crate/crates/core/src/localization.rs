//! Cutoffs, the backward estimate on a short final window, and composition
//! of Hölder-type estimates along chains of balls.

use serde::Serialize;

use crate::error::{config, Error, Result};
use crate::field::{Measure, ModalField, SampleTable};
use crate::grid::{axial_offset, Point};
use crate::interpolation::Ball;
use crate::quadrature::BallQuadrature;
use crate::spectral::ModalSolution;

/// Radial cutoff about `x₀`: 1 on `|x−x₀| ≤ a`, 0 on `|x−x₀| ≥ b`, with the
/// quintic smoothstep in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cutoff {
    pub inner: f64,
    pub outer: f64,
    pub center: Point,
}

/// Analytic `max |ψ'|·(b − a)` of the quintic transition.
pub const QUINTIC_SLOPE: f64 = 1.875;

impl Cutoff {
    pub fn new(inner: f64, outer: f64, center: Point) -> Result<Self> {
        axial_offset(center)?;
        if !(inner > 0.0 && inner < outer) {
            return config(format!("cutoff needs 0 < a < b, got a = {inner}, b = {outer}"));
        }
        Ok(Self { inner, outer, center })
    }

    fn s(&self, rho: f64) -> f64 {
        ((rho - self.inner) / (self.outer - self.inner)).clamp(0.0, 1.0)
    }

    pub fn value(&self, rho: f64) -> f64 {
        let s = self.s(rho);
        1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }

    /// `dψ/dρ`
    pub fn derivative(&self, rho: f64) -> f64 {
        let s = self.s(rho);
        -30.0 * s * s * (1.0 - s) * (1.0 - s) / (self.outer - self.inner)
    }

    /// `d²ψ/dρ²`
    pub fn second_derivative(&self, rho: f64) -> f64 {
        let s = self.s(rho);
        let w = self.outer - self.inner;
        -60.0 * s * (1.0 - s) * (1.0 - 2.0 * s) / (w * w)
    }

    /// `Δψ = ψ'' + (2/ρ)ψ'`
    pub fn laplacian(&self, rho: f64) -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        self.second_derivative(rho) + 2.0 * self.derivative(rho) / rho
    }

    /// Measured `max |ψ'|·(b−a)` and `C_ψ = max (|∇ψ|² + |Δψ|)·(b−a)²` on
    /// `samples` points of the transition layer.
    pub fn derivative_bounds(&self, samples: usize) -> (f64, f64) {
        let w = self.outer - self.inner;
        let (mut slope, mut c_psi) = (0.0f64, 0.0f64);
        for i in 0..=samples {
            let rho = self.inner + w * i as f64 / samples as f64;
            let d = self.derivative(rho);
            slope = slope.max(d.abs() * w);
            c_psi = c_psi.max((d * d + self.laplacian(rho).abs()) * w * w);
        }
        (slope, c_psi)
    }

    /// `∫ f² dx` of `f = (k/|x|)ψu − 2∇ψ·∇u − (Δψ)u`.
    pub fn commutator_source(&self, field: &ModalField, table: &SampleTable, k: f64) -> f64 {
        let c = self.center[2];
        field.samples(table).integrate(Measure::Volume, |p| {
            if p.r == 0.0 {
                return 0.0;
            }
            let rho = p.dist2(c).sqrt();
            let grad_dot = if rho > 0.0 { self.derivative(rho) / rho * p.radial_flux(c) } else { 0.0 };
            let f = k / p.r * self.value(rho) * p.u - 2.0 * grad_dot - self.laplacian(rho) * p.u;
            f * f
        })
    }
}

/// `h₀` together with whether its logarithm had to be clamped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowWidth {
    pub h0: f64,
    pub log_argument: f64,
    pub clamped: bool,
}

/// Default `C₁ = e·δ²R²`.
pub fn default_c1(delta: f64, r_loc: f64) -> f64 {
    std::f64::consts::E * delta * delta * r_loc * r_loc
}

/// `h₀ = δ³R²/(8(1+δ)²·log[(C₁/δ²R²)e^{1/T}E₀/E_obs])`.
///
/// The logarithm is clamped below at `max(1, 1/T)`, which keeps `h₀ < T`.
pub fn h0_formula(delta: f64, r_loc: f64, terminal: f64, e0: f64, eobs: f64, c1: f64) -> Result<WindowWidth> {
    if !(delta > 0.0 && delta <= 1.0) {
        return config(format!("delta must lie in (0, 1], got {delta}"));
    }
    if !(r_loc > 0.0 && r_loc <= 1.0) {
        return config(format!("local radius must lie in (0, 1], got {r_loc}"));
    }
    if !(terminal > 0.0 && terminal <= 1.0) {
        return config(format!("terminal time must lie in (0, 1], got {terminal}"));
    }
    if !(e0 > 0.0 && eobs > 0.0 && c1 > 0.0) {
        return Err(Error::Degenerate("h0 needs positive energies and C1".into()));
    }
    let log_argument = (c1 / (delta * delta * r_loc * r_loc)).ln() + 1.0 / terminal + (e0 / eobs).ln();
    let floor = 1.0f64.max(1.0 / terminal);
    let clamped = log_argument < floor;
    if clamped {
        log::debug!("h0 log argument {log_argument} clamped to {floor}");
    }
    let l = log_argument.max(floor);
    let h0 = delta.powi(3) * r_loc * r_loc / (8.0 * (1.0 + delta).powi(2) * l);
    Ok(WindowWidth { h0, log_argument, clamped })
}

#[derive(Debug, Clone, Serialize)]
pub struct BackwardReport {
    pub window: WindowWidth,
    /// `(t, log C_min(t))` over the window.
    pub samples: Vec<(f64, f64)>,
    pub max_log_c: f64,
    pub argmax_t: f64,
}

impl BackwardReport {
    pub fn max_c(&self) -> f64 {
        self.max_log_c.exp()
    }
}

/// Least `C(t)` with `‖u₀‖² ≤ C e^{1/h₀}‖u(t)‖²_{B_{(1+δ)R}(x₀)}` for `t` in
/// `[T − h₀, T]`, in log form.
pub fn check_backward_estimate(
    sol: &ModalSolution,
    x0: Point,
    r_loc: f64,
    delta: f64,
    terminal: f64,
    window_samples: usize,
) -> Result<BackwardReport> {
    let c = axial_offset(x0)?;
    let domain = sol.basis().grid().radius();
    if c.abs() + (1.0 + delta) * r_loc >= domain {
        return Err(Error::Geometry("enlarged local ball leaves the domain".into()));
    }
    let e0 = sol.energy(0.0);
    if !(e0 > 0.0) {
        return Err(Error::Degenerate("zero initial data".into()));
    }
    let eobs = sol.field(terminal).ball_energy(&BallQuadrature::with_default_orders(r_loc, c)?);
    let window = h0_formula(delta, r_loc, terminal, e0, eobs, default_c1(delta, r_loc))?;
    let q = BallQuadrature::with_default_orders((1.0 + delta) * r_loc, c)?;
    let count = window_samples.max(2);
    let samples: Vec<(f64, f64)> = (0..count)
        .map(|i| {
            let t = if i + 1 == count { terminal } else { terminal - window.h0 + window.h0 * i as f64 / (count - 1) as f64 };
            let eloc = sol.field(t).ball_energy(&q);
            (t, e0.ln() - 1.0 / window.h0 - eloc.ln())
        })
        .collect();
    let (argmax_t, max_log_c) = samples
        .iter()
        .copied()
        .fold((f64::NAN, f64::NEG_INFINITY), |acc, s| if s.1 > acc.1 { s } else { acc });
    if !max_log_c.is_finite() {
        return Err(Error::Degenerate("local energy vanishes in the window".into()));
    }
    Ok(BackwardReport { window, samples, max_log_c, argmax_t })
}

/// `E_target(T) ≤ (N e^{N/T} E₀)^{1−a} E_obs(T)^a` with `a` the product of
/// `factors`, the observed-side exponents of the composed links.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRecord {
    pub constant: f64,
    pub factors: Vec<f64>,
    pub target: Ball,
    pub observed: Ball,
}

impl EstimateRecord {
    /// `exponent` is the observed-side exponent.
    pub fn new(constant: f64, exponent: f64, target: Ball, observed: Ball) -> Result<Self> {
        if !(constant >= 1.0) {
            return config(format!("estimate constant must be at least 1, got {constant}"));
        }
        if !(exponent > 0.0 && exponent < 1.0) {
            return config(format!("exponent must lie in (0, 1), got {exponent}"));
        }
        Ok(Self { constant, factors: vec![exponent], target, observed })
    }

    /// Builds a record from the exponent `θ` on the initial-data factor.
    pub fn from_theta(constant: f64, theta: f64, target: Ball, observed: Ball) -> Result<Self> {
        Self::new(constant, 1.0 - theta, target, observed)
    }

    pub fn exponent(&self) -> f64 {
        self.factors.iter().product()
    }

    pub fn theta(&self) -> f64 {
        1.0 - self.exponent()
    }

    /// `log` of the right-hand side.
    pub fn log_rhs(&self, e0: f64, eobs: f64, terminal: f64) -> f64 {
        let a = self.exponent();
        (1.0 - a) * (self.constant.ln() + self.constant / terminal + e0.ln()) + a * eobs.ln()
    }
}

/// Composition along a chain where each link's observed ball lies in the next
/// link's target ball.
pub fn compose_chain(links: &[EstimateRecord]) -> Result<EstimateRecord> {
    let (first, rest) = links.split_first().ok_or_else(|| Error::Config("empty chain".into()))?;
    let mut out = first.clone();
    for next in rest {
        if !next.target.contains(&out.observed) {
            return Err(Error::Geometry(format!(
                "observed ball at z = {} (radius {}) is not inside the next target at z = {} (radius {})",
                out.observed.offset(),
                out.observed.radius,
                next.target.offset(),
                next.target.radius
            )));
        }
        out.constant = out.constant.max(next.constant);
        out.factors.extend_from_slice(&next.factors);
        out.observed = next.observed;
    }
    Ok(out)
}

/// Least `N ≥ 1` with `log N + N/T ≥ q`.
pub fn solve_constant(q: f64, terminal: f64) -> f64 {
    let g = |n: f64| n.ln() + n / terminal;
    if g(1.0) >= q {
        return 1.0;
    }
    let (mut lo, mut hi) = (1.0, 2.0);
    while g(hi) < q {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= q {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Least `N ≥ 1` making a single link hold for the given energies.
pub fn minimal_link_constant(e0: f64, e_target: f64, e_obs: f64, exponent: f64, terminal: f64) -> f64 {
    let q = (e_target.ln() - exponent * e_obs.ln()) / (1.0 - exponent) - e0.ln();
    solve_constant(q, terminal)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball(z: f64, r: f64) -> Ball {
        Ball::new([0.0, 0.0, z], r).unwrap()
    }

    #[test]
    fn cutoff_shape() {
        let c = Cutoff::new(0.2, 0.6, [0.0; 3]).unwrap();
        assert_eq!(c.value(0.2), 1.0);
        assert_eq!(c.value(0.6), 0.0);
        assert!((c.value(0.4) - 0.5).abs() < 1e-15);
        let (slope, c_psi) = c.derivative_bounds(4000);
        assert!(slope <= QUINTIC_SLOPE + 1e-9 && slope > QUINTIC_SLOPE - 1e-5);
        assert!(c_psi.is_finite());
        assert!(Cutoff::new(0.6, 0.2, [0.0; 3]).is_err());
    }

    #[test]
    fn h0_examples() {
        // (C1/δ²R²)·e^{1/T}·E0/Eobs = e
        let w = h0_formula(1.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!((w.h0 - 1.0 / 32.0).abs() < 1e-15 && !w.clamped);
        let a = h0_formula(0.5, 0.4, 0.5, 1.0, 0.1, default_c1(0.5, 0.4)).unwrap();
        let b = h0_formula(0.5, 0.4, 0.5, 1.0, 0.01, default_c1(0.5, 0.4)).unwrap();
        assert!(b.h0 < a.h0 && a.h0 < 0.5);
        let tiny = h0_formula(1.0, 1.0, 0.01, 1.0, 1e30, 1.0).unwrap();
        assert!(tiny.clamped && tiny.h0 < 0.01);
    }

    #[test]
    fn composition_algebra() {
        let a = EstimateRecord::new(2.0, 0.5, ball(-0.3, 0.4), ball(-0.3, 0.2)).unwrap();
        let b = EstimateRecord::new(3.0, 0.5, ball(-0.1, 0.4), ball(-0.1, 0.2)).unwrap();
        let c = EstimateRecord::new(1.5, 0.25, ball(0.1, 0.4), ball(0.1, 0.2)).unwrap();
        assert_eq!(compose_chain(std::slice::from_ref(&a)).unwrap(), a);
        let ab = compose_chain(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(ab.exponent(), 0.25);
        let left = compose_chain(&[ab, c.clone()]).unwrap();
        let right = compose_chain(&[a.clone(), compose_chain(&[b.clone(), c.clone()]).unwrap()]).unwrap();
        assert_eq!(left, right);
        assert!(compose_chain(&[c, a]).is_err());
    }

    #[test]
    fn constant_solver() {
        assert_eq!(solve_constant(0.5, 1.0), 1.0);
        let n = solve_constant(10.0, 0.5);
        assert!((n.ln() + n / 0.5 - 10.0).abs() < 1e-9);
    }
}
