//! Weighted Hardy inequalities on sampled `H¹₀` fields and the additive
//! constant of the improved (subcritical-singularity) Hardy inequality.

use serde::Serialize;

use crate::error::{config, Result};
use crate::field::{Measure, ModalField, SampleTable};
use crate::grid::{axial_offset, Point, RadialGrid};
use crate::spectral::{InverseSquare, ModalOperator};
use crate::{mu_star, DIM};

/// Relative slack tolerance: `tol = HARDY_TOL·(‖∇φ‖² + ‖φ‖²)`.
pub const HARDY_TOL: f64 = 1e-3;

/// Gaussian-weighted integrals entering both inequalities, with
/// `e(x) = exp(−|x − x₀|²/4λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardyTerms {
    /// `∫ |x − x₀|² φ² e`
    pub moment: f64,
    /// `∫ |∇φ|² e`
    pub gradient: f64,
    /// `∫ φ²/|x|² e`
    pub inverse_square: f64,
    /// `∫ φ² e`
    pub mass: f64,
    /// `∫ φ²/|x|^γ e`, zero when no γ is requested
    pub singular: f64,
    /// Unweighted `‖∇φ‖² + ‖φ‖²`.
    pub norm: f64,
}

pub fn hardy_terms(
    phi: &ModalField,
    table: &SampleTable,
    lambda: f64,
    x0: Point,
    gamma: Option<f64>,
) -> Result<HardyTerms> {
    if !(lambda > 0.0) {
        return config(format!("lambda must be positive, got {lambda}"));
    }
    let c = axial_offset(x0)?;
    let s = phi.samples(table);
    let e = |p: &crate::field::SamplePoint| (-p.dist2(c) / (4.0 * lambda)).exp();
    let moment = s.integrate(Measure::Volume, |p| p.dist2(c) * p.u * p.u * e(p));
    let gradient = s.integrate(Measure::Volume, |p| p.grad2() * e(p));
    let inverse_square = s.integrate(Measure::InverseSquare, |p| p.u * p.u * e(p));
    let mass = s.integrate(Measure::Volume, |p| p.u * p.u * e(p));
    let singular = match gamma {
        Some(g) => s.integrate(Measure::Volume, |p| if p.r > 0.0 { p.u * p.u * e(p) / p.r.powf(g) } else { 0.0 }),
        None => 0.0,
    };
    let norm = s.integrate(Measure::Volume, |p| p.grad2() + p.u * p.u);
    Ok(HardyTerms { moment, gradient, inverse_square, mass, singular, norm })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardySlack {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`
    pub slack: f64,
    pub tol: f64,
}

/// Weighted Hardy inequality
/// `(1/16λ²)∫|x−x₀|²φ²e ≤ ∫(|∇φ|² − μ*φ²/|x|²)e + (n/4λ)∫φ²e`.
pub fn weighted_slack(t: &HardyTerms, lambda: f64) -> HardySlack {
    improved_slack(t, lambda, 0.0, 0.0)
}

/// Improved form with `−m φ²/|x|^γ` under the gradient integral and
/// `(n/4λ + C)` in front of the mass.
pub fn improved_slack(t: &HardyTerms, lambda: f64, m: f64, constant: f64) -> HardySlack {
    let n = DIM as f64;
    let lhs = t.moment / (16.0 * lambda * lambda);
    let singular = if m == 0.0 { 0.0 } else { m * t.singular };
    let rhs = t.gradient - mu_star(DIM) * t.inverse_square - singular + (n / (4.0 * lambda) + constant) * t.mass;
    HardySlack { lhs, rhs, slack: rhs - lhs, tol: HARDY_TOL * t.norm }
}

/// Both sides of `∫(x−x₀)·∇φ φ e = −½∫(n − |x−x₀|²/2λ)φ² e`.
pub fn integration_by_parts_sides(
    phi: &ModalField,
    table: &SampleTable,
    lambda: f64,
    x0: Point,
) -> Result<(f64, f64)> {
    let c = axial_offset(x0)?;
    let s = phi.samples(table);
    let e = |p: &crate::field::SamplePoint| (-p.dist2(c) / (4.0 * lambda)).exp();
    let lhs = s.integrate(Measure::Volume, |p| p.radial_flux(c) * p.u * e(p));
    let n = DIM as f64;
    let rhs = -0.5 * s.integrate(Measure::Volume, |p| (n - p.dist2(c) / (2.0 * lambda)) * p.u * p.u * e(p));
    Ok((lhs, rhs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardyParams {
    pub lambda: f64,
    pub x0: Point,
    pub m: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HardyReport {
    pub samples: usize,
    pub min_slack: f64,
    /// Minimum of `slack / (‖∇φ‖² + ‖φ‖²)`.
    pub min_relative_slack: f64,
    pub violations: usize,
    pub constant_used: f64,
    pub params: HardyParams,
    pub passed: bool,
}

fn report(slacks: &[HardySlack], constant: f64, params: HardyParams) -> HardyReport {
    let min_slack = slacks.iter().map(|s| s.slack).fold(f64::INFINITY, f64::min);
    let min_relative_slack = slacks
        .iter()
        .map(|s| if s.tol > 0.0 { s.slack / (s.tol / HARDY_TOL) } else { 0.0 })
        .fold(f64::INFINITY, f64::min);
    let violations = slacks.iter().filter(|s| s.slack < -s.tol).count();
    HardyReport {
        samples: slacks.len(),
        min_slack: if slacks.is_empty() { 0.0 } else { min_slack },
        min_relative_slack: if slacks.is_empty() { 0.0 } else { min_relative_slack },
        violations,
        constant_used: constant,
        params,
        passed: violations == 0,
    }
}

pub fn check_hardy_weighted(
    samples: &[ModalField],
    table: &SampleTable,
    lambda: f64,
    x0: Point,
) -> Result<HardyReport> {
    let slacks = samples
        .iter()
        .map(|phi| Ok(weighted_slack(&hardy_terms(phi, table, lambda, x0, None)?, lambda)))
        .collect::<Result<Vec<_>>>()?;
    Ok(report(&slacks, 0.0, HardyParams { lambda, x0, m: 0.0, gamma: 0.0 }))
}

pub fn check_hardy_improved(
    samples: &[ModalField],
    table: &SampleTable,
    params: HardyParams,
    constant: f64,
) -> Result<HardyReport> {
    validate_gamma(params.gamma)?;
    let slacks = samples
        .iter()
        .map(|phi| {
            let t = hardy_terms(phi, table, params.lambda, params.x0, Some(params.gamma))?;
            Ok(improved_slack(&t, params.lambda, params.m, constant))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(report(&slacks, constant, params))
}

pub fn validate_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 2.0) {
        return config(format!("gamma must lie in (0, 2), got {gamma}"));
    }
    Ok(())
}

/// `l = 0` operator of `−Δ − μ*/|x|² − m/|x|^γ` with the critical term cell-averaged.
pub fn improved_operator(grid: &RadialGrid, m: f64, gamma: f64) -> ModalOperator {
    ModalOperator::new(0, 0.0, grid.clone())
        .with_inverse_square(mu_star(DIM), InverseSquare::CellAveraged)
        .with_potential(|r| -m / r.powf(gamma))
}

/// Least `C ≥ 0` with `m∫z²/|x|^γ ≤ ∫|∇z|² − μ*∫z²/|x|² + C∫z²` on the grid.
pub fn estimate_best_constant(grid: &RadialGrid, m: f64, gamma: f64) -> Result<f64> {
    validate_gamma(gamma)?;
    if !(m >= 0.0) {
        return config(format!("m must be non-negative, got {m}"));
    }
    if m == 0.0 {
        return Ok(0.0);
    }
    let lam = improved_operator(grid, m, gamma).lowest_eigenvalue()?;
    Ok((-lam).max(0.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantEstimate {
    pub m: f64,
    pub gamma: f64,
    pub radius: f64,
    /// `(N, C)` per refinement level.
    pub levels: Vec<(usize, f64)>,
    /// Relative change between the last two levels.
    pub last_change: f64,
}

pub fn best_constant_refinement(radius: f64, m: f64, gamma: f64, levels: &[usize]) -> Result<ConstantEstimate> {
    let values = levels
        .iter()
        .map(|&n| Ok((n, estimate_best_constant(&RadialGrid::new(radius, n)?, m, gamma)?)))
        .collect::<Result<Vec<_>>>()?;
    let last_change = match values.as_slice() {
        [.., (_, a), (_, b)] if *b != 0.0 => (b - a).abs() / b.abs(),
        _ => 0.0,
    };
    Ok(ConstantEstimate { m, gamma, radius, levels: values, last_change })
}

/// Lowest eigenvalue of `−Δ − μ/|x|²` on the `l = 0` sector, point-sampled,
/// for each grid size.
pub fn hardy_threshold(radius: f64, mu: f64, levels: &[usize]) -> Result<Vec<(usize, f64)>> {
    levels
        .iter()
        .map(|&n| {
            let op = ModalOperator::new(0, 0.0, RadialGrid::new(radius, n)?).with_inverse_square(mu, InverseSquare::Point);
            Ok((n, op.lowest_eigenvalue()?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{ModalSolution, SpectralBasis};

    fn first_mode(n: usize) -> (ModalField, SampleTable) {
        let basis = SpectralBasis::new(RadialGrid::new(1.0, n).unwrap(), 0.0, 0).unwrap();
        let table = SampleTable::new(basis.grid(), 0, 16);
        (ModalSolution::from_modes(basis, &[(0, 0, 1.0)]).unwrap().field(0.0), table)
    }

    #[test]
    fn first_mode_satisfies_weighted_inequality() {
        let (phi, table) = first_mode(511);
        let r = check_hardy_weighted(&[phi], &table, 1.0, [0.0; 3]).unwrap();
        assert!(r.passed && r.min_slack >= 0.0);
    }

    #[test]
    fn zero_field_has_zero_slack() {
        let (phi, table) = first_mode(63);
        let zero = ModalField::new(
            SpectralBasis::new(RadialGrid::new(1.0, 63).unwrap(), 0.0, 0).unwrap(),
            vec![vec![0.0; phi.grid().len()]],
        );
        let t = hardy_terms(&zero, &table, 0.7, [0.0; 3], Some(1.0)).unwrap();
        assert_eq!(weighted_slack(&t, 0.7).slack, 0.0);
    }

    #[test]
    fn integration_by_parts_identity() {
        let basis = SpectralBasis::new(RadialGrid::new(1.0, 511).unwrap(), 0.0, 2).unwrap();
        let table = SampleTable::new(basis.grid(), 2, 32);
        let phi = ModalSolution::from_modes(basis, &[(0, 0, 0.5), (1, 1, 0.7), (2, 0, -0.4)]).unwrap().field(0.0);
        for x0 in [[0.0; 3], [0.0, 0.0, 0.3]] {
            let (a, b) = integration_by_parts_sides(&phi, &table, 0.2, x0).unwrap();
            assert!((a - b).abs() < 1e-4 * b.abs(), "{a} vs {b}");
        }
    }

    #[test]
    fn rejects_gamma_out_of_range() {
        let grid = RadialGrid::new(1.0, 31).unwrap();
        assert!(estimate_best_constant(&grid, 1.0, 2.5).is_err());
        assert!(estimate_best_constant(&grid, 1.0, 0.0).is_err());
        assert_eq!(estimate_best_constant(&grid, 0.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn constant_nondecreasing_in_m() {
        let grid = RadialGrid::new(1.0, 255).unwrap();
        let c: Vec<f64> = [0.0, 0.5, 1.0, 2.0, 4.0].iter().map(|&m| estimate_best_constant(&grid, m, 1.0).unwrap()).collect();
        assert!(c.windows(2).all(|w| w[1] >= w[0]), "{c:?}");
        assert!(c[4] > 0.0);
    }
}
