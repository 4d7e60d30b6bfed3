//! Weighted quantities `H_λ`, `I_λ`, `N_λ = I_λ/H_λ` along a solution and
//! finite-difference checks of their monotonicity structure.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Measure, SampleTable};
use crate::grid::{axial_offset, HeatWeight};
use crate::spectral::ModalSolution;
use crate::{mu_star, DIM};

/// Traces whose `H` falls below this multiple of `‖u₀‖²` are degenerate.
pub const UNDERFLOW_GUARD: f64 = 1e-300;

/// `tol = (c1·h² + c2·δt²)·scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct Tolerance {
    pub c1: f64,
    pub c2: f64,
}

impl Tolerance {
    /// Twice the worst discretization error seen on single-mode `k = 0`
    /// traces: about `33h²·max|N|` in `N` and `4.2δt²·max|N|` in its
    /// derivative at 33 samples. Checked by `tests/tolerance_calibration.rs`.
    pub const CALIBRATED: Tolerance = Tolerance { c1: 66.0, c2: 8.5 };

    pub fn eval(&self, h: f64, dt: f64, scale: f64) -> f64 {
        (self.c1 * h * h + self.c2 * dt * dt) * scale
    }
}

/// Weighted integrals at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedSample {
    pub t: f64,
    /// `∫ u² G`
    pub h: f64,
    /// `∫ |∇u|² G`
    pub i: f64,
    /// `∫ u f G` with `f = k u/|x|`
    pub uf: f64,
    /// `∫ f² G`
    pub ff: f64,
}

/// All four weighted integrals of `sol` at time `t` in one quadrature pass.
pub fn weighted_sample(
    sol: &ModalSolution,
    weight: &HeatWeight,
    t: f64,
    table: &SampleTable,
) -> Result<WeightedSample> {
    if !(t > 0.0 && t <= weight.terminal) {
        return Err(Error::Config(format!("sample time {t} outside (0, {}]", weight.terminal)));
    }
    let c = axial_offset(weight.center)?;
    let k = sol.basis().k();
    let samples = sol.field(t).samples(table);
    let g = |p: &crate::field::SamplePoint| weight.eval_dist2(p.dist2(c), t);
    let h = samples.integrate(Measure::Volume, |p| p.u * p.u * g(p));
    let i = samples.integrate(Measure::Volume, |p| p.grad2() * g(p));
    let (uf, ff) = if k == 0.0 {
        (0.0, 0.0)
    } else {
        let uf = samples.integrate(Measure::Volume, |p| if p.r > 0.0 { k * p.u * p.u / p.r * g(p) } else { 0.0 });
        let ff = k * k * samples.integrate(Measure::InverseSquare, |p| p.u * p.u * g(p));
        (uf, ff)
    };
    Ok(WeightedSample { t, h, i, uf, ff })
}

pub fn weighted_h(sol: &ModalSolution, weight: &HeatWeight, t: f64, table: &SampleTable) -> Result<f64> {
    Ok(weighted_sample(sol, weight, t, table)?.h)
}

pub fn weighted_i(sol: &ModalSolution, weight: &HeatWeight, t: f64, table: &SampleTable) -> Result<f64> {
    Ok(weighted_sample(sol, weight, t, table)?.i)
}

/// Sampled `H_λ, I_λ, N_λ` and source terms along ascending times.
#[derive(Debug, Clone, Serialize)]
pub struct FrequencyTrace {
    pub weight: HeatWeight,
    pub k: f64,
    /// Radial grid spacing of the underlying solution.
    pub spacing: f64,
    pub times: Vec<f64>,
    pub h: Vec<f64>,
    pub i: Vec<f64>,
    pub n: Vec<f64>,
    pub uf: Vec<f64>,
    pub ff: Vec<f64>,
}

/// `count` equally spaced times on `[a, b]`.
pub fn uniform_times(a: f64, b: f64, count: usize) -> Vec<f64> {
    let dt = (b - a) / (count - 1) as f64;
    (0..count).map(|j| if j + 1 == count { b } else { a + j as f64 * dt }).collect()
}

pub fn frequency_trace(
    sol: &ModalSolution,
    weight: &HeatWeight,
    times: &[f64],
    table: &SampleTable,
) -> Result<FrequencyTrace> {
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("trace times must be strictly ascending".into()));
    }
    let norm0 = sol.initial_energy();
    if norm0 == 0.0 {
        return Err(Error::Degenerate("zero solution has no frequency".into()));
    }
    let samples = times
        .par_iter()
        .map(|&t| weighted_sample(sol, weight, t, table))
        .collect::<Result<Vec<_>>>()?;
    if let Some(s) = samples.iter().find(|s| !(s.h >= UNDERFLOW_GUARD * norm0)) {
        return Err(Error::Degenerate(format!("H = {:e} at t = {} underflows", s.h, s.t)));
    }
    Ok(FrequencyTrace {
        weight: *weight,
        k: sol.basis().k(),
        spacing: sol.basis().grid().spacing(),
        times: times.to_vec(),
        h: samples.iter().map(|s| s.h).collect(),
        i: samples.iter().map(|s| s.i).collect(),
        n: samples.iter().map(|s| s.i / s.h).collect(),
        uf: samples.iter().map(|s| s.uf).collect(),
        ff: samples.iter().map(|s| s.ff).collect(),
    })
}

/// Fourth-order central derivative at indices `2..len-2`; `None` elsewhere.
pub fn central_derivative(f: &[f64], dt: f64) -> Vec<Option<f64>> {
    let n = f.len();
    (0..n)
        .map(|i| {
            (i >= 2 && i + 2 < n).then(|| (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * dt))
        })
        .collect()
}

impl FrequencyTrace {
    /// Common step of a uniform time grid.
    pub fn time_step(&self) -> Result<f64> {
        let n = self.times.len();
        if n < 5 {
            return Err(Error::Config("derivative diagnostics need at least 5 samples".into()));
        }
        let dt = (self.times[n - 1] - self.times[0]) / (n - 1) as f64;
        if self.times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt) {
            return Err(Error::Config("derivative diagnostics need uniform times".into()));
        }
        Ok(dt)
    }

    pub fn max_abs_n(&self) -> f64 {
        self.n.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    fn derivative_of(&self, f: impl Fn(usize) -> f64) -> Result<Vec<Option<f64>>> {
        let dt = self.time_step()?;
        let values: Vec<f64> = (0..self.times.len()).map(f).collect();
        Ok(central_derivative(&values, dt))
    }

    /// `|N + ½ d(log H)/dt − ∫ufG/H|` at interior samples.
    pub fn identity_residuals(&self) -> Result<Vec<(f64, f64)>> {
        let dlog = self.derivative_of(|j| self.h[j].ln())?;
        Ok(dlog
            .iter()
            .enumerate()
            .filter_map(|(j, d)| d.map(|d| (self.times[j], (self.n[j] + 0.5 * d - self.uf[j] / self.h[j]).abs())))
            .collect())
    }

    /// `|dH/dt − (2∫ufG − 2I)| / H` at interior samples.
    pub fn h_derivative_residuals(&self) -> Result<Vec<(f64, f64)>> {
        let dh = self.derivative_of(|j| self.h[j])?;
        Ok(dh
            .iter()
            .enumerate()
            .filter_map(|(j, d)| {
                d.map(|d| (self.times[j], (d - (2.0 * self.uf[j] - 2.0 * self.i[j])).abs() / self.h[j]))
            })
            .collect())
    }
}

/// Outcome of the monotonicity checks on one trace.
#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityReport {
    pub tol: f64,
    pub max_abs_n: f64,
    /// `max (dN/dt − N/(T−t+λ) − ∫f²G/H)⁺`
    pub lemma_excess: f64,
    /// `max (d/dt[(T−t+λ)N])⁺`; a bound only when `k = 0`.
    pub scaled_excess: f64,
    /// `max (d/dt[e^{−tk²/μ*}(T−t+λ)N] − (nk²/4μ*)e^{−tk²/μ*})⁺`
    pub gronwall_excess: f64,
    pub interior_samples: usize,
    /// Interior samples where the Gronwall form holds within `tol`.
    pub gronwall_within_tol: usize,
    pub max_identity_residual: f64,
    pub passed: bool,
}

pub fn check_monotonicity(trace: &FrequencyTrace, tolerance: Tolerance) -> Result<MonotonicityReport> {
    let dt = trace.time_step()?;
    let max_abs_n = trace.max_abs_n();
    let tol = tolerance.eval(trace.spacing, dt, max_abs_n);
    let w = &trace.weight;
    let k2 = trace.k * trace.k / mu_star(DIM);
    let dn = trace.derivative_of(|j| trace.n[j])?;
    let dsn = trace.derivative_of(|j| w.scale(trace.times[j]) * trace.n[j])?;
    let dg = trace.derivative_of(|j| (-trace.times[j] * k2).exp() * w.scale(trace.times[j]) * trace.n[j])?;

    let (mut lemma_excess, mut scaled_excess, mut gronwall_excess) = (0.0f64, 0.0f64, 0.0f64);
    let (mut interior, mut within) = (0usize, 0usize);
    for j in 0..trace.times.len() {
        let (Some(dn), Some(dsn), Some(dg)) = (dn[j], dsn[j], dg[j]) else { continue };
        let t = trace.times[j];
        interior += 1;
        let s = w.scale(t);
        lemma_excess = lemma_excess.max(dn - trace.n[j] / s - trace.ff[j] / trace.h[j]);
        scaled_excess = scaled_excess.max(dsn);
        let g = dg - DIM as f64 * k2 / 4.0 * (-t * k2).exp();
        gronwall_excess = gronwall_excess.max(g);
        if g <= tol {
            within += 1;
        }
    }
    let max_identity_residual =
        trace.identity_residuals()?.iter().fold(0.0f64, |m, (_, r)| m.max(*r));
    let mut passed = lemma_excess <= tol;
    if trace.k == 0.0 {
        passed &= scaled_excess <= tol;
    }
    Ok(MonotonicityReport {
        tol,
        max_abs_n,
        lemma_excess,
        scaled_excess,
        gronwall_excess,
        interior_samples: interior,
        gronwall_within_tol: within,
        max_identity_residual,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;
    use crate::spectral::SpectralBasis;

    fn setup(k: f64, n: usize) -> (std::sync::Arc<SpectralBasis>, SampleTable) {
        let basis = SpectralBasis::new(RadialGrid::new(1.0, n).unwrap(), k, 3).unwrap();
        let table = SampleTable::new(basis.grid(), 3, 32);
        (basis, table)
    }

    #[test]
    fn derivative_is_fourth_order_exact_on_quartics() {
        let dt = 0.1;
        let f: Vec<f64> = (0..9).map(|j| (j as f64 * dt).powi(4)).collect();
        let d = central_derivative(&f, dt);
        for (j, d) in d.iter().enumerate() {
            match d {
                Some(d) => assert!((d - 4.0 * (j as f64 * dt).powi(3)).abs() < 1e-12),
                None => assert!(!(2..=6).contains(&j)),
            }
        }
    }

    #[test]
    fn large_lambda_recovers_energy_and_rayleigh_quotient() {
        let (basis, table) = setup(0.0, 255);
        let sol = ModalSolution::from_modes(basis.clone(), &[(1, 0, 1.0)]).unwrap();
        let lambda = 1e8;
        let w = HeatWeight::new(lambda, [0.0; 3], 1.0).unwrap();
        let s = weighted_sample(&sol, &w, 1.0, &table).unwrap();
        let e = sol.energy(1.0);
        assert!((s.h * lambda.powf(1.5) - e).abs() / e < 1e-6);
        let rq = basis.spectrum(1).value(0);
        assert!((s.i / s.h - rq).abs() / rq < 1e-3);
    }

    #[test]
    fn zero_solution_is_degenerate() {
        let (basis, table) = setup(0.0, 63);
        let sol = ModalSolution::from_coefficients(basis, vec![]).unwrap();
        let w = HeatWeight::new(0.5, [0.0; 3], 1.0).unwrap();
        assert_eq!(weighted_h(&sol, &w, 0.5, &table).unwrap(), 0.0);
        let err = frequency_trace(&sol, &w, &uniform_times(0.5, 1.0, 9), &table);
        assert!(matches!(err, Err(Error::Degenerate(_))));
    }

    #[test]
    fn scaling_leaves_frequency_unchanged() {
        let (basis, table) = setup(1.0, 127);
        let sol = ModalSolution::from_modes(basis, &[(0, 0, 0.6), (2, 1, 0.8)]).unwrap();
        let w = HeatWeight::new(0.5, [0.0, 0.0, 0.3], 1.0).unwrap();
        let times = uniform_times(0.5, 1.0, 9);
        let a = frequency_trace(&sol, &w, &times, &table).unwrap();
        let b = frequency_trace(&sol.scaled(-3.0), &w, &times, &table).unwrap();
        for (x, y) in a.n.iter().zip(&b.n) {
            assert!((x - y).abs() <= 1e-13 * x.abs());
        }
    }
}
