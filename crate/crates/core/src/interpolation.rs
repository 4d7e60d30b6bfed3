//! The interpolation inequality with explicit exponent, the weighted estimate
//! behind it, doubling, and a search for hard initial data.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{config, Error, Result};
use crate::field::{Measure, ModalField, SampleTable};
use crate::grid::{axial_offset, Point};
use crate::quadrature::{to_global, BallQuadrature};
use crate::spectral::{ModalSolution, SpectralBasis};
use crate::{mu_star, DIM};

/// `α(r) = 1/(1 + (32R_Ω²/r²)e^{k²/μ*})`.
pub fn alpha_of_r(r: f64, r_omega: f64, k: f64, n: usize) -> Result<f64> {
    if n < 3 {
        return config(format!("dimension {n} < 3 leaves the Hardy constant degenerate"));
    }
    if !(r > 0.0 && r_omega > 0.0) {
        return config(format!("radii must be positive, got r = {r}, R_Omega = {r_omega}"));
    }
    Ok(1.0 / (1.0 + growth_factor(r, r_omega, k, n)))
}

/// `p = (32R_Ω²/r²)e^{k²/μ*}`, so that `α = 1/(1 + p)`.
pub fn growth_factor(r: f64, r_omega: f64, k: f64, n: usize) -> f64 {
    32.0 * r_omega * r_omega / (r * r) * (k * k / mu_star(n)).exp()
}

/// `𝒞₁ = R_Ω²/2T + C(k) + (n/4)(1 + k²/μ*) + n`.
pub fn c1_value(terminal: f64, k: f64, n: usize, r_omega: f64, c_k: f64) -> f64 {
    let nf = n as f64;
    r_omega * r_omega / (2.0 * terminal) + c_k + nf / 4.0 * (1.0 + k * k / mu_star(n)) + nf
}

/// `λ₀ = (r²/128)e^{−k²/μ*} / [log(E₀/E_T) + 𝒞₁]`.
pub fn lambda0_choice(e0: f64, et: f64, r: f64, k: f64, n: usize, c1: f64) -> Result<f64> {
    if !(e0 > 0.0 && et > 0.0) {
        return Err(Error::Degenerate("energies must be positive".into()));
    }
    let bracket = (e0 / et).ln() + c1;
    if !(bracket > 0.0) {
        return Err(Error::Config(format!(
            "log(E0/ET) + C1 = {bracket} is not positive; C1 is miscalibrated"
        )));
    }
    Ok(r * r / 128.0 * (-k * k / mu_star(n)).exp() / bracket)
}

/// Both sides, in log form, of `e^{R_Ω²/4λ₀} = (e^{𝒞₁}E₀/E_T)^{p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentIdentity {
    pub lambda0: f64,
    pub lhs_log: f64,
    pub rhs_log: f64,
    pub relative_error: f64,
    /// `64λ₀e^{k²/μ*}/r² · [log(E₀/E_T) + 𝒞₁]`, which must equal ½.
    pub bracket_coefficient: f64,
}

pub fn exponent_identity(e0: f64, et: f64, r: f64, r_omega: f64, k: f64, n: usize, c1: f64) -> Result<ExponentIdentity> {
    let lambda0 = lambda0_choice(e0, et, r, k, n, c1)?;
    let bracket = (e0 / et).ln() + c1;
    let lhs_log = r_omega * r_omega / (4.0 * lambda0);
    let rhs_log = growth_factor(r, r_omega, k, n) * bracket;
    let bracket_coefficient = 64.0 * lambda0 * (k * k / mu_star(n)).exp() / (r * r) * bracket;
    Ok(ExponentIdentity {
        lambda0,
        lhs_log,
        rhs_log,
        relative_error: (lhs_log - rhs_log).abs() / rhs_log.abs(),
        bracket_coefficient,
    })
}

/// `(E₀, E_T, E_obs)` for one solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Energies {
    pub initial: f64,
    pub terminal: f64,
    pub observed: f64,
}

/// `log` of the least `N` with `E_T ≤ 2 E_obs^α (N e^{R_Ω²/2T} E₀)^{1−α}`, unclipped.
pub fn log_minimal_n(e: &Energies, alpha: f64, r_omega: f64, terminal: f64) -> f64 {
    ((e.terminal.ln() - std::f64::consts::LN_2 - alpha * e.observed.ln()) / (1.0 - alpha))
        - r_omega * r_omega / (2.0 * terminal)
        - e.initial.ln()
}

/// Ball `B_ρ(x₀)`; centers lie on the symmetry axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        axial_offset(center)?;
        if !(radius > 0.0) {
            return Err(Error::Geometry(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    pub fn offset(&self) -> f64 {
        self.center[2]
    }

    /// Whether `other ⊆ self` (closed balls, with a rounding allowance).
    pub fn contains(&self, other: &Ball) -> bool {
        let d = crate::grid::dist2(self.center, other.center).sqrt();
        d + other.radius <= self.radius + 1e-12
    }

    /// Whether the ball lies inside `B_R(0)`.
    pub fn inside_domain(&self, domain_radius: f64) -> bool {
        self.offset().abs() + self.radius < domain_radius
    }

    pub fn quadrature(&self) -> Result<BallQuadrature> {
        BallQuadrature::with_default_orders(self.radius, self.offset())
    }
}

/// `∫_B u² dx` of a field.
pub fn ball_energy(field: &ModalField, q: &BallQuadrature) -> f64 {
    field.ball_energy(q)
}

/// Observation setup of the interpolation inequality.
#[derive(Debug, Clone, Serialize)]
pub struct InterpolationExperiment {
    pub domain_radius: f64,
    pub r_omega: f64,
    pub observation: Ball,
    pub k: f64,
    pub terminal: f64,
    pub alpha: f64,
}

impl InterpolationExperiment {
    pub fn new(domain_radius: f64, observation: Ball, k: f64, terminal: f64) -> Result<Self> {
        if !observation.inside_domain(domain_radius) {
            return Err(Error::Geometry(format!(
                "observation ball of radius {} at z = {} leaves the domain",
                observation.radius,
                observation.offset()
            )));
        }
        if !(terminal > 0.0 && terminal <= 1.0) {
            return config(format!("terminal time must lie in (0, 1], got {terminal}"));
        }
        let r_omega = 2.0 * domain_radius;
        let alpha = alpha_of_r(observation.radius, r_omega, k, DIM)?;
        Ok(Self { domain_radius, r_omega, observation, k, terminal, alpha })
    }

    pub fn energies(&self, sol: &ModalSolution, q: &BallQuadrature) -> Energies {
        Energies {
            initial: sol.energy(0.0),
            terminal: sol.energy(self.terminal),
            observed: sol.field(self.terminal).ball_energy(q),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MemberResult {
    pub energies: Energies,
    pub log_n_raw: f64,
    /// `max(1, N_raw)`
    pub minimal_n: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InterpolationSummary {
    pub alpha: f64,
    pub members: Vec<Option<MemberResult>>,
    pub family_max: f64,
    pub family_max_log_raw: f64,
    pub skipped: usize,
}

pub fn evaluate_member(exp: &InterpolationExperiment, sol: &ModalSolution, q: &BallQuadrature) -> Option<MemberResult> {
    let energies = exp.energies(sol, q);
    if !(energies.initial > 0.0 && energies.terminal > 0.0 && energies.observed > 0.0) {
        return None;
    }
    let log_n_raw = log_minimal_n(&energies, exp.alpha, exp.r_omega, exp.terminal);
    Some(MemberResult { energies, log_n_raw, minimal_n: log_n_raw.exp().max(1.0) })
}

pub fn check_interpolation(exp: &InterpolationExperiment, family: &[ModalSolution]) -> Result<InterpolationSummary> {
    let q = exp.observation.quadrature()?;
    let members: Vec<Option<MemberResult>> = family.par_iter().map(|s| evaluate_member(exp, s, &q)).collect();
    let skipped = members.iter().filter(|m| m.is_none()).count();
    if skipped > 0 {
        log::info!("{skipped} degenerate family members skipped");
    }
    let valid = members.iter().flatten();
    let family_max = valid.clone().map(|m| m.minimal_n).fold(1.0, f64::max);
    let family_max_log_raw = valid.map(|m| m.log_n_raw).fold(f64::NEG_INFINITY, f64::max);
    Ok(InterpolationSummary { alpha: exp.alpha, members, family_max, family_max_log_raw, skipped })
}

/// Doubling ratio `∫_{B_2r}u² / ∫_{B_r}u²` at time `T`.
pub fn check_doubling(sol: &ModalSolution, r: f64, x0: Point, terminal: f64) -> Result<f64> {
    let c = axial_offset(x0)?;
    let field = sol.field(terminal);
    let inner = field.ball_energy(&BallQuadrature::with_default_orders(r, c)?);
    let outer = field.ball_energy(&BallQuadrature::with_default_orders(2.0 * r, c)?);
    if !(inner > 0.0) || !inner.is_finite() {
        return Err(Error::Degenerate("inner ball integral vanishes".into()));
    }
    Ok(outer / inner)
}

/// Both sides of the weighted estimate at weight parameter `λ`, with the
/// unknown `C(k)` left out of `𝒞₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedEstimateReport {
    pub lambda: f64,
    /// `∫_Ω u(T)² e^{−|x−x₀|²/4λ}`
    pub weighted_total: f64,
    /// Same integral over `B_r(x₀)`.
    pub weighted_observed: f64,
    /// `log(E₀/E_T)`
    pub log_ratio: f64,
    /// `𝒞₁` with `C(k) = 0`.
    pub c1_base: f64,
    /// `64λe^{k²/μ*}/r²`
    pub coefficient: f64,
    /// `RHS − LHS` with `C(k) = 0`.
    pub slack: f64,
    /// Least `C(k) ≥ 0` for which the estimate holds.
    pub min_c_k: f64,
}

pub fn check_weighted_estimate(
    sol: &ModalSolution,
    lambda: f64,
    exp: &InterpolationExperiment,
    table: &SampleTable,
) -> Result<WeightedEstimateReport> {
    let t = exp.terminal;
    if !(lambda > 0.0 && lambda <= t) {
        return config(format!("lambda must lie in (0, T], got {lambda}"));
    }
    let e0 = sol.energy(0.0);
    let et = sol.energy(t);
    if !(et > 0.0 && e0 > 0.0) {
        return Err(Error::Degenerate("solution vanishes at T".into()));
    }
    let c = exp.observation.offset();
    let field = sol.field(t);
    let weighted_total = field
        .samples(table)
        .integrate(Measure::Volume, |p| p.u * p.u * (-p.dist2(c) / (4.0 * lambda)).exp());
    let q = exp.observation.quadrature()?;
    let weighted_observed = q.integrate(|rl, mu| {
        let (rg, mg) = to_global(rl, mu, c);
        let u = field.value(rg, mg);
        u * u * (-rl * rl / (4.0 * lambda)).exp()
    });
    let log_ratio = (e0 / et).ln();
    let c1_base = c1_value(t, exp.k, DIM, exp.r_omega, 0.0);
    let r = exp.observation.radius;
    let coefficient = 64.0 * lambda * (exp.k * exp.k / mu_star(DIM)).exp() / (r * r);
    let slack = weighted_observed + coefficient * (log_ratio + c1_base) * weighted_total - weighted_total;
    let min_c_k = ((weighted_total - weighted_observed) / (coefficient * weighted_total) - log_ratio - c1_base).max(0.0);
    Ok(WeightedEstimateReport {
        lambda,
        weighted_total,
        weighted_observed,
        log_ratio,
        c1_base,
        coefficient,
        slack,
        min_c_k,
    })
}

/// Result of the search for initial data with the largest minimal `N`.
#[derive(Debug, Clone, Serialize)]
pub struct SharpnessResult {
    pub modes: Vec<(usize, usize)>,
    pub coefficients: Vec<f64>,
    pub log_n_raw: f64,
    pub minimal_n: f64,
    /// `E_obs/E_T` of the maximizer.
    pub observed_fraction: f64,
    pub best_seed: u64,
    /// Best objective after each accepted improvement of the winning start.
    pub trace: Vec<f64>,
    pub evaluations: usize,
}

/// Quadratic forms of the modal subspace at time `T`.
struct ModalForms {
    decay: Vec<f64>,
    gram: Vec<f64>,
    dim: usize,
}

impl ModalForms {
    fn energies(&self, c: &[f64]) -> Energies {
        let initial: f64 = c.iter().map(|x| x * x).sum();
        let terminal: f64 = c.iter().zip(&self.decay).map(|(x, d)| x * x * d).sum();
        let mut observed = 0.0;
        for i in 0..self.dim {
            let row = &self.gram[i * self.dim..(i + 1) * self.dim];
            observed += c[i] * row.iter().zip(c).map(|(m, x)| m * x).sum::<f64>();
        }
        Energies { initial, terminal, observed }
    }
}

fn modal_forms(
    exp: &InterpolationExperiment,
    basis: &Arc<SpectralBasis>,
    modes: &[(usize, usize)],
) -> Result<ModalForms> {
    let q = exp.observation.quadrature()?;
    let points = q.global_points();
    let dim = modes.len();
    let fields: Vec<ModalField> = modes
        .iter()
        .map(|&(l, j)| Ok(ModalSolution::from_modes(Arc::clone(basis), &[(l, j, 1.0)])?.field(exp.terminal)))
        .collect::<Result<_>>()?;
    let values: Vec<Vec<f64>> = fields
        .par_iter()
        .map(|f| points.iter().map(|&(r, mu, _)| f.value(r, mu)).collect())
        .collect();
    let mut gram = vec![0.0; dim * dim];
    for a in 0..dim {
        for b in a..dim {
            let v: f64 = points.iter().enumerate().map(|(p, &(_, _, w))| w * values[a][p] * values[b][p]).sum();
            gram[a * dim + b] = v;
            gram[b * dim + a] = v;
        }
    }
    let decay = modes.iter().map(|&(l, j)| (-2.0 * basis.spectrum(l).value(j) * exp.terminal).exp()).collect();
    Ok(ModalForms { decay, gram, dim })
}

struct StartOutcome {
    objective: f64,
    coefficients: Vec<f64>,
    trace: Vec<f64>,
    evaluations: usize,
}

fn normalize(c: &mut [f64]) {
    let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    c.iter_mut().for_each(|x| *x /= n);
}

fn run_start(forms: &ModalForms, exp: &InterpolationExperiment, seed: u64, budget: usize) -> StartOutcome {
    let objective = |c: &[f64]| {
        let e = forms.energies(c);
        if e.observed > 0.0 && e.terminal > 0.0 {
            log_minimal_n(&e, exp.alpha, exp.r_omega, exp.terminal)
        } else {
            f64::NEG_INFINITY
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = forms.dim;
    let draw = |rng: &mut ChaCha8Rng| {
        let mut c: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        normalize(&mut c);
        c
    };
    let mut best = draw(&mut rng);
    let mut best_val = objective(&best);
    let mut trace = vec![best_val];
    let mut evaluations = 1;

    // random phase: a third of the budget
    while evaluations < budget / 3 {
        let c = draw(&mut rng);
        let v = objective(&c);
        evaluations += 1;
        if v > best_val {
            best = c;
            best_val = v;
            trace.push(v);
        }
    }

    // coordinate line search with shrinking steps
    let mut step = 0.5;
    while evaluations < budget && step > 1e-10 {
        let mut improved = false;
        for i in 0..dim {
            for sign in [1.0, -1.0] {
                if evaluations >= budget {
                    break;
                }
                let mut c = best.clone();
                c[i] += sign * step;
                normalize(&mut c);
                let v = objective(&c);
                evaluations += 1;
                if v > best_val {
                    best = c;
                    best_val = v;
                    trace.push(v);
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    StartOutcome { objective: best_val, coefficients: best, trace, evaluations }
}

/// Multi-start random search plus coordinate line search over unit
/// coefficient vectors in the span of `modes`.
pub fn sharpness_search(
    exp: &InterpolationExperiment,
    basis: &Arc<SpectralBasis>,
    modes: &[(usize, usize)],
    budget: usize,
    starts: usize,
    seed: u64,
) -> Result<SharpnessResult> {
    if budget < 100 {
        return config(format!("sharpness budget must be at least 100, got {budget}"));
    }
    if modes.is_empty() || starts == 0 {
        return config("sharpness search needs at least one mode and one start");
    }
    let forms = modal_forms(exp, basis, modes)?;
    let per_start = (budget / starts).max(1);
    let outcomes: Vec<(u64, StartOutcome)> = (0..starts as u64)
        .into_par_iter()
        .map(|s| (seed + s, run_start(&forms, exp, seed + s, per_start)))
        .collect();
    let evaluations = outcomes.iter().map(|(_, o)| o.evaluations).sum();
    let (best_seed, best) = outcomes
        .into_iter()
        .reduce(|a, b| if b.1.objective > a.1.objective || (b.1.objective == a.1.objective && b.0 < a.0) { b } else { a })
        .expect("at least one start");
    let e = forms.energies(&best.coefficients);
    Ok(SharpnessResult {
        modes: modes.to_vec(),
        coefficients: best.coefficients,
        log_n_raw: best.objective,
        minimal_n: best.objective.exp().max(1.0),
        observed_fraction: e.observed / e.terminal,
        best_seed,
        trace: best.trace,
        evaluations,
    })
}
