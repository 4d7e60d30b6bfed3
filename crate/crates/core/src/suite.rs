//! The acceptance battery: one entry per criterion, each with its pinned
//! parameters and tolerances.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::family::{full_combinations, origin_profiles, random_family, ModeRange};
use crate::field::SampleTable;
use crate::frequency::{check_monotonicity, frequency_trace, uniform_times, MonotonicityReport, Tolerance};
use crate::grid::{HeatWeight, Point, RadialGrid};
use crate::hardy::{check_hardy_weighted, hardy_threshold, HARDY_TOL};
use crate::interpolation::{c1_value, check_doubling, check_interpolation, exponent_identity, Ball, InterpolationExperiment};
use crate::localization::{check_backward_estimate, compose_chain, minimal_link_constant, EstimateRecord};
use crate::spectral::{ModalOperator, ModalSolution, SpectralBasis};
use crate::DIM;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuiteOptions {
    pub seed: u64,
    pub tolerance: Tolerance,
    pub polar_order: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { seed: 42, tolerance: Tolerance::CALIBRATED, polar_order: crate::field::DEFAULT_POLAR_ORDER }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: String,
    pub passed: bool,
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl CriterionResult {
    fn new(id: u8, title: &str) -> Self {
        Self { id, title: title.into(), passed: true, metrics: BTreeMap::new(), notes: Vec::new(), elapsed: Duration::ZERO }
    }

    fn metric(&mut self, key: impl Into<String>, value: f64) {
        self.metrics.insert(key.into(), value);
    }

    fn require(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.passed = false;
            self.notes.push(format!("failed: {}", what.into()));
        }
    }

    /// One-line summary.
    pub fn line(&self) -> String {
        format!("[{}] criterion {:>2}: {}", if self.passed { "PASS" } else { "FAIL" }, self.id, self.title)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub options: SuiteOptions,
    pub hardy_tol: f64,
    pub criteria: Vec<CriterionResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }
}

fn basis(n: usize, radius: f64, k: f64, l_max: usize) -> Result<Arc<SpectralBasis>> {
    SpectralBasis::new(RadialGrid::new(radius, n)?, k, l_max)
}

fn timed(f: impl FnOnce() -> Result<CriterionResult>) -> Result<CriterionResult> {
    let start = Instant::now();
    let mut r = f()?;
    r.elapsed = start.elapsed();
    Ok(r)
}

fn relative_change(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

/// `|e^{a−b} − 1|` with the larger value as reference, for quantities kept in log form.
fn relative_change_log(a: f64, b: f64) -> f64 {
    -(-(a - b).abs()).exp_m1()
}

pub const SPECTRUM_RUNTIME_LIMIT: Duration = Duration::from_secs(30);

pub fn criterion_spectrum() -> Result<CriterionResult> {
    timed(|| {
        let mut c = CriterionResult::new(1, "eigensolver oracles (sine modes, hydrogen ground state)");
        let start = Instant::now();
        let values = ModalOperator::new(0, 0.0, RadialGrid::new(1.0, 1023)?).eigenvalues()?;
        let worst = (1..=10)
            .map(|j| {
                let exact = (j as f64 * PI).powi(2);
                (values[j - 1] - exact).abs() / exact
            })
            .fold(0.0, f64::max);
        let hydrogen = ModalOperator::new(0, 1.0, RadialGrid::new(30.0, 4096)?).lowest_eigenvalue()?;
        let runtime = start.elapsed();
        c.metric("sine_max_relative_error", worst);
        c.metric("hydrogen_lowest", hydrogen);
        c.require(worst <= 5e-3, "sine eigenvalues within 0.5%");
        c.require((hydrogen + 0.25).abs() <= 1e-3, "hydrogen ground state within 1e-3 of -0.25");
        c.require(runtime < SPECTRUM_RUNTIME_LIMIT, "runtime under 30 s");
        Ok(c)
    })
}

pub const THRESHOLD_LEVELS: [usize; 3] = [511, 1023, 2047];

pub fn criterion_hardy_threshold() -> Result<CriterionResult> {
    timed(|| {
        let mut c = CriterionResult::new(2, "critical Hardy threshold (bounded at 0.24, divergent at 0.26)");
        for mu in [0.24, 0.26] {
            let levels = hardy_threshold(1.0, mu, &THRESHOLD_LEVELS)?;
            for (n, v) in &levels {
                c.metric(format!("mu{mu}_lowest_n{n}"), *v);
            }
            let drops: Vec<f64> = levels.windows(2).map(|w| w[0].1 - w[1].1).collect();
            for (i, d) in drops.iter().enumerate() {
                c.metric(format!("mu{mu}_drop{i}"), *d);
            }
            if mu < 0.25 {
                c.require(drops.iter().all(|&d| d < 1.0), "mu = 0.24 bounded below under refinement");
            } else {
                c.require(drops.iter().all(|&d| d >= 1.0), "mu = 0.26 decreases by at least 1.0 per refinement");
            }
        }
        Ok(c)
    })
}

pub const HARDY_LAMBDAS: [f64; 3] = [0.05, 0.25, 1.0];
pub const CENTERS: [Point; 2] = [[0.0; 3], [0.0, 0.0, 0.3]];

/// Worst `slack/(‖∇φ‖² + ‖φ‖²)` of the weighted Hardy inequality over the
/// sample set at one grid size.
pub fn hardy_worst_slack(n: usize, seed: u64, polar_order: usize) -> Result<f64> {
    let b = basis(n, 1.0, 0.0, 4)?;
    let mut fields = full_combinations(&b, 100, ModeRange { l_max: 4, radial: 6 }, seed)?;
    fields.extend(origin_profiles(&b, &[0.51, 0.75, 1.0]));
    let table = SampleTable::new(b.grid(), 4, polar_order);
    let mut worst = f64::INFINITY;
    for lambda in HARDY_LAMBDAS {
        for x0 in CENTERS {
            worst = worst.min(check_hardy_weighted(&fields, &table, lambda, x0)?.min_relative_slack);
        }
    }
    Ok(worst)
}

pub fn criterion_hardy_slack(opts: &SuiteOptions) -> Result<CriterionResult> {
    timed(|| {
        let mut c = CriterionResult::new(3, "weighted Hardy slack on 103 samples, improving under refinement");
        let coarse = hardy_worst_slack(511, opts.seed, opts.polar_order)?;
        let fine = hardy_worst_slack(1023, opts.seed, opts.polar_order)?;
        c.metric("worst_relative_slack_n511", coarse);
        c.metric("worst_relative_slack_n1023", fine);
        c.require(coarse >= -HARDY_TOL, "all slacks >= -1e-3 (|grad|^2 + |phi|^2) at N = 511");
        c.require(fine >= 0.0 || fine > coarse, "worst slack improves at N = 1023");
        Ok(c)
    })
}

pub const FREQUENCY_TERMINAL: f64 = 1.0;
pub const FREQUENCY_LAMBDAS: [f64; 3] = [0.1, 0.5, 1.0];
pub const FREQUENCY_GRIDS: [usize; 2] = [255, 511];
pub const FREQUENCY_SAMPLES: usize = 129;

/// Monotonicity reports of the 20-member family for every weight parameter.
pub fn frequency_family(n: usize, k: f64, opts: &SuiteOptions) -> Result<Vec<MonotonicityReport>> {
    let b = basis(n, 1.0, k, 3)?;
    let family = random_family(&b, 20, 5, ModeRange { l_max: 3, radial: 4 }, opts.seed)?;
    let table = SampleTable::new(b.grid(), 3, opts.polar_order);
    let times = uniform_times(FREQUENCY_TERMINAL / 2.0, FREQUENCY_TERMINAL, FREQUENCY_SAMPLES);
    let jobs: Vec<(usize, f64)> =
        (0..family.len()).flat_map(|i| FREQUENCY_LAMBDAS.iter().map(move |&l| (i, l))).collect();
    jobs.par_iter()
        .map(|&(i, lambda)| {
            let w = HeatWeight::new(lambda, CENTERS[i % 2], FREQUENCY_TERMINAL)?;
            let trace = frequency_trace(&family[i], &w, &times, &table)?;
            check_monotonicity(&trace, opts.tolerance)
        })
        .collect()
}

pub fn criterion_frequency_k0(opts: &SuiteOptions) -> Result<CriterionResult> {
    timed(|| {
        let mut c = CriterionResult::new(4, "frequency monotonicity for k = 0 and the log-derivative identity");
        let mut excess = Vec::new();
        let mut residual = Vec::new();
        for n in FREQUENCY_GRIDS {
            let reports = frequency_family(n, 0.0, opts)?;
            let ex = reports.iter().map(|r| r.scaled_excess).fold(0.0, f64::max);
            let over = reports.iter().filter(|r| r.scaled_excess > r.tol).count();
            let ratio = reports.iter().map(|r| r.scaled_excess / r.tol).fold(0.0, f64::max);
            let res = reports.iter().map(|r| r.max_identity_residual).fold(0.0, f64::max);
            c.metric(format!("max_excess_n{n}"), ex);
            c.metric(format!("max_excess_over_tol_n{n}"), ratio);
            c.metric(format!("traces_over_tol_n{n}"), over as f64);
            c.metric(format!("max_identity_residual_n{n}"), res);
            c.require(over == 0, format!("excess within tol at N = {n}"));
            excess.push(ex);
            residual.push(res);
        }
        c.require(excess[1] <= excess[0] / 2.0, "excess shrinks at least 2x from N = 255 to 511");
        let h_ratio = (FREQUENCY_GRIDS[1] + 1) as f64 / (FREQUENCY_GRIDS[0] + 1) as f64;
        let order = (residual[0] / residual[1]).ln() / h_ratio.ln();
        c.metric("identity_residual_order", order);
        c.require(order >= 1.8, "identity residual converges at order >= 1.8");
        Ok(c)
    })
}

pub fn criterion_gronwall(opts: &SuiteOptions) -> Result<CriterionResult> {
    timed(|| {
        let mut c = CriterionResult::new(5, "Gronwall form of the frequency bound for k = 1");
        let mut worst = Vec::new();
        for n in FREQUENCY_GRIDS {
            let reports = frequency_family(n, 1.0, opts)?;
            let total: usize = reports.iter().map(|r| r.interior_samples).sum();
            let within: usize = reports.iter().map(|r| r.gronwall_within_tol).sum();
            let fraction = within as f64 / total as f64;
            let ex = reports.iter().map(|r| r.gronwall_excess).fold(0.0, f64::max);
            let ratio = reports.iter().map(|r| r.gronwall_excess / r.tol).fold(0.0, f64::max);
            c.metric(format!("fraction_within_tol_n{n}"), fraction);
            c.metric(format!("max_excess_n{n}"), ex);
            c.metric(format!("max_excess_over_tol_n{n}"), ratio);
            c.require(fraction >= 0.99, format!("at least 99% of samples within tol at N = {n}"));
            c.require(ratio <= 10.0, format!("violations stay at tol scale at N = {n}"));
            worst.push(ex);
        }
        c.require(worst[1] <= worst[0], "violations do not grow under refinement");
        Ok(c)
    })
}

pub const INTERP_GRIDS: [usize; 2] = [255, 511];
pub const INTERP_TERMINAL: f64 = 0.5;

fn interp_family(b: &Arc<SpectralBasis>, size: usize, seed: u64) -> Result<Vec<ModalSolution>> {
    random_family(b, size, 10, ModeRange { l_max: 4, radial: 4 }, seed.wrapping_add(10_000))
}

pub fn criterion_interpolation(opts: &SuiteOptions) -> Result<CriterionResult> {
    timed(|| {
        let mut c = CriterionResult::new(6, "interpolation inequality end to end, refinement-stable minimal N");
        let mut identity_error = 0.0f64;
        let mut coefficient_error = 0.0f64;
        for (ci, x0) in CENTERS.iter().enumerate() {
            let mut max_n = Vec::new();
            let mut max_log = Vec::new();
            for n in INTERP_GRIDS {
                let b = basis(n, 1.0, 0.0, 4)?;
                let family = interp_family(&b, 50, opts.seed)?;
                let exp = InterpolationExperiment::new(1.0, Ball::new(*x0, 0.5)?, 0.0, INTERP_TERMINAL)?;
                let summary = check_interpolation(&exp, &family)?;
                let c1 = c1_value(INTERP_TERMINAL, 0.0, DIM, exp.r_omega, 0.0);
                for m in summary.members.iter().flatten() {
                    let id = exponent_identity(m.energies.initial, m.energies.terminal, 0.5, exp.r_omega, 0.0, DIM, c1)?;
                    identity_error = identity_error.max(id.relative_error);
                    coefficient_error = coefficient_error.max((id.bracket_coefficient - 0.5).abs());
                }
                c.metric(format!("center{ci}_family_max_n{n}"), summary.family_max);
                c.metric(format!("center{ci}_family_max_log_raw_n{n}"), summary.family_max_log_raw);
                c.require(summary.skipped == 0, "no degenerate members");
                max_n.push(summary.family_max);
                max_log.push(summary.family_max_log_raw);
            }
            let change = relative_change(max_n[0], max_n[1]);
            let raw_change = relative_change_log(max_log[0], max_log[1]);
            c.metric(format!("center{ci}_relative_change"), change);
            c.metric(format!("center{ci}_raw_relative_change"), raw_change);
            c.require(change < 0.05, format!("family max N stable within 5% (center {ci})"));
            c.require(raw_change < 0.05, format!("unclipped family max N stable within 5% (center {ci})"));
        }
        c.metric("identity_relative_error", identity_error);
        c.metric("bracket_coefficient_error", coefficient_error);
        c.require(identity_error <= 1e-10, "exponent identity to 1e-10 relative");
        c.require(coefficient_error <= 1e-12, "lambda0 gives bracket coefficient 1/2");
        Ok(c)
    })
}

pub fn criterion_doubling(opts: &SuiteOptions) -> Result<CriterionResult> {
    timed(|| {
        let mut c = CriterionResult::new(7, "doubling constant finite, >= 1 and refinement-stable");
        let mut sup = Vec::new();
        for n in INTERP_GRIDS {
            let b = basis(n, 1.0, 0.0, 4)?;
            let family = interp_family(&b, 50, opts.seed)?;
            let ratios = family
                .par_iter()
                .map(|s| check_doubling(s, 0.2, [0.0; 3], INTERP_TERMINAL))
                .collect::<Result<Vec<_>>>()?;
            let s = ratios.iter().copied().fold(0.0, f64::max);
            let low = ratios.iter().copied().fold(f64::INFINITY, f64::min);
            c.metric(format!("sup_ratio_n{n}"), s);
            c.metric(format!("min_ratio_n{n}"), low);
            c.require(s.is_finite(), "finite supremum");
            c.require(low >= 1.0, "every ratio >= 1");
            sup.push(s);
        }
        let change = relative_change(sup[0], sup[1]);
        c.metric("relative_change", change);
        c.require(change < 0.05, "stable within 5%");
        Ok(c)
    })
}

pub struct BackwardCase {
    pub center: Point,
    pub local_radius: f64,
    pub delta: f64,
    pub terminal: f64,
    pub k: f64,
}

/// `1/h₀` is of order 10⁵ here, so `O(h²)` energy errors move `log C` by
/// tenths on coarser grids.
pub const BACKWARD_GRIDS: [usize; 2] = [511, 1023];

pub const BACKWARD_CASES: [BackwardCase; 4] = [
    BackwardCase { center: [0.0; 3], local_radius: 0.4, delta: 0.5, terminal: 0.5, k: 0.0 },
    BackwardCase { center: [0.0, 0.0, 0.3], local_radius: 0.3, delta: 0.5, terminal: 1.0, k: 0.0 },
    BackwardCase { center: [0.0; 3], local_radius: 0.4, delta: 0.5, terminal: 0.5, k: 1.0 },
    BackwardCase { center: [0.0, 0.0, 0.3], local_radius: 0.3, delta: 0.5, terminal: 1.0, k: 1.0 },
];

pub fn criterion_backward(opts: &SuiteOptions) -> Result<CriterionResult> {
    timed(|| {
        let mut c = CriterionResult::new(8, "backward estimate: h0 in (0, T), minimal C stable within 10%");
        for (ci, case) in BACKWARD_CASES.iter().enumerate() {
            let mut logs = Vec::new();
            for n in BACKWARD_GRIDS {
                let b = basis(n, 1.0, case.k, 3)?;
                let family = random_family(&b, 20, 5, ModeRange { l_max: 3, radial: 4 }, opts.seed.wrapping_add(20_000))?;
                let reports = family
                    .par_iter()
                    .map(|s| check_backward_estimate(s, case.center, case.local_radius, case.delta, case.terminal, 17))
                    .collect::<Result<Vec<_>>>()?;
                let h0_ok = reports.iter().all(|r| r.window.h0 > 0.0 && r.window.h0 < case.terminal);
                let max_log = reports.iter().map(|r| r.max_log_c).fold(f64::NEG_INFINITY, f64::max);
                let min_h0 = reports.iter().map(|r| r.window.h0).fold(f64::INFINITY, f64::min);
                c.metric(format!("case{ci}_max_log_c_n{n}"), max_log);
                c.metric(format!("case{ci}_min_h0_n{n}"), min_h0);
                c.require(h0_ok, format!("h0 in (0, T) for case {ci}"));
                c.require(max_log.is_finite(), format!("finite constant for case {ci}"));
                logs.push(max_log);
            }
            let change = relative_change_log(logs[0], logs[1]);
            c.metric(format!("case{ci}_relative_change"), change);
            c.require(change <= 0.10, format!("stable within 10% for case {ci}"));
        }
        Ok(c)
    })
}

pub const CHAIN_CENTERS: [f64; 3] = [-0.3, -0.1, 0.1];
pub const CHAIN_RADIUS: f64 = 0.2;
pub const CHAIN_EXPONENT: f64 = 0.5;

pub fn criterion_chain(opts: &SuiteOptions) -> Result<CriterionResult> {
    timed(|| {
        let mut c = CriterionResult::new(9, "chain composition: associativity and composed inequality");
        let b = basis(511, 1.0, 0.0, 4)?;
        let family = interp_family(&b, 20, opts.seed.wrapping_add(1))?;
        let t = INTERP_TERMINAL;
        let balls: Vec<(Ball, Ball)> = CHAIN_CENTERS
            .iter()
            .map(|&z| Ok((Ball::new([0.0, 0.0, z], 2.0 * CHAIN_RADIUS)?, Ball::new([0.0, 0.0, z], CHAIN_RADIUS)?)))
            .collect::<Result<_>>()?;
        let quads = balls
            .iter()
            .map(|(a, o)| Ok((a.quadrature()?, o.quadrature()?)))
            .collect::<Result<Vec<_>>>()?;
        // per member: E0 and (E_target, E_obs) for each link
        let energies: Vec<(f64, Vec<(f64, f64)>)> = family
            .par_iter()
            .map(|s| {
                let f = s.field(t);
                (s.energy(0.0), quads.iter().map(|(qa, qo)| (f.ball_energy(qa), f.ball_energy(qo))).collect())
            })
            .collect();
        let links = balls
            .iter()
            .enumerate()
            .map(|(i, (target, observed))| {
                let n = energies
                    .iter()
                    .map(|(e0, e)| minimal_link_constant(*e0, e[i].0, e[i].1, CHAIN_EXPONENT, t))
                    .fold(1.0, f64::max);
                EstimateRecord::new(n, CHAIN_EXPONENT, *target, *observed)
            })
            .collect::<Result<Vec<_>>>()?;
        let composed = compose_chain(&links)?;
        let left = compose_chain(&[compose_chain(&links[..2])?, links[2].clone()])?;
        let right = compose_chain(&[links[0].clone(), compose_chain(&links[1..])?])?;
        c.require(left == right && left == composed, "associativity is exact");
        let mut worst = f64::INFINITY;
        let mut worst_link = f64::INFINITY;
        for (e0, e) in &energies {
            let slack = composed.log_rhs(*e0, e[2].1, t) - e[0].0.ln();
            let tol = 1e-9 * (1.0 + e[0].0.ln().abs());
            worst = worst.min(slack / tol);
            for (link, (et, eo)) in links.iter().zip(e) {
                worst_link = worst_link.min((link.log_rhs(*e0, *eo, t) - et.ln()) / (1e-9 * (1.0 + et.ln().abs())));
            }
        }
        for (i, l) in links.iter().enumerate() {
            c.metric(format!("link{i}_constant"), l.constant);
        }
        c.metric("composed_constant", composed.constant);
        c.metric("composed_exponent", composed.exponent());
        c.metric("worst_slack_over_tol", worst);
        c.metric("worst_link_slack_over_tol", worst_link);
        c.require(worst >= -1.0, "composed inequality slack >= -tol on the family");
        c.require(worst_link >= -1.0, "every link holds with its constant");
        Ok(c)
    })
}

/// Criteria 1 to 9. Determinism and total runtime are properties of running
/// this twice and are checked by the caller.
pub fn run_suite(opts: &SuiteOptions) -> Result<SuiteReport> {
    let criteria = vec![
        criterion_spectrum()?,
        criterion_hardy_threshold()?,
        criterion_hardy_slack(opts)?,
        criterion_frequency_k0(opts)?,
        criterion_gronwall(opts)?,
        criterion_interpolation(opts)?,
        criterion_doubling(opts)?,
        criterion_backward(opts)?,
        criterion_chain(opts)?,
    ];
    Ok(SuiteReport { options: *opts, hardy_tol: HARDY_TOL, criteria })
}
