//! Exact-in-time evolution by eigen-expansion.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{config, Result};
use crate::field::ModalField;
use crate::grid::RadialGrid;
use crate::legendre::zonal;
use crate::quadrature::gauss_legendre;
use crate::spectral::operator::{ModalOperator, ModalSpectrum};

/// Fraction of the sampled energy that may fall outside the retained modes
/// before projection warns.
pub const TAIL_WARNING: f64 = 0.01;

/// Eigendecompositions of `A_0, …, A_L` on a common grid.
#[derive(Debug)]
pub struct SpectralBasis {
    grid: RadialGrid,
    k: f64,
    spectra: Vec<ModalSpectrum>,
}

impl SpectralBasis {
    pub fn new(grid: RadialGrid, k: f64, l_max: usize) -> Result<Arc<Self>> {
        let spectra = (0..=l_max)
            .into_par_iter()
            .map(|l| ModalOperator::new(l, k, grid.clone()).eigendecompose())
            .collect::<Result<Vec<_>>>()?;
        Ok(Arc::new(Self { grid, k, spectra }))
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn l_max(&self) -> usize {
        self.spectra.len() - 1
    }

    pub fn spectrum(&self, l: usize) -> &ModalSpectrum {
        &self.spectra[l]
    }
}

/// Initial eigen-coefficients per angular mode plus the time already elapsed.
///
/// Coefficients at the current time are `c_{l,j} e^{−λ_{l,j}·elapsed}`; they
/// are always recomputed from the initial ones, so successive evolutions
/// compose exactly.
#[derive(Debug, Clone)]
pub struct ModalSolution {
    basis: Arc<SpectralBasis>,
    initial: Vec<Vec<f64>>,
    elapsed: f64,
}

/// Result of projecting sampled initial data.
#[derive(Debug, Clone)]
pub struct Projection {
    pub solution: ModalSolution,
    /// Share of the sampled `∫u₀²` not captured by modes `l ≤ L`.
    pub tail_fraction: f64,
}

impl ModalSolution {
    /// Builds a solution from per-mode coefficient vectors; shorter vectors
    /// are zero-padded, modes above the basis' `L` are rejected.
    pub fn from_coefficients(basis: Arc<SpectralBasis>, coeffs: Vec<Vec<f64>>) -> Result<Self> {
        let n = basis.grid.len();
        if coeffs.len() > basis.spectra.len() {
            return config(format!(
                "coefficients given for l up to {}, basis stops at {}",
                coeffs.len() - 1,
                basis.l_max()
            ));
        }
        let mut initial = vec![vec![0.0; n]; basis.spectra.len()];
        for (dst, src) in initial.iter_mut().zip(coeffs) {
            if src.len() > n {
                return config(format!("{} coefficients exceed the {n} eigenmodes", src.len()));
            }
            dst[..src.len()].copy_from_slice(&src);
        }
        Ok(Self { basis, initial, elapsed: 0.0 })
    }

    /// Sparse form: `(l, j, c)` triples with 0-based `j`.
    pub fn from_modes(basis: Arc<SpectralBasis>, modes: &[(usize, usize, f64)]) -> Result<Self> {
        let mut coeffs: Vec<Vec<f64>> = vec![Vec::new(); basis.spectra.len()];
        for &(l, j, c) in modes {
            if l > basis.l_max() || j >= basis.grid.len() {
                return config(format!("mode ({l}, {j}) outside the basis"));
            }
            let v = &mut coeffs[l];
            if v.len() <= j {
                v.resize(j + 1, 0.0);
            }
            v[j] += c;
        }
        Self::from_coefficients(basis, coeffs)
    }

    /// Legendre transform in `cos θ` at every radial node, then eigen-projection
    /// of `w_l = r·u_l` for `l ≤ L` (the basis' `L`).
    pub fn project_initial(
        basis: Arc<SpectralBasis>,
        data: impl Fn(f64, f64) -> f64 + Sync,
    ) -> Result<Projection> {
        let l_max = basis.l_max();
        let polar_order = (2 * l_max + 8).max(64);
        let (mus, weights) = gauss_legendre(polar_order);
        let ylm: Vec<Vec<f64>> = mus.iter().map(|&mu| zonal(l_max, mu)).collect();
        let two_pi = 2.0 * std::f64::consts::PI;
        let grid = &basis.grid;

        // rows: per radial node, (w_0..w_L, ∫_S u² dσ · r²)
        let rows: Vec<(Vec<f64>, f64)> = grid
            .nodes()
            .par_iter()
            .map(|&r| {
                let mut w = vec![0.0; l_max + 1];
                let mut sphere = 0.0;
                for ((mu, wq), y) in mus.iter().zip(&weights).zip(&ylm) {
                    let u = data(r, *mu);
                    sphere += two_pi * wq * u * u;
                    for (acc, yl) in w.iter_mut().zip(y) {
                        *acc += two_pi * wq * u * yl;
                    }
                }
                w.iter_mut().for_each(|v| *v *= r);
                (w, sphere * r * r)
            })
            .collect();

        let h = grid.spacing();
        let total: f64 = h * rows.iter().map(|(_, s)| s).sum::<f64>();
        let mut captured = 0.0;
        let mut initial = Vec::with_capacity(l_max + 1);
        for l in 0..=l_max {
            let wl: Vec<f64> = rows.iter().map(|(w, _)| w[l]).collect();
            captured += h * wl.iter().map(|v| v * v).sum::<f64>();
            initial.push(basis.spectra[l].project(&wl));
        }
        let tail_fraction = if total > 0.0 { ((total - captured) / total).max(0.0) } else { 0.0 };
        if tail_fraction > TAIL_WARNING {
            log::warn!(
                "initial data keeps {:.2}% of its energy above l = {l_max}",
                100.0 * tail_fraction
            );
        }
        Ok(Projection { solution: Self { basis, initial, elapsed: 0.0 }, tail_fraction })
    }

    pub fn basis(&self) -> &Arc<SpectralBasis> {
        &self.basis
    }

    pub fn elapsed(&self) -> f64 {
        self.elapsed
    }

    /// Highest `l` with a nonzero coefficient (0 for the zero solution).
    pub fn active_l_max(&self) -> usize {
        self.initial.iter().rposition(|c| c.iter().any(|&v| v != 0.0)).unwrap_or(0)
    }

    /// `Σ c_{l,j}²` of the stored initial coefficients.
    pub fn initial_energy(&self) -> f64 {
        self.initial.iter().flatten().map(|c| c * c).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.initial.iter().all(|c| c.iter().all(|&v| v == 0.0))
    }

    pub fn initial_coefficients(&self) -> &[Vec<f64>] {
        &self.initial
    }

    /// The solution `t` time units later.
    pub fn evolve(&self, t: f64) -> Self {
        assert!(t >= 0.0, "evolution time must be non-negative, got {t}");
        Self { basis: Arc::clone(&self.basis), initial: self.initial.clone(), elapsed: self.elapsed + t }
    }

    /// Multiplies every coefficient by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let initial = self.initial.iter().map(|v| v.iter().map(|x| c * x).collect()).collect();
        Self { basis: Arc::clone(&self.basis), initial, elapsed: self.elapsed }
    }

    /// Coefficients `t` time units after the current state.
    pub fn coefficients(&self, t: f64) -> Vec<Vec<f64>> {
        let s = self.elapsed + t;
        self.initial
            .iter()
            .zip(&self.basis.spectra)
            .map(|(c, spec)| {
                c.iter().zip(spec.values()).map(|(c, lam)| if *c == 0.0 { 0.0 } else { c * (-lam * s).exp() }).collect()
            })
            .collect()
    }

    /// Radial profiles `w_l(r_i)` at time `elapsed + t`.
    pub fn profiles(&self, t: f64) -> Vec<Vec<f64>> {
        let n = self.basis.grid.len();
        self.coefficients(t)
            .iter()
            .zip(&self.basis.spectra)
            .map(|(c, spec)| {
                let mut w = vec![0.0; n];
                for (j, &cj) in c.iter().enumerate() {
                    if cj != 0.0 {
                        for (acc, v) in w.iter_mut().zip(spec.vector(j)) {
                            *acc += cj * v;
                        }
                    }
                }
                w
            })
            .collect()
    }

    pub fn field(&self, t: f64) -> ModalField {
        ModalField::new(Arc::clone(&self.basis), self.profiles(t))
    }

    /// `‖u(·, elapsed + t)‖²_{L²(Ω)}` by Parseval.
    pub fn energy(&self, t: f64) -> f64 {
        self.coefficients(t).iter().flatten().map(|c| c * c).sum()
    }

    /// `∫_Ω |∇u|² dx = Σ λ c² + k ∫ u²/|x| dx` at time `elapsed + t`.
    pub fn grad_energy(&self, t: f64) -> f64 {
        let coeffs = self.coefficients(t);
        let quadratic: f64 = coeffs
            .iter()
            .zip(&self.basis.spectra)
            .map(|(c, spec)| c.iter().zip(spec.values()).map(|(c, lam)| lam * c * c).sum::<f64>())
            .sum();
        if self.basis.k == 0.0 {
            return quadratic;
        }
        let h = self.basis.grid.spacing();
        let nodes = self.basis.grid.nodes();
        let coulomb: f64 = self
            .profiles(t)
            .iter()
            .map(|w| w.iter().zip(nodes).map(|(w, r)| w * w / r).sum::<f64>())
            .sum();
        quadratic + self.basis.k * h * coulomb
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn basis(k: f64, n: usize, l_max: usize) -> Arc<SpectralBasis> {
        SpectralBasis::new(RadialGrid::new(1.0, n).unwrap(), k, l_max).unwrap()
    }

    #[test]
    fn semigroup_is_exact() {
        let b = basis(1.0, 63, 2);
        let s = ModalSolution::from_modes(b, &[(0, 0, 0.6), (1, 2, -0.8), (2, 5, 0.3)]).unwrap();
        let a = s.evolve(0.013).evolve(0.27);
        let c = s.evolve(0.013 + 0.27);
        assert_eq!(a.coefficients(0.0), c.coefficients(0.0));
        assert_eq!(s.evolve(0.0).coefficients(0.0), s.coefficients(0.0));
    }

    #[test]
    fn single_mode_decay() {
        let b = basis(0.0, 255, 1);
        let s = ModalSolution::from_modes(b.clone(), &[(1, 3, 1.0)]).unwrap();
        let lam = b.spectrum(1).value(3);
        let ratio = (s.energy(0.05) / s.energy(0.0)).sqrt();
        assert!((ratio - (-lam * 0.05).exp()).abs() < 1e-15);
    }

    #[test]
    fn first_mode_energy_ratio() {
        let b = basis(0.0, 1023, 0);
        let s = ModalSolution::from_modes(b, &[(0, 0, 1.0)]).unwrap();
        let want = (-2.0 * PI * PI * 0.1).exp();
        assert!((s.energy(0.1) - want).abs() < 1e-4 * want);
        assert!((want - 0.138911).abs() < 1e-6);
    }

    #[test]
    fn projection_of_radial_data_stays_in_l0() {
        let b = basis(0.0, 127, 3);
        let p = ModalSolution::project_initial(b, |r, _| (1.0 - r * r) * (-r).exp()).unwrap();
        for l in 1..=3 {
            assert!(p.solution.initial_coefficients()[l].iter().all(|c| c.abs() < 1e-14));
        }
        assert!(p.tail_fraction < 1e-10);
    }

    #[test]
    fn projection_of_l1_data_has_no_leakage() {
        let b = basis(0.0, 127, 4);
        let p = ModalSolution::project_initial(b, |r, mu| mu * r * (1.0 - r)).unwrap();
        let c = p.solution.initial_coefficients();
        let main: f64 = c[1].iter().map(|x| x * x).sum::<f64>().sqrt();
        for l in [0, 2, 3, 4] {
            let leak: f64 = c[l].iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(leak <= 1e-8 * main, "l={l}: {leak}");
        }
    }

    #[test]
    fn projection_recovers_eigenfunction() {
        let b = basis(0.0, 255, 0);
        let spec = b.spectrum(0);
        let v: Vec<f64> = spec.vector(0).to_vec();
        let nodes = b.grid().nodes().to_vec();
        let h = b.grid().spacing();
        let y0 = (1.0 / (4.0 * PI)).sqrt();
        let data = move |r: f64, _mu: f64| {
            let i = ((r / h).round() as usize).clamp(1, nodes.len()) - 1;
            v[i] / nodes[i] * y0 * 2.5
        };
        let p = ModalSolution::project_initial(b, data).unwrap();
        let c = &p.solution.initial_coefficients()[0];
        assert!((c[0] - 2.5).abs() < 1e-12);
        assert!(c[1..].iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn energy_monotone_for_k0_and_zero_solution() {
        let b = basis(0.0, 127, 2);
        let s = ModalSolution::from_modes(b.clone(), &[(0, 1, 0.5), (2, 0, 0.5)]).unwrap();
        let e: Vec<f64> = (0..20).map(|i| s.energy(0.01 * i as f64)).collect();
        assert!(e.windows(2).all(|w| w[1] <= w[0]));
        let z = ModalSolution::from_coefficients(b, vec![]).unwrap();
        assert!(z.is_zero());
        assert_eq!(z.energy(0.3), 0.0);
        assert_eq!(z.grad_energy(0.3), 0.0);
    }

    #[test]
    fn grad_energy_of_first_sine_mode() {
        let b = basis(0.0, 1023, 0);
        let s = ModalSolution::from_modes(b, &[(0, 0, 1.0)]).unwrap();
        let ratio = s.grad_energy(0.0) / s.energy(0.0);
        assert!((ratio - PI * PI).abs() / (PI * PI) < 1e-5);
    }
}
