//! Reconstruction of `u(x, t) = Σ_l (w_l(r)/r) Y_l(cos θ)` and integrals of it.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::grid::RadialGrid;
use crate::legendre::{zonal, zonal_sin_derivative};
use crate::quadrature::{gauss_legendre, BallQuadrature};
use crate::spectral::SpectralBasis;

/// Default Gauss–Legendre order in `cos θ` for whole-domain integrals.
pub const DEFAULT_POLAR_ORDER: usize = 48;

/// A solution snapshot: radial profiles `w_l` at the interior grid nodes.
#[derive(Debug, Clone)]
pub struct ModalField {
    basis: Arc<SpectralBasis>,
    profiles: Vec<Vec<f64>>,
}

impl ModalField {
    pub fn new(basis: Arc<SpectralBasis>, profiles: Vec<Vec<f64>>) -> Self {
        Self { basis, profiles }
    }

    pub fn grid(&self) -> &RadialGrid {
        self.basis.grid()
    }

    pub fn profiles(&self) -> &[Vec<f64>] {
        &self.profiles
    }

    /// `w_l` interpolated at radius `r` by a four-point Lagrange stencil on the
    /// grid extended with the Dirichlet zeros at `0` and `R`.
    pub fn profile_at(&self, l: usize, r: f64) -> f64 {
        let (m, wts) = stencil(self.grid(), r);
        let w = &self.profiles[l];
        let n = w.len();
        let at = |i: usize| if i == 0 || i > n { 0.0 } else { w[i - 1] };
        (0..4).map(|s| wts[s] * at(m - 1 + s)).sum()
    }

    /// `u(r, cos θ)`; at the origin the `l = 0` limit `w_0'(0) Y_0` is used.
    pub fn value(&self, r: f64, mu: f64) -> f64 {
        let grid = self.grid();
        if r >= grid.radius() {
            return 0.0;
        }
        let l_max = self.profiles.len().saturating_sub(1);
        if r <= 1e-12 * grid.radius() {
            let w = &self.profiles[0];
            return (4.0 * w[0] - w[1]) / (2.0 * grid.spacing()) * zonal(0, mu)[0];
        }
        let y = zonal(l_max, mu);
        (0..=l_max).map(|l| self.profile_at(l, r) * y[l]).sum::<f64>() / r
    }

    /// `∫_{ball} u² dx`.
    pub fn ball_energy(&self, q: &BallQuadrature) -> f64 {
        q.global_points()
            .iter()
            .map(|&(r, mu, w)| {
                let u = self.value(r, mu);
                w * u * u
            })
            .sum()
    }

    /// `w_l'` at `r = 0, r_1, …, r_N, R` (second order throughout).
    pub fn derivative_profiles(&self) -> Vec<Vec<f64>> {
        let h = self.grid().spacing();
        self.profiles
            .iter()
            .map(|w| {
                let n = w.len();
                let at = |i: usize| if i == 0 || i > n { 0.0 } else { w[i - 1] };
                let mut d = Vec::with_capacity(n + 2);
                d.push((4.0 * at(1) - at(2)) / (2.0 * h));
                for i in 1..=n {
                    d.push((at(i + 1) - at(i - 1)) / (2.0 * h));
                }
                d.push((3.0 * at(n + 1) - 4.0 * at(n) + at(n - 1)) / (2.0 * h));
                d
            })
            .collect()
    }

    /// `u`, `∂_r u` and `(1/r)∂_θ u` on a [`SampleTable`].
    pub fn samples<'a>(&self, table: &'a SampleTable) -> FieldSamples<'a> {
        let n = self.grid().len();
        let q = table.mus.len();
        let l_used = self.profiles.len().min(table.l_max + 1);
        let dw = self.derivative_profiles();
        let mut u = vec![0.0; (n + 2) * q];
        let mut ur = vec![0.0; (n + 2) * q];
        let mut ut = vec![0.0; (n + 2) * q];

        // origin: only l = 0 survives
        for iq in 0..q {
            u[iq] = dw[0][0] * table.y[iq][0];
        }
        for i in 1..=n + 1 {
            let r = table.radii[i];
            let base = i * q;
            for l in 0..l_used {
                let w = if i <= n { self.profiles[l][i - 1] } else { 0.0 };
                let a = w / r;
                let b = dw[l][i] / r - w / (r * r);
                let c = -w / (r * r);
                if a == 0.0 && b == 0.0 {
                    continue;
                }
                for iq in 0..q {
                    u[base + iq] += a * table.y[iq][l];
                    ur[base + iq] += b * table.y[iq][l];
                    ut[base + iq] += c * table.sy[iq][l];
                }
            }
        }
        FieldSamples { table, u, ur, ut }
    }
}

/// Lagrange weights of the stencil `m−1..=m+2` on the extended grid.
fn stencil(grid: &RadialGrid, r: f64) -> (usize, [f64; 4]) {
    let n = grid.len();
    let t = r / grid.spacing();
    let m = (t.floor() as usize).clamp(1, n - 1);
    let s = t - m as f64;
    let w = [
        -s * (s - 1.0) * (s - 2.0) / 6.0,
        (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
        -(s + 1.0) * s * (s - 2.0) / 2.0,
        (s + 1.0) * s * (s - 1.0) / 6.0,
    ];
    (m, w)
}

/// Product rule on `Ω = B_R(0)`: trapezoid on `0, r_1, …, r_N, R` times
/// Gauss–Legendre in `cos θ`, with tabulated harmonics.
#[derive(Debug, Clone)]
pub struct SampleTable {
    l_max: usize,
    radii: Vec<f64>,
    mus: Vec<f64>,
    sines: Vec<f64>,
    /// `r² · h_i · 2π w_q`
    volume: Vec<f64>,
    /// `h_i · 2π w_q`
    flat: Vec<f64>,
    y: Vec<Vec<f64>>,
    sy: Vec<Vec<f64>>,
}

impl SampleTable {
    pub fn new(grid: &RadialGrid, l_max: usize, polar_order: usize) -> Self {
        let n = grid.len();
        let h = grid.spacing();
        let mut radii = Vec::with_capacity(n + 2);
        radii.push(0.0);
        radii.extend_from_slice(grid.nodes());
        radii.push(grid.radius());
        let (mus, pw) = gauss_legendre(polar_order);
        let mut volume = Vec::with_capacity((n + 2) * polar_order);
        let mut flat = Vec::with_capacity((n + 2) * polar_order);
        for (i, r) in radii.iter().enumerate() {
            let hr = if i == 0 || i == n + 1 { 0.5 * h } else { h };
            for w in &pw {
                flat.push(2.0 * PI * hr * w);
                volume.push(2.0 * PI * hr * w * r * r);
            }
        }
        let sines = mus.iter().map(|m: &f64| (1.0 - m * m).sqrt()).collect();
        let y = mus.iter().map(|&m| zonal(l_max, m)).collect();
        let sy = mus.iter().map(|&m| zonal_sin_derivative(l_max, m)).collect();
        Self { l_max, radii, mus, sines, volume, flat, y, sy }
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn polar_order(&self) -> usize {
        self.mus.len()
    }
}

/// One quadrature node with the field values there.
#[derive(Debug, Clone, Copy)]
pub struct SamplePoint {
    pub r: f64,
    pub mu: f64,
    pub sin: f64,
    pub u: f64,
    /// `∂_r u`
    pub ur: f64,
    /// `(1/r) ∂_θ u`
    pub ut: f64,
}

impl SamplePoint {
    pub fn grad2(&self) -> f64 {
        self.ur * self.ur + self.ut * self.ut
    }

    /// Squared distance to `c e_z`.
    pub fn dist2(&self, c: f64) -> f64 {
        (self.r * self.r + c * c - 2.0 * self.r * c * self.mu).max(0.0)
    }

    /// `(x − c e_z)·∇u`.
    pub fn radial_flux(&self, c: f64) -> f64 {
        (self.r - c * self.mu) * self.ur + c * self.sin * self.ut
    }
}

/// Whether integrals carry the `r²` volume factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    /// `dx`
    Volume,
    /// `dx / |x|²`
    InverseSquare,
}

#[derive(Debug, Clone)]
pub struct FieldSamples<'a> {
    table: &'a SampleTable,
    u: Vec<f64>,
    ur: Vec<f64>,
    ut: Vec<f64>,
}

impl FieldSamples<'_> {
    pub fn integrate(&self, measure: Measure, f: impl Fn(&SamplePoint) -> f64) -> f64 {
        let t = self.table;
        let q = t.mus.len();
        let weights = match measure {
            Measure::Volume => &t.volume,
            Measure::InverseSquare => &t.flat,
        };
        let mut acc = 0.0;
        for (i, &r) in t.radii.iter().enumerate() {
            let mut inner = 0.0;
            for iq in 0..q {
                let k = i * q + iq;
                if weights[k] == 0.0 {
                    continue;
                }
                let p = SamplePoint {
                    r,
                    mu: t.mus[iq],
                    sin: t.sines[iq],
                    u: self.u[k],
                    ur: self.ur[k],
                    ut: self.ut[k],
                };
                inner += weights[k] * f(&p);
            }
            acc += inner;
        }
        acc
    }

    pub fn energy(&self) -> f64 {
        self.integrate(Measure::Volume, |p| p.u * p.u)
    }

    pub fn grad_energy(&self) -> f64 {
        self.integrate(Measure::Volume, SamplePoint::grad2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::ModalSolution;

    fn basis(n: usize, l_max: usize) -> Arc<SpectralBasis> {
        SpectralBasis::new(RadialGrid::new(1.0, n).unwrap(), 0.0, l_max).unwrap()
    }

    #[test]
    fn parseval_on_table() {
        let b = basis(127, 3);
        let s = ModalSolution::from_modes(b.clone(), &[(0, 0, 0.3), (1, 2, 0.5), (3, 1, -0.7)]).unwrap();
        let table = SampleTable::new(b.grid(), 3, 16);
        let e = s.field(0.0).samples(&table).energy();
        assert!((e - s.energy(0.0)).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_quadratic_form() {
        let b = basis(511, 2);
        let s = ModalSolution::from_modes(b.clone(), &[(0, 0, 0.6), (2, 1, 0.8)]).unwrap();
        let table = SampleTable::new(b.grid(), 2, 16);
        let g = s.field(0.0).samples(&table).grad_energy();
        let want = s.grad_energy(0.0);
        assert!((g - want).abs() / want < 1e-4, "{g} vs {want}");
    }

    #[test]
    fn interpolated_value_matches_nodes() {
        let b = basis(63, 1);
        let s = ModalSolution::from_modes(b.clone(), &[(0, 0, 1.0), (1, 0, 0.5)]).unwrap();
        let f = s.field(0.0);
        let r = b.grid().nodes()[10];
        let y = zonal(1, 0.3);
        let want = (f.profiles()[0][10] * y[0] + f.profiles()[1][10] * y[1]) / r;
        assert!((f.value(r, 0.3) - want).abs() < 1e-12);
    }

    #[test]
    fn ball_energy_of_whole_domain() {
        let b = basis(511, 1);
        let s = ModalSolution::from_modes(b.clone(), &[(0, 0, 0.8), (1, 0, 0.6)]).unwrap();
        let q = BallQuadrature::with_default_orders(0.999, 0.0).unwrap();
        let e = s.field(0.0).ball_energy(&q);
        assert!((e - 1.0).abs() < 1e-4, "{e}");
    }
}
