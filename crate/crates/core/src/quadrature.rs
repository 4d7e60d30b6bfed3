//! Quadrature rules: Gauss–Legendre, trapezoid on the radial grid, and
//! azimuthally symmetric ball integrals.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::RadialGrid;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite trapezoid over `[0, R]` with spacing `h`: interior samples plus
/// explicit endpoint values.
pub(crate) fn trapezoid(h: f64, left: f64, interior: &[f64], right: f64) -> f64 {
    h * (0.5 * (left + right) + interior.iter().sum::<f64>())
}

/// Quadratic extrapolation of a sampled function to the grid endpoints.
fn extrapolate_ends(f: &[f64]) -> (f64, f64) {
    let n = f.len();
    let left = 3.0 * f[0] - 3.0 * f[1] + f[2];
    let right = 3.0 * f[n - 1] - 3.0 * f[n - 2] + f[n - 3];
    (left, right)
}

/// Trapezoid integral of a radial function sampled at the interior nodes.
///
/// Endpoint values are obtained by quadratic extrapolation, so Dirichlet
/// samples need no special handling. With `volume_weighted` the result is
/// `4π ∫₀ᴿ f(r) r² dr`, i.e. the integral of the radial function over the ball.
pub fn integrate_radial(grid: &RadialGrid, f: &[f64], volume_weighted: bool) -> Result<f64> {
    if f.len() != grid.len() {
        return Err(Error::Shape { expected: grid.len(), got: f.len() });
    }
    let (f0, f_end) = extrapolate_ends(f);
    if volume_weighted {
        let r = grid.nodes();
        let rr = grid.radius();
        let g: Vec<f64> = f.iter().zip(r).map(|(v, r)| v * r * r).collect();
        Ok(4.0 * PI * trapezoid(grid.spacing(), 0.0, &g, f_end * rr * rr))
    } else {
        Ok(trapezoid(grid.spacing(), f0, f, f_end))
    }
}

/// Tensor rule on a ball `B_ρ(c e_z)`: Gauss–Legendre in the local radius
/// (with the `r²` measure folded into the weights) and in the local `cos θ`.
///
/// Integrands must be independent of the azimuth about the z-axis; the
/// azimuthal integral contributes the factor `2π`.
#[derive(Debug, Clone)]
pub struct BallQuadrature {
    radius: f64,
    offset: f64,
    radial_nodes: Vec<f64>,
    radial_weights: Vec<f64>,
    polar_nodes: Vec<f64>,
    polar_weights: Vec<f64>,
}

pub const DEFAULT_BALL_ORDERS: (usize, usize) = (48, 48);

impl BallQuadrature {
    pub fn new(radius: f64, offset: f64, radial_order: usize, polar_order: usize) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Geometry(format!("ball radius must be positive, got {radius}")));
        }
        if radial_order == 0 || polar_order == 0 {
            return Err(Error::Config("quadrature orders must be positive".into()));
        }
        let (xr, wr) = gauss_legendre(radial_order);
        let radial_nodes: Vec<f64> = xr.iter().map(|x| 0.5 * radius * (1.0 + x)).collect();
        let radial_weights = wr
            .iter()
            .zip(&radial_nodes)
            .map(|(w, r)| 0.5 * radius * w * r * r)
            .collect();
        let (polar_nodes, polar_weights) = gauss_legendre(polar_order);
        Ok(Self { radius, offset, radial_nodes, radial_weights, polar_nodes, polar_weights })
    }

    pub fn with_default_orders(radius: f64, offset: f64) -> Result<Self> {
        Self::new(radius, offset, DEFAULT_BALL_ORDERS.0, DEFAULT_BALL_ORDERS.1)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn orders(&self) -> (usize, usize) {
        (self.radial_nodes.len(), self.polar_nodes.len())
    }

    /// `2π Σ w g(r, cos θ)` in coordinates local to the ball center.
    pub fn integrate(&self, g: impl Fn(f64, f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for (r, wr) in self.radial_nodes.iter().zip(&self.radial_weights) {
            let mut inner = 0.0;
            for (mu, wm) in self.polar_nodes.iter().zip(&self.polar_weights) {
                inner += wm * g(*r, *mu);
            }
            acc += wr * inner;
        }
        2.0 * PI * acc
    }

    /// Quadrature points in global spherical coordinates `(|x|, cos Θ)` about
    /// the origin, with weights including the `2π` azimuthal factor.
    pub fn global_points(&self) -> Vec<(f64, f64, f64)> {
        let c = self.offset;
        let mut out = Vec::with_capacity(self.radial_nodes.len() * self.polar_nodes.len());
        for (r, wr) in self.radial_nodes.iter().zip(&self.radial_weights) {
            for (mu, wm) in self.polar_nodes.iter().zip(&self.polar_weights) {
                let (rg, mg) = to_global(*r, *mu, c);
                out.push((rg, mg, 2.0 * PI * wr * wm));
            }
        }
        out
    }
}

/// Maps local polar coordinates about `c e_z` to polar coordinates about 0.
pub fn to_global(r: f64, mu: f64, c: f64) -> (f64, f64) {
    let z = c + r * mu;
    let rg = (r * r + c * c + 2.0 * r * c * mu).max(0.0).sqrt();
    if rg == 0.0 {
        (0.0, 1.0)
    } else {
        (rg, (z / rg).clamp(-1.0, 1.0))
    }
}

/// Convenience wrapper around [`BallQuadrature::integrate`].
pub fn integrate_ball(q: &BallQuadrature, g: impl Fn(f64, f64) -> f64) -> f64 {
    q.integrate(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_exactness() {
        for n in [1, 2, 5, 16, 47] {
            let (x, w) = gauss_legendre(n);
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            assert!(w.iter().all(|&w| w > 0.0));
            for deg in 0..(2 * n) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn radial_integrals() {
        let g = RadialGrid::new(1.0, 511).unwrap();
        let ones = vec![1.0; g.len()];
        let v = integrate_radial(&g, &ones, true).unwrap();
        assert!((v - 4.0 * PI / 3.0).abs() < 1e-4);
        let lin: Vec<f64> = g.nodes().to_vec();
        assert!((integrate_radial(&g, &lin, false).unwrap() - 0.5).abs() < 1e-6);
        // squared first Dirichlet mode shape: 4π ∫ sin²(πr) dr = 2π
        let s: Vec<f64> = g.nodes().iter().map(|r| ((PI * r).sin() / r).powi(2)).collect();
        assert!((integrate_radial(&g, &s, true).unwrap() - 2.0 * PI).abs() < 1e-3);
        assert!(matches!(integrate_radial(&g, &ones[1..], true), Err(Error::Shape { .. })));
    }

    #[test]
    fn trapezoid_is_second_order() {
        let f = |r: f64| (3.0 * r).cos() * r;
        let exact = ((3.0f64).sin() * 3.0 + (3.0f64).cos() - 1.0) / 9.0;
        let err = |n: usize| {
            let g = RadialGrid::new(1.0, n).unwrap();
            let s: Vec<f64> = g.nodes().iter().map(|&r| f(r)).collect();
            (integrate_radial(&g, &s, false).unwrap() - exact).abs()
        };
        for n in [31, 63, 127] {
            let ratio = err(n) / err(2 * n + 1);
            assert!(ratio >= 3.5, "n={n}: ratio {ratio}");
        }
    }

    #[test]
    fn ball_volume_and_symmetry() {
        let q = BallQuadrature::with_default_orders(1.0, 0.0).unwrap();
        assert_relative_eq!(q.integrate(|_, _| 1.0), 4.0 * PI / 3.0, max_relative = 1e-12);
        assert!(q.integrate(|r, mu| r * mu).abs() < 1e-10);
        let q = BallQuadrature::with_default_orders(0.4, 0.3).unwrap();
        assert_relative_eq!(q.integrate(|_, _| 1.0), 4.0 * PI * 0.064 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn ball_polynomial_exactness() {
        // z^a (x²+y²)^b over the unit ball: analytic via the beta function.
        let (nr, nt) = (12, 8);
        let q = BallQuadrature::new(1.0, 0.0, nr, nt).unwrap();
        let exact = |a: i32, b: i32| -> f64 {
            // ∫ r^{a+2b+2} dr · 2π ∫ μ^a (1-μ²)^b dμ
            let radial = 1.0 / (a + 2 * b + 3) as f64;
            let (x, w) = gauss_legendre(40);
            let polar: f64 =
                x.iter().zip(&w).map(|(m, w)| w * m.powi(a) * (1.0 - m * m).powi(b)).sum();
            2.0 * PI * radial * polar
        };
        for (a, b) in [(0, 0), (2, 0), (0, 1), (4, 1), (2, 3), (6, 0), (1, 2)] {
            assert!(a + 2 * b < 2 * nt as i32);
            let v = q.integrate(|r, mu| (r * mu).powi(a) * (r * r * (1.0 - mu * mu)).powi(b));
            let e = exact(a, b);
            assert!((v - e).abs() <= 10.0 * f64::EPSILON * e.abs().max(1.0), "a={a} b={b}");
        }
    }

    #[test]
    fn ball_gaussian_against_radial_oracle() {
        // oracle: 4π ∫₀³ e^{-r²} r² dr by composite Simpson with 20000 panels
        let n = 20000;
        let h = 3.0 / n as f64;
        let f = |r: f64| (-r * r).exp() * r * r;
        let mut s = f(0.0) + f(3.0);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        let oracle = 4.0 * PI * s * h / 3.0;
        let q = BallQuadrature::with_default_orders(3.0, 0.0).unwrap();
        let v = q.integrate(|r, _| (-r * r).exp());
        assert_relative_eq!(v, oracle, max_relative = 1e-10);
    }

    #[test]
    fn global_coordinates() {
        let (r, mu) = to_global(0.2, 1.0, 0.3);
        assert_relative_eq!(r, 0.5);
        assert_relative_eq!(mu, 1.0);
        let (r, mu) = to_global(0.3, -1.0, 0.3);
        assert_eq!((r, mu), (0.0, 1.0));
        let (r, mu) = to_global(0.4, 0.0, 0.3);
        assert_relative_eq!(r, 0.5);
        assert_relative_eq!(mu, 0.6);
    }
}
