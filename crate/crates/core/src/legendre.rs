//! Orthonormal zonal harmonics `Y_l(cos θ) = sqrt((2l+1)/4π) P_l(cos θ)`.
//!
//! Normalized so that `2π ∫_{-1}^{1} Y_l Y_m dμ = δ_lm`; with this choice
//! `u = Σ_l (w_l(r)/r) Y_l(μ)` has `∫_Ω u² dx = Σ_l ∫₀ᴿ w_l² dr`.

use std::f64::consts::PI;

/// Values `Y_0(μ), …, Y_L(μ)`.
pub fn zonal(l_max: usize, mu: f64) -> Vec<f64> {
    let mut p = legendre_p(l_max, mu);
    for (l, v) in p.iter_mut().enumerate() {
        *v *= norm(l);
    }
    p
}

/// `sin θ · dY_l/dμ` for `l = 0..=L`, valid for `|μ| < 1`.
pub fn zonal_sin_derivative(l_max: usize, mu: f64) -> Vec<f64> {
    let p = legendre_p(l_max, mu);
    let s = (1.0 - mu * mu).max(0.0).sqrt();
    (0..=l_max)
        .map(|l| {
            if l == 0 || s == 0.0 {
                0.0
            } else {
                // (1-μ²) P_l' = l (P_{l-1} - μ P_l)
                norm(l) * l as f64 * (p[l - 1] - mu * p[l]) / s
            }
        })
        .collect()
}

fn norm(l: usize) -> f64 {
    ((2 * l + 1) as f64 / (4.0 * PI)).sqrt()
}

/// Unnormalized Legendre polynomials `P_0(μ), …, P_L(μ)`.
pub fn legendre_p(l_max: usize, mu: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(l_max + 1);
    p.push(1.0);
    if l_max >= 1 {
        p.push(mu);
    }
    for l in 2..=l_max {
        let lf = l as f64;
        let next = ((2.0 * lf - 1.0) * mu * p[l - 1] - (lf - 1.0) * p[l - 2]) / lf;
        p.push(next);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre;

    #[test]
    fn orthonormal_on_sphere() {
        let (x, w) = gauss_legendre(24);
        let l_max = 10;
        let mut gram = vec![0.0; (l_max + 1) * (l_max + 1)];
        for (mu, wq) in x.iter().zip(&w) {
            let y = zonal(l_max, *mu);
            for a in 0..=l_max {
                for b in 0..=l_max {
                    gram[a * (l_max + 1) + b] += 2.0 * PI * wq * y[a] * y[b];
                }
            }
        }
        for a in 0..=l_max {
            for b in 0..=l_max {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((gram[a * (l_max + 1) + b] - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn angular_dirichlet_form() {
        // 2π ∫ (sinθ Y_l')² dμ = l(l+1)
        let (x, w) = gauss_legendre(30);
        for l in 0..8 {
            let v: f64 = x
                .iter()
                .zip(&w)
                .map(|(mu, wq)| 2.0 * PI * wq * zonal_sin_derivative(8, *mu)[l].powi(2))
                .sum();
            assert!((v - (l * (l + 1)) as f64).abs() < 1e-11, "l={l}: {v}");
        }
    }
}
