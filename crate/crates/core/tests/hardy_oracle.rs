//! The improved Hardy constant from the tridiagonal eigensolver against a
//! Rayleigh–Ritz bound built from smooth trial profiles on the same grid.

use nalgebra::{DMatrix, SymmetricEigen};

use coulomb_uc::family::{full_combinations, origin_profiles, ModeRange};
use coulomb_uc::field::SampleTable;
use coulomb_uc::grid::RadialGrid;
use coulomb_uc::hardy::{check_hardy_improved, estimate_best_constant, improved_operator, HardyParams};
use coulomb_uc::spectral::SpectralBasis;

/// Lowest Rayleigh quotient of the operator over the span of `r^p(1−r)e^{−qr}`
/// and the same profiles times `log r`.
fn ritz_lowest(grid: &RadialGrid, m: f64, gamma: f64) -> f64 {
    let op = improved_operator(grid, m, gamma);
    let h = grid.spacing();
    let r = grid.nodes();
    let mut trial: Vec<Vec<f64>> = Vec::new();
    for p in [0.5, 0.55, 0.65, 0.8, 1.0, 1.5, 2.0] {
        for q in [0.0, 3.0, 10.0, 30.0] {
            trial.push(r.iter().map(|&x| x.powf(p) * (1.0 - x) * (-q * x).exp()).collect());
            trial.push(r.iter().map(|&x| x.powf(p) * (1.0 - x) * (-q * x).exp() * x.ln()).collect());
        }
    }
    let k = trial.len();
    let applied: Vec<Vec<f64>> = trial.iter().map(|w| op.apply(w)).collect();
    let dot = |a: &[f64], b: &[f64]| h * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let gram = DMatrix::from_fn(k, k, |i, j| dot(&trial[i], &trial[j]));
    let stiff = DMatrix::from_fn(k, k, |i, j| 0.5 * (dot(&trial[i], &applied[j]) + dot(&trial[j], &applied[i])));
    // Orthonormalize through the Gram eigenbasis, dropping near-dependent directions.
    let g = SymmetricEigen::new(gram);
    let top = g.eigenvalues.max();
    let keep: Vec<usize> = (0..k).filter(|&i| g.eigenvalues[i] > 1e-12 * top).collect();
    let basis = DMatrix::from_fn(k, keep.len(), |i, c| g.eigenvectors[(i, keep[c])] / g.eigenvalues[keep[c]].sqrt());
    let reduced = basis.transpose() * stiff * &basis;
    SymmetricEigen::new(reduced).eigenvalues.min()
}

#[test]
fn eigensolver_constant_matches_ritz_bound() {
    let grid = RadialGrid::new(1.0, 511).unwrap();
    let c = estimate_best_constant(&grid, 2.0, 1.0).unwrap();
    let ritz = (-ritz_lowest(&grid, 2.0, 1.0)).max(0.0);
    // Ritz values bound the discrete eigenvalue from above, so the constant from below.
    assert!(ritz <= c * (1.0 + 1e-9), "ritz {ritz} above eigensolver {c}");
    assert!((c - ritz).abs() <= 0.05 * c, "eigensolver {c} vs ritz {ritz}");
}

#[test]
fn improved_inequality_needs_a_positive_constant() {
    let b = SpectralBasis::new(RadialGrid::new(1.0, 511).unwrap(), 0.0, 4).unwrap();
    let table = SampleTable::new(b.grid(), 4, 48);
    let near_critical = origin_profiles(&b, &[0.51]);
    let params = HardyParams { lambda: 0.5, x0: [0.0; 3], m: 2.0, gamma: 1.0 };
    let bare = check_hardy_improved(&near_critical, &table, params, 0.0).unwrap();
    assert!(bare.min_slack < 0.0, "C = 0 should fail near the critical profile, slack {}", bare.min_slack);

    let c = estimate_best_constant(b.grid(), 2.0, 1.0).unwrap();
    let smooth = full_combinations(&b, 100, ModeRange { l_max: 4, radial: 6 }, 42).unwrap();
    for lambda in [0.05, 0.25, 1.0] {
        let report = check_hardy_improved(&smooth, &table, HardyParams { lambda, ..params }, c).unwrap();
        assert!(report.passed, "lambda {lambda}: {report:?}");
        assert_eq!(report.samples, 100);
    }
}
