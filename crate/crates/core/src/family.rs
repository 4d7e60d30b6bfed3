//! Seeded solution families and sample fields.

use std::sync::Arc;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{config, Result};
use crate::field::ModalField;
use crate::spectral::{ModalSolution, SpectralBasis};

/// Set of admissible `(l, j)` pairs, `j` 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeRange {
    pub l_max: usize,
    /// Number of radial indices per `l`.
    pub radial: usize,
}

impl ModeRange {
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (0..=self.l_max).flat_map(|l| (0..self.radial).map(move |j| (l, j))).collect()
    }
}

fn member_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(index as u64))
}

/// `size` solutions, each a unit-energy combination of `modes` distinct
/// pairs drawn from `range` with standard normal weights.
pub fn random_family(
    basis: &Arc<SpectralBasis>,
    size: usize,
    modes: usize,
    range: ModeRange,
    seed: u64,
) -> Result<Vec<ModalSolution>> {
    let pairs = range.pairs();
    if modes == 0 || modes > pairs.len() {
        return config(format!("cannot draw {modes} modes from {} candidates", pairs.len()));
    }
    if range.l_max > basis.l_max() {
        return config(format!("mode range needs l up to {}, basis has {}", range.l_max, basis.l_max()));
    }
    (0..size)
        .map(|i| {
            let mut rng = member_rng(seed, i);
            let mut picks = sample(&mut rng, pairs.len(), modes).into_vec();
            picks.sort_unstable();
            let coeffs: Vec<f64> = (0..modes).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
            let triples: Vec<_> =
                picks.iter().zip(&coeffs).map(|(&p, &c)| (pairs[p].0, pairs[p].1, c / norm)).collect();
            ModalSolution::from_modes(Arc::clone(basis), &triples)
        })
        .collect()
}

/// Fields with standard normal weights on every pair of `range`.
pub fn full_combinations(
    basis: &Arc<SpectralBasis>,
    count: usize,
    range: ModeRange,
    seed: u64,
) -> Result<Vec<ModalField>> {
    let pairs = range.pairs();
    random_family(basis, count, pairs.len(), range, seed).map(|f| f.iter().map(|s| s.field(0.0)).collect())
}

/// `l = 0` fields with `w(r) = r^s (R − r)`, i.e. `u = r^{s−1}(R − r)/Y_0`-scaled.
pub fn origin_profiles(basis: &Arc<SpectralBasis>, exponents: &[f64]) -> Vec<ModalField> {
    let grid = basis.grid();
    let rr = grid.radius();
    exponents
        .iter()
        .map(|&s| {
            let w0: Vec<f64> = grid.nodes().iter().map(|&r| r.powf(s) * (rr - r)).collect();
            let mut profiles = vec![vec![0.0; grid.len()]; basis.l_max() + 1];
            profiles[0] = w0;
            ModalField::new(Arc::clone(basis), profiles)
        })
        .collect()
}

/// Unit-energy radial bump supported in `R/2 < |x| < R`.
pub fn annulus_bump(basis: &Arc<SpectralBasis>) -> Result<ModalSolution> {
    let rr = basis.grid().radius();
    let p = ModalSolution::project_initial(Arc::clone(basis), move |r, _| {
        let s = (r - 0.5 * rr) / (0.5 * rr);
        if s > 0.0 && s < 1.0 {
            (std::f64::consts::PI * s).sin().powi(2)
        } else {
            0.0
        }
    })?;
    let e = p.solution.energy(0.0);
    Ok(p.solution.scaled(1.0 / e.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;

    #[test]
    fn family_is_seeded_and_normalized() {
        let basis = SpectralBasis::new(RadialGrid::new(1.0, 63).unwrap(), 0.0, 4).unwrap();
        let range = ModeRange { l_max: 4, radial: 4 };
        let a = random_family(&basis, 5, 10, range, 42).unwrap();
        let b = random_family(&basis, 5, 10, range, 42).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.initial_coefficients(), y.initial_coefficients());
            assert!((x.energy(0.0) - 1.0).abs() < 1e-14);
            let nonzero = x.initial_coefficients().iter().flatten().filter(|c| **c != 0.0).count();
            assert_eq!(nonzero, 10);
        }
        let c = random_family(&basis, 1, 10, range, 43).unwrap();
        assert_ne!(c[0].initial_coefficients(), a[0].initial_coefficients());
        assert_eq!(c[0].initial_coefficients(), a[1].initial_coefficients());
        assert!(random_family(&basis, 1, 21, range, 1).is_err());
    }

    #[test]
    fn bump_has_unit_energy() {
        let basis = SpectralBasis::new(RadialGrid::new(1.0, 127).unwrap(), 0.0, 0).unwrap();
        let b = annulus_bump(&basis).unwrap();
        assert!((b.energy(0.0) - 1.0).abs() < 1e-12);
    }
}
