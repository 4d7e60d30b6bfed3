use proptest::prelude::*;

use coulomb_uc::field::SampleTable;
use coulomb_uc::frequency::weighted_sample;
use coulomb_uc::grid::{HeatWeight, RadialGrid};
use coulomb_uc::interpolation::Ball;
use coulomb_uc::localization::{compose_chain, solve_constant, EstimateRecord};
use coulomb_uc::spectral::{ModalSolution, SpectralBasis};

fn ball(z: f64, r: f64) -> Ball {
    Ball::new([0.0, 0.0, z], r).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn frequency_is_scale_invariant(c in 0.01f64..100.0, lambda in 0.05f64..1.0, t in 0.1f64..0.9) {
        let basis = SpectralBasis::new(RadialGrid::new(1.0, 63).unwrap(), 0.5, 2).unwrap();
        let sol = ModalSolution::from_modes(basis.clone(), &[(0, 0, 1.0), (1, 1, 0.4), (2, 0, -0.3)]).unwrap();
        let table = SampleTable::new(basis.grid(), 2, 16);
        let w = HeatWeight::new(lambda, [0.0, 0.0, 0.2], 1.0).unwrap();
        let a = weighted_sample(&sol, &w, t, &table).unwrap();
        let b = weighted_sample(&sol.scaled(c), &w, t, &table).unwrap();
        let (na, nb) = (a.i / a.h, b.i / b.h);
        prop_assert!((na - nb).abs() <= 1e-12 * na.abs().max(1.0));
    }

    #[test]
    fn composition_is_associative(
        n in proptest::collection::vec(1.0f64..50.0, 3),
        a in proptest::collection::vec(0.05f64..0.95, 3),
    ) {
        let links = vec![
            EstimateRecord::new(n[0], a[0], ball(-0.3, 0.4), ball(-0.3, 0.2)).unwrap(),
            EstimateRecord::new(n[1], a[1], ball(-0.1, 0.4), ball(-0.1, 0.2)).unwrap(),
            EstimateRecord::new(n[2], a[2], ball(0.1, 0.4), ball(0.1, 0.2)).unwrap(),
        ];
        let all = compose_chain(&links).unwrap();
        let left = compose_chain(&[compose_chain(&links[..2]).unwrap(), links[2].clone()]).unwrap();
        let right = compose_chain(&[links[0].clone(), compose_chain(&links[1..]).unwrap()]).unwrap();
        prop_assert_eq!(&left, &all);
        prop_assert_eq!(&right, &all);
        prop_assert_eq!(all.constant, n.iter().copied().fold(1.0, f64::max));
    }

    #[test]
    fn solved_constant_is_minimal(q in -5.0f64..200.0, t in 0.1f64..1.0) {
        let n = solve_constant(q, t);
        let g = |n: f64| n.ln() + n / t;
        prop_assert!(n >= 1.0);
        prop_assert!(g(n) >= q - 1e-9);
        if n > 1.0 {
            prop_assert!(g(n * (1.0 - 1e-9)) <= q + 1e-9);
        }
    }

    #[test]
    fn energy_never_increases(seed in 0u64..1000, t in 0.0f64..0.5, dt in 0.0f64..0.5) {
        let basis = SpectralBasis::new(RadialGrid::new(1.0, 63).unwrap(), 1.0, 2).unwrap();
        let sol = coulomb_uc::family::random_family(
            &basis, 1, 4, coulomb_uc::family::ModeRange { l_max: 2, radial: 3 }, seed,
        ).unwrap().remove(0);
        // On the unit ball the Dirichlet gap beats the k = 1 well, so every mode decays.
        prop_assert!(sol.energy(t + dt) <= sol.energy(t) * (1.0 + 1e-12));
    }
}
