//! The frozen frequency tolerance must dominate the discretization error of
//! single-mode traces, where the exact frequency identity holds.

use coulomb_uc::field::SampleTable;
use coulomb_uc::frequency::{central_derivative, frequency_trace, uniform_times, Tolerance};
use coulomb_uc::grid::{HeatWeight, RadialGrid};
use coulomb_uc::spectral::{ModalSolution, SpectralBasis};

const MODES: [(usize, usize); 4] = [(0, 0), (1, 0), (2, 1), (0, 3)];

#[test]
fn spatial_constant_covers_identity_residual() {
    let tol = Tolerance::CALIBRATED;
    for n in [127usize, 255] {
        let b = SpectralBasis::new(RadialGrid::new(1.0, n).unwrap(), 0.0, 2).unwrap();
        let table = SampleTable::new(b.grid(), 2, 48);
        let times = uniform_times(0.5, 1.0, 65);
        let h = b.grid().spacing();
        for (l, j) in MODES {
            let s = ModalSolution::from_modes(b.clone(), &[(l, j, 1.0)]).unwrap();
            for lambda in [0.1, 1.0] {
                for c in [[0.0; 3], [0.0, 0.0, 0.3]] {
                    let tr = frequency_trace(&s, &HeatWeight::new(lambda, c, 1.0).unwrap(), &times, &table).unwrap();
                    let worst = tr.identity_residuals().unwrap().iter().map(|r| r.1).fold(0.0, f64::max);
                    let scale = tr.max_abs_n();
                    assert!(worst <= 0.5 * tol.c1 * h * h * scale, "N={n} ({l},{j}) lambda={lambda}: {worst:e}");
                }
            }
        }
    }
}

#[test]
fn temporal_constant_covers_derivative_error() {
    let tol = Tolerance::CALIBRATED;
    let b = SpectralBasis::new(RadialGrid::new(1.0, 127).unwrap(), 0.0, 2).unwrap();
    let table = SampleTable::new(b.grid(), 2, 48);
    for samples in [33usize, 65] {
        let coarse = uniform_times(0.5, 1.0, samples);
        let fine = uniform_times(0.5, 1.0, 4 * samples - 3);
        let dt = 0.5 / (samples - 1) as f64;
        for (l, j) in MODES {
            let s = ModalSolution::from_modes(b.clone(), &[(l, j, 1.0)]).unwrap();
            let w = HeatWeight::new(0.5, [0.0, 0.0, 0.3], 1.0).unwrap();
            let a = frequency_trace(&s, &w, &coarse, &table).unwrap();
            let f = frequency_trace(&s, &w, &fine, &table).unwrap();
            let da = central_derivative(&a.n, a.time_step().unwrap());
            let df = central_derivative(&f.n, f.time_step().unwrap());
            let scale = a.max_abs_n();
            for (i, d) in da.iter().enumerate() {
                if let (Some(x), Some(y)) = (d, df[4 * i]) {
                    assert!((x - y).abs() <= 0.5 * tol.c2 * dt * dt * scale, "samples={samples} ({l},{j})");
                }
            }
        }
    }
}
