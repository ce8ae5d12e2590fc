#![allow(dead_code)]

use bbwaves::evolve::{Evolver, StepperConfig, WaveState};
use bbwaves::model::coeffs_from_quadruple;
use bbwaves::spectral::{Fourier, Grid};
use num_complex::Complex64;

/// `Σ_{p+q=k} f_p g_q` over the retained modes, with each Nyquist amplitude
/// split evenly between `±N/2`.
pub fn convolution_oracle(grid: &Grid, f: &[Complex64], g: &[Complex64]) -> Vec<Complex64> {
    let n = grid.n() as i64;
    let half = n / 2;
    let amp = |c: &[Complex64], k: i64| -> Complex64 {
        if k.abs() == half {
            c[grid.index(half)] * 0.5
        } else {
            c[grid.index(k)]
        }
    };
    let mut out = vec![Complex64::default(); grid.n()];
    for k in -half + 1..half {
        let mut s = Complex64::default();
        for p in -half..=half {
            let q = k - p;
            if q.abs() <= half {
                s += amp(f, p) * amp(g, q);
            }
        }
        out[grid.index(k)] = s;
    }
    out
}

pub fn bench_evolver(n: usize, l: f64, dt: f64) -> Evolver {
    let k = coeffs_from_quadruple(-1.0 / 3.0, 0.758466, -2.0 / 3.0, 0.758466, 0.5, 0.9, true).unwrap();
    Evolver::new(k, Grid::new(l, n).unwrap(), StepperConfig::new(dt)).unwrap()
}

pub fn bump(fourier: &Fourier) -> WaveState {
    let x = fourier.grid().nodes();
    let z: Vec<f64> = x.iter().map(|x| 1.5 / (0.6 * (x - 1.0)).cosh().powi(2) + 0.2 * (0.3 * x).sin()).collect();
    let v: Vec<f64> = x.iter().map(|x| 0.8 / (0.5 * x).cosh().powi(2)).collect();
    WaveState::from_values(fourier, 0.0, &z, &v).unwrap()
}
