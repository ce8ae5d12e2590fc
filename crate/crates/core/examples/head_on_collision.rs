//! Head-on collision of two classical solitary waves moving in opposite
//! directions. Each profile comes from the Petviashvili solver; the
//! left-moving copy is the mirror `(zeta, -v_beta)`. Prints the crest
//! amplitude and position of both waves as they interact.
//!
//! `cargo run --release --example head_on_collision -- [offset right] [offset left] [T] [L] [N] [1/dt]`

use bbwaves::diagnostics::{PeakReference, PeakTracker};
use bbwaves::model::Polarity;
use bbwaves::waves::{suggested_guess, PetviashviliOptions, PetviashviliSolver};
use bbwaves::{coeffs_from_quadruple, Evolver, Fourier, Grid, StepperConfig, WaveState};
use num_complex::Complex64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    let arg = |i: usize, default: f64| args.get(i).copied().unwrap_or(default);
    let (off_r, off_l, final_time) = (arg(0, 0.5), arg(1, 0.25), arg(2, 40.0));
    let (l, n, inv_dt) = (arg(3, 128.0), arg(4, 2048.0) as usize, arg(5, 80.0));

    let k = coeffs_from_quadruple(-1.0 / 3.0, 1.0 / 3.0, -2.0 / 3.0, 1.1835978835978835, 0.5, 0.9, true)?;
    let grid = Grid::new(l, n)?;
    let fourier = Fourier::new(grid);
    let mut state = WaveState { t: 0.0, zeta_hat: vec![Complex64::default(); n], v_hat: vec![Complex64::default(); n] };
    let mut trackers = Vec::new();
    for (offset, center, dir) in [(off_r, -20.0, 1.0), (off_l, 20.0, -1.0)] {
        let c_s = k.c_sound + offset;
        let solver = PetviashviliSolver::new(k, c_s, grid, PetviashviliOptions::default())?;
        let (z, v) = suggested_guess(&k, c_s, &grid);
        let w = solver.solve(&z, &v)?;
        println!("wave c_s = {:+.6}: amplitude {:.6}, {} iterations", dir * c_s, w.amplitude, w.iterations);
        let single = WaveState::from_values(&fourier, 0.0, &w.zeta, &w.v_beta)?;
        for (acc, c) in state.zeta_hat.iter_mut().zip(fourier.translate(&single.zeta_hat, center)) {
            *acc += c;
        }
        for (acc, c) in state.v_hat.iter_mut().zip(fourier.translate(&single.v_hat, center)) {
            *acc += dir * c;
        }
        let reference = PeakReference { x0: center, c_s: dir * c_s };
        trackers.push(PeakTracker::new(fourier.clone(), Polarity::Elevation, Some(reference)).windowed(10.0).refined());
    }

    let evolver = Evolver::new(k, grid, StepperConfig::new(1.0 / inv_dt))?;
    let (right, left) = trackers.split_at_mut(1);
    let (_, summary) = evolver
        .run(&state, final_time, None, &mut [&mut right[0], &mut left[0]])
        .map_err(|(e, _)| e)?;
    println!("{} steps in {:.1}s", summary.steps, summary.wall_seconds);
    println!("{:>8} {:>12} {:>10} {:>12} {:>10}", "t", "A right", "x right", "A left", "x left");
    let every = (trackers[0].tracks.len() / 20).max(1);
    for (a, b) in trackers[0].tracks.iter().zip(&trackers[1].tracks).step_by(every) {
        println!("{:>8.2} {:>12.6} {:>10.3} {:>12.6} {:>10.3}", a.t, a.amplitude, a.location, b.amplitude, b.location);
    }
    for (name, tr) in ["right", "left"].iter().zip(&trackers) {
        let (first, last) = (tr.tracks.first().unwrap(), tr.last().unwrap());
        println!("{name}: relative amplitude change {:.3e}", (last.amplitude - first.amplitude) / first.amplitude);
    }
    Ok(())
}
