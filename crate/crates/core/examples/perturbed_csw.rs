//! Stability of a classical solitary wave: the computed profile is scaled
//! by a factor and evolved. The main pulse adjusts its amplitude and speed
//! and sheds a small dispersive tail.
//!
//! `cargo run --release --example perturbed_csw -- [factor] [speed offset] [T] [L] [N] [1/dt]`

use bbwaves::diagnostics::{PeakReference, PeakTracker};
use bbwaves::model::Polarity;
use bbwaves::waves::{suggested_guess, PetviashviliOptions, PetviashviliSolver};
use bbwaves::{coeffs_from_quadruple, Evolver, Fourier, Grid, StepperConfig, WaveState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    let arg = |i: usize, default: f64| args.get(i).copied().unwrap_or(default);
    let (factor, offset, final_time) = (arg(0, 1.1), arg(1, 0.1), arg(2, 100.0));
    let (l, n, inv_dt) = (arg(3, 256.0), arg(4, 2048.0) as usize, arg(5, 80.0));

    let k = coeffs_from_quadruple(-1.0 / 3.0, 1.0 / 3.0, -2.0 / 3.0, 1.1835978835978835, 0.5, 0.9, true)?;
    let grid = Grid::new(l, n)?;
    let fourier = Fourier::new(grid);
    let c_s = k.c_sound + offset;
    let solver = PetviashviliSolver::new(k, c_s, grid, PetviashviliOptions::default())?;
    let (z, v) = suggested_guess(&k, c_s, &grid);
    let w = solver.solve(&z, &v)?;
    println!("unperturbed wave: c_s = {c_s:.6}, amplitude {:.6}, {}", w.amplitude, w.wave_type);
    let initial = WaveState::from_values(&fourier, 0.0, &w.zeta, &w.v_beta)?.scaled(factor);

    let evolver = Evolver::new(k, grid, StepperConfig::new(1.0 / inv_dt))?;
    let polarity = if w.amplitude < 0.0 { Polarity::Depression } else { Polarity::Elevation };
    let mut tracker = PeakTracker::new(fourier.clone(), polarity, Some(PeakReference { x0: 0.0, c_s })).refined();
    let (_, summary) = evolver.run(&initial, final_time, None, &mut [&mut tracker]).map_err(|(e, _)| e)?;
    println!("{} steps in {:.1}s", summary.steps, summary.wall_seconds);
    let every = (tracker.tracks.len() / 20).max(1);
    for p in tracker.tracks.iter().step_by(every) {
        println!("t = {:>7.2}  amplitude {:.6}  speed {}", p.t, p.amplitude, p.speed.map_or("-".into(), |s| format!("{s:.6}")));
    }
    let span = 0.2 * final_time;
    println!("final mean speed {:.6} vs unperturbed {c_s:.6}", tracker.mean_speed(span).unwrap_or(f64::NAN));
    Ok(())
}
