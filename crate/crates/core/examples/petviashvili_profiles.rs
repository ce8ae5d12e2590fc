//! Computes the solitary-wave profile of every `fixtures/solitary_*.json`
//! configuration with the Petviashvili iteration and prints one line each:
//! predicted and computed wave type, amplitude, iteration count, final
//! residual, `m_h` and whether the outer residuals decrease after the fifth.
//!
//! `cargo run --release --example petviashvili_profiles`

use std::path::Path;

use bbwaves::cli::commands::monotone_after;
use bbwaves::cli::{load_config, resolve, ExperimentKind};
use bbwaves::model::classify_nft;
use bbwaves::waves::{suggested_guess, PetviashviliSolver};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let mut paths: Vec<_> = std::fs::read_dir(&dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().is_some_and(|n| n.to_string_lossy().starts_with("solitary_")))
        .collect();
    paths.sort();
    for path in paths {
        let r = resolve(load_config(Some(&path), &[])?, ExperimentKind::Solitary)?;
        let grid = r.grid()?;
        let c_s = r.wave_speed()?;
        let class = classify_nft(&r.coeffs, c_s);
        let solver = PetviashviliSolver::new(r.coeffs, c_s, grid, r.wave()?.petviashvili)?;
        let (z, v) = suggested_guess(&r.coeffs, c_s, &grid);
        let (w, status) = match solver.solve(&z, &v) {
            Ok(w) => (w, "converged"),
            Err(e) => match e.partial() {
                Some(w) => (w.clone(), "not converged"),
                None => return Err(e.into()),
            },
        };
        println!(
            "{:<24} {:?}/{:<4} c_s = {:.4}  A = {:+.6}  {:<4} iters = {:<3} res = {:.2e}  m_h = {:.12}  monotone = {}  {status}",
            path.file_stem().unwrap().to_string_lossy(),
            class.nft_case,
            class.nft_case.and_then(|n| n.predicted_wave_type()).map_or("-".into(), |t| t.to_string()),
            c_s,
            w.amplitude,
            w.wave_type.to_string(),
            w.iterations,
            w.final_residual(),
            w.mh_history.last().copied().unwrap_or(f64::NAN),
            monotone_after(&w.outer_residual_history, 5),
        );
    }
    Ok(())
}
