//! Temporal convergence table for the exact sech² benchmark: L² errors at
//! the final time for halving step sizes and the observed orders.
//!
//! `cargo run --release --example convergence_study -- [T] [N] [jobs]`

use bbwaves::diagnostics::{convergence_table, ConvergenceProblem};
use bbwaves::waves::{exact_sech2, ExactBranch};
use bbwaves::{coeffs_from_quadruple, StepperConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    let final_time = args.first().copied().unwrap_or(10.0);
    let n = args.get(1).copied().unwrap_or(2048.0) as usize;
    let jobs = args.get(2).copied().unwrap_or(0.0) as usize;

    let k = coeffs_from_quadruple(-1.0 / 3.0, 0.758466, -2.0 / 3.0, 0.758466, 0.5, 0.9, true)?;
    let wave = exact_sech2(&k, ExactBranch::Generic)?;
    let dts = [1.0 / 40.0, 1.0 / 80.0, 1.0 / 160.0];
    let problem = ConvergenceProblem {
        coeffs: k,
        reference: &wave,
        half_length: 256.0,
        final_time,
        stepper: StepperConfig::new(dts[0]),
    };
    println!("{:>6} {:>10} {:>12} {:>8} {:>12} {:>8}", "N", "dt", "err zeta", "rate", "err v", "rate");
    let fmt = |x: Option<f64>, p: usize| x.map_or("-".to_string(), |x| format!("{x:.p$e}"));
    for row in convergence_table(&problem, &dts, &[n], jobs) {
        println!(
            "{:>6} {:>10.6} {:>12} {:>8} {:>12} {:>8}",
            row.n_modes,
            row.dt,
            fmt(row.error_zeta_abs, 4),
            row.rate_zeta.map_or("-".into(), |r| format!("{r:.4}")),
            fmt(row.error_v_abs, 4),
            row.rate_v.map_or("-".into(), |r| format!("{r:.4}")),
        );
        if let Some(f) = row.failure {
            println!("  failed: {f}");
        }
    }
    Ok(())
}
