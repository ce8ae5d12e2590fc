//! Tabulates the dispersion functions `phi` and `psi` of a classical
//! solitary-wave case together with the polynomial that controls the sign
//! of `phi'`, and checks the closed-form derivative against finite
//! differences.
//!
//! `cargo run --release --example dispersion_tails -- [x_max] [samples]`

use bbwaves::coeffs_from_quadruple;
use bbwaves::model::{dispersion_profile, p_coefficients, phi, phi_prime};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let x_max: f64 = args.first().map(|s| s.parse()).transpose()?.unwrap_or(10.0);
    let samples: usize = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(21);

    let k = coeffs_from_quadruple(-1.0 / 3.0, 1.0 / 3.0, -2.0 / 3.0, 1.1835978835978835, 0.5, 0.9, true)?;
    let (p1, p2, p3) = p_coefficients(&k);
    println!("p1 = {p1:.6}  p2 = {p2:.6}  p3 = {p3:.6}");
    let xs: Vec<f64> = (0..samples).map(|i| x_max * i as f64 / (samples - 1) as f64).collect();
    let p = dispersion_profile(&k, &xs)?;
    match (p.x_star, p.phi_star) {
        (Some(x), Some(f)) => println!("minimum of phi at x* = {x:.6}: phi* = {f:.6}"),
        _ => println!("phi is monotone on x >= 0"),
    }
    println!("{:>10} {:>12} {:>12} {:>14}", "x", "phi", "psi", "fd - phi'");
    for (i, &x) in xs.iter().enumerate() {
        let fd_gap = if x > 0.0 {
            let h = 1e-5 * x;
            (phi(&k, x + h)? - phi(&k, x - h)?) / (2.0 * h) - phi_prime(&k, x)?
        } else {
            0.0
        };
        println!("{x:>10.4} {:>12.8} {:>12.8} {fd_gap:>14.2e}", p.phi[i], p.psi[i]);
    }
    Ok(())
}
