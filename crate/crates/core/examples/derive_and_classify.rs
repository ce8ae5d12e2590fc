//! Derives the dispersion coefficients from the physical parameters and
//! classifies the resulting system: linear well-posedness, the
//! normal-form existence case near the sound speed and the spatial
//! eigenvalues of the traveling-wave equations.
//!
//! `cargo run --release --example derive_and_classify -- [gamma] [delta] [alpha1] [alpha2] [beta] [speed offset]`

use bbwaves::model::{
    characteristic_roots, classify_linear, classify_nft, classify_wellposed, delta_polynomial, toland_segment,
};
use bbwaves::{derive_coeffs, PhysicalParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    let arg = |i: usize, default: f64| args.get(i).copied().unwrap_or(default);
    let params = PhysicalParams::new(arg(0, 0.5), arg(1, 0.9), arg(2, 0.5), arg(3, -0.5), arg(4, 1.0));
    let offset = arg(5, 0.5);

    let k = derive_coeffs(&params)?;
    println!("a = {:.10}  b = {:.10}  c = {:.10}  d = {:.10}", k.a, k.b, k.c, k.d);
    println!("kappa1 = {:.6}  kappa2 = {:.6}  kappa = {:.6}  S = {:.6}", k.kappa1, k.kappa2, k.kappa_gd, k.s_const);
    println!("consistency residual = {:.3e}", k.consistency_residual());
    println!("linear case {:?}, well-posedness case {:?}", classify_linear(&k), classify_wellposed(&k));

    let c_s = k.c_sound + offset;
    let class = classify_nft(&k, c_s);
    println!(
        "c_s = {c_s:.6} (sound speed {:.6}): existence case {:?}, predicted {}",
        k.c_sound,
        class.nft_case,
        class.nft_case.and_then(|n| n.predicted_wave_type()).map_or("-".into(), |t| t.to_string())
    );
    println!("(B, A) region {:?}, D = {:.6}", class.region, class.d_det);
    match characteristic_roots(&k, c_s) {
        Ok(roots) => roots.iter().for_each(|z| println!("  lambda = {:+.6} {:+.6}i", z.re, z.im)),
        Err(e) => println!("  no spatial eigenvalues: {e}"),
    }
    println!("{:?}", delta_polynomial(&k, c_s));
    match toland_segment(&k, c_s) {
        Ok(seg) => println!("Toland segment P1 = {:?}, P2 = {:?}, {:?}", seg.p1, seg.p2, seg.polarity),
        Err(e) => println!("Toland segment: {e}"),
    }
    Ok(())
}
