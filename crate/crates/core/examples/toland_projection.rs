//! Hamiltonian case with `a = c = 0`: computes the admissible segment of
//! the first-integral curve `{f = 0}` and solves for the classical wave
//! with and without projecting the iterates onto that curve.
//!
//! `cargo run --release --example toland_projection -- [speed offset] [L] [N]`

use bbwaves::model::{s_const, toland_f, toland_segment};
use bbwaves::waves::{suggested_guess, PetviashviliOptions, PetviashviliSolver};
use bbwaves::{coeffs_from_quadruple, Grid};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    let offset = args.first().copied().unwrap_or(0.5);
    let l = args.get(1).copied().unwrap_or(256.0);
    let n = args.get(2).copied().unwrap_or(4096.0) as usize;

    let s = s_const(0.5, 0.9);
    let k = coeffs_from_quadruple(0.0, 0.5 * s, 0.0, 0.5 * s, 0.5, 0.9, false)?;
    let c_s = k.c_sound + offset;
    let seg = toland_segment(&k, c_s)?;
    println!("c_s = {c_s:.6}  P1 = ({:.4}, {:.4})  P2 = ({:.4}, {:.4})  {:?}", seg.p1.0, seg.p1.1, seg.p2.0, seg.p2.1, seg.polarity);

    let grid = Grid::new(l, n)?;
    let (z, v) = suggested_guess(&k, c_s, &grid);
    for projection in [false, true] {
        let opts = PetviashviliOptions { projection_manifold: projection, ..Default::default() };
        let solver = PetviashviliSolver::new(k, c_s, grid, opts)?;
        match solver.solve(&z, &v) {
            Ok(w) => {
                let mid = n / 2;
                let (vm, zm) = (w.v_beta[mid], w.zeta[mid]);
                println!(
                    "projection {projection:<5}: {} iterations, zeta_max = {:.4}, v_max = {:.4}, u_max = {:.4}, f at crest = {:.2e}",
                    w.iterations,
                    zm,
                    vm,
                    w.u[mid],
                    toland_f(&k, c_s, vm, zm)
                );
            }
            Err(e) => println!("projection {projection:<5}: {e}"),
        }
    }
    Ok(())
}
