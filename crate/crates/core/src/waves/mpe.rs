use nalgebra::{DMatrix, DVector};

/// Minimal polynomial extrapolation of `x_0, …, x_{k+1}`.
///
/// With differences `u_j = x_{j+1} - x_j` the least-squares problem
/// `[u_0 … u_{k-1}] c = -u_k` is solved by QR, `c_k = 1`, and the limit
/// estimate is `Σ γ_j x_j` with `γ = c / Σc`. Returns `None` when the
/// weights are undefined (rank loss or `Σc ≈ 0`).
pub fn mpe_extrapolate(xs: &[Vec<f64>]) -> Option<Vec<f64>> {
    if xs.len() < 3 {
        return None;
    }
    let dim = xs[0].len();
    let k = xs.len() - 2;
    let u = DMatrix::from_fn(dim, k + 1, |r, c| xs[c + 1][r] - xs[c][r]);
    let a = u.columns(0, k).into_owned();
    let rhs = -u.column(k).into_owned();
    let qr = a.qr();
    let r = qr.r();
    let scale = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || r.diagonal().iter().any(|v| v.abs() <= 1e-14 * scale) {
        return None;
    }
    let qtb = qr.q().transpose() * rhs;
    let sol = r.solve_upper_triangular(&qtb)?;
    let mut c: Vec<f64> = sol.iter().copied().collect();
    c.push(1.0);
    let sum: f64 = c.iter().sum();
    if !sum.is_finite() || sum.abs() < 1e-12 {
        return None;
    }
    let mut out = DVector::<f64>::zeros(dim);
    for (j, cj) in c.iter().enumerate() {
        out.axpy(cj / sum, &DVector::from_column_slice(&xs[j]), 1.0);
    }
    Some(out.iter().copied().collect())
}
