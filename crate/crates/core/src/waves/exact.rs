use serde::{Deserialize, Serialize};

use super::WaveError;
use crate::evolve::WaveState;
use crate::model::ModelCoeffs;
use crate::spectral::Fourier;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExactBranch {
    Generic,
    /// `b - 2d - a(δ+γ) = 0` and `c = a(δ+γ)`: any ratio `B` works.
    Degenerate { b_ratio: f64 },
}

/// `ζ = 3μ₁ sech²(½√(μ₁/μ₂)(x - c_s t - x₀))`, `v_β = Bζ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactSech2 {
    pub b_ratio: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub c_s: f64,
    pub x0: f64,
}

impl ExactSech2 {
    pub fn amplitude(&self) -> f64 {
        3.0 * self.mu1
    }

    /// Inverse width `½√(μ₁/μ₂)`.
    pub fn width(&self) -> f64 {
        0.5 * (self.mu1 / self.mu2).sqrt()
    }

    pub fn at(mut self, x0: f64) -> Self {
        self.x0 = x0;
        self
    }

    /// `ζ` at `x` on the periodic domain `[-L, L)`.
    pub fn zeta(&self, x: f64, t: f64, half_length: f64) -> f64 {
        let period = 2.0 * half_length;
        let xi = x - self.c_s * t - self.x0;
        let xi = xi - period * ((xi + half_length) / period).floor();
        self.amplitude() / (self.width() * xi).cosh().powi(2)
    }
}

pub fn exact_sech2(k: &ModelCoeffs, branch: ExactBranch) -> Result<ExactSech2, WaveError> {
    let gd = k.delta + k.gamma;
    let gap = k.b - 2.0 * k.d - k.a * gd;
    let tol = 1e-12 * (k.b.abs() + 2.0 * k.d.abs() + (k.a * gd).abs()).max(1.0);
    let (b_ratio, c_s) = match branch {
        ExactBranch::Generic => {
            if gap.abs() <= tol {
                return Err(WaveError::NoExactSolution("b - 2d - a(delta+gamma) = 0; use the degenerate branch".into()));
            }
            let den = k.kappa1 * (k.b - 2.0 * k.d) - k.a;
            let b2 = 2.0 * k.kappa2 * (k.b - 2.0 * k.d - k.c) / den;
            if !(b2 > 0.0) {
                return Err(WaveError::NoExactSolution(format!("B^2 = {b2} <= 0")));
            }
            let b = b2.sqrt();
            (b, 2.0 * k.kappa2 * (k.c * k.kappa1 - k.a) / (den * b))
        }
        ExactBranch::Degenerate { b_ratio } => {
            let tied = (k.c - k.a * gd).abs() <= 1e-12 * k.c.abs().max((k.a * gd).abs()).max(1.0);
            if gap.abs() > tol || !tied {
                return Err(WaveError::DegenerateBranchMismatch(format!(
                    "b - 2d - a(delta+gamma) = {gap:e}, c - a(delta+gamma) = {:e}",
                    k.c - k.a * gd
                )));
            }
            if b_ratio == 0.0 {
                return Err(WaveError::NoExactSolution("B = 0".into()));
            }
            (b_ratio, (2.0 * k.kappa2 - k.kappa1 * b_ratio * b_ratio) / b_ratio)
        }
    };
    let b2 = b_ratio * b_ratio;
    let kap = k.kappa_gd;
    if kap == 0.0 {
        return Err(WaveError::NoExactSolution("kappa_gd = 0".into()));
    }
    let mu1 = (k.kappa2 - k.kappa1 * b2) / (kap * b2);
    let mu2 = ((k.a - k.b * k.kappa1) * b2 + 2.0 * k.b * k.kappa2) / (2.0 * kap * b2);
    if !(mu1 * mu2 > 0.0) {
        return Err(WaveError::NoExactSolution(format!("mu1 mu2 = {} <= 0", mu1 * mu2)));
    }
    Ok(ExactSech2 { b_ratio, mu1, mu2, c_s, x0: 0.0 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactSample {
    pub state: WaveState,
    pub zeta: Vec<f64>,
    pub v_beta: Vec<f64>,
    pub u: Vec<f64>,
    /// Half-width argument `½√(μ₁/μ₂) L` is below 20: the periodic copy
    /// differs from the line solution by more than round-off.
    pub wrap_warning: bool,
}

pub fn sample_exact(e: &ExactSech2, fourier: &Fourier, t: f64, beta: f64) -> Result<ExactSample, WaveError> {
    let g = fourier.grid();
    let zeta: Vec<f64> = g.nodes().iter().map(|&x| e.zeta(x, t, g.half_length())).collect();
    let v_beta: Vec<f64> = zeta.iter().map(|z| e.b_ratio * z).collect();
    let (zh, vh) = fourier.to_spectral_pair(&zeta, &v_beta)?;
    let zxx = fourier.from_spectral(&fourier.diff(&zh, 2))?;
    let u = zeta.iter().zip(&zxx).map(|(z, zz)| e.b_ratio * (z - beta * zz)).collect();
    Ok(ExactSample {
        state: WaveState { t, zeta_hat: zh, v_hat: vh },
        zeta,
        v_beta,
        u,
        wrap_warning: e.width() * g.half_length() < 20.0,
    })
}

/// Max-norm residual of the two profile equations for the sampled wave:
/// `(c_s - κ₁B)ζ - (b c_s + aB)ζ″ - Bκζ²` and
/// `(c_s B - κ₂)ζ - (d c_s B + κ₂c)ζ″ - (B²/2)κζ²`.
pub fn substitution_residual(e: &ExactSech2, k: &ModelCoeffs, fourier: &Fourier) -> Result<f64, WaveError> {
    let g = fourier.grid();
    let zeta: Vec<f64> = g.nodes().iter().map(|&x| e.zeta(x, 0.0, g.half_length())).collect();
    let zh = fourier.to_spectral(&zeta)?;
    let zxx = fourier.from_spectral(&fourier.diff(&zh, 2))?;
    let (b, cs, kap) = (e.b_ratio, e.c_s, k.kappa_gd);
    let mut worst: f64 = 0.0;
    for (z, zz) in zeta.iter().zip(&zxx) {
        let r1 = (cs - k.kappa1 * b) * z - (k.b * cs + k.a * b) * zz - b * kap * z * z;
        let r2 = (cs * b - k.kappa2) * z - (k.d * cs * b + k.kappa2 * k.c) * zz - 0.5 * b * b * kap * z * z;
        worst = worst.max(r1.abs()).max(r2.abs());
    }
    Ok(worst)
}
