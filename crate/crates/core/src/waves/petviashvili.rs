//! Petviashvili iteration for `S(k) ŵ = κ N̂(w)` with `w = (ζ, v_β)` and
//! `N(w) = (ζv, v²/2)`.
//!
//! Each step solves `S(k) ŵ⁺ = m^p κ N̂(w)` mode by mode, where the
//! stabilizing factor is `m = ⟨Sw, w⟩ / ⟨κN(w), w⟩` (`p = 2` by default).
//! The residual is `RES = ‖Sw - κN(w)‖` in the Euclidean norm of node values
//! over both components.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{classify_profile, mpe_extrapolate, SolitaryWave, WaveError};
use crate::model::{characteristic_roots, toland_f, ModelCoeffs};
use crate::spectral::{Fourier, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PetviashviliOptions {
    pub max_iters: usize,
    pub tolerance: f64,
    /// Petviashvili steps per extrapolation cycle; 0 disables extrapolation.
    pub mpe_cycle_width: usize,
    pub exponent: f64,
    /// Keep every iterate on `{f = 0}` at the central node.
    pub projection_manifold: bool,
}

impl Default for PetviashviliOptions {
    fn default() -> Self {
        Self { max_iters: 2000, tolerance: 1e-10, mpe_cycle_width: 0, exponent: 2.0, projection_manifold: false }
    }
}

impl PetviashviliOptions {
    pub fn validate(&self) -> Result<(), WaveError> {
        if !(self.tolerance > 0.0) {
            return Err(WaveError::InvalidOptions("tolerance must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(WaveError::InvalidOptions("max_iters must be at least 1".into()));
        }
        if self.mpe_cycle_width == 1 {
            return Err(WaveError::InvalidOptions("mpe_cycle_width must be 0 or at least 2".into()));
        }
        Ok(())
    }
}

/// Iterates whose norm falls below this fraction of the guess count as collapsed.
const COLLAPSE: f64 = 1e-6;

/// Per-mode entries of `S(k) = [[s11, s12], [s21, s22]]` and their inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolMatrix {
    pub s11: Vec<f64>,
    pub s12: Vec<f64>,
    pub s21: Vec<f64>,
    pub s22: Vec<f64>,
    pub det: Vec<f64>,
}

pub fn build_symbol_matrix(k: &ModelCoeffs, c_s: f64, grid: &Grid) -> Result<SymbolMatrix, WaveError> {
    let n = grid.n();
    let mut m = SymbolMatrix {
        s11: Vec::with_capacity(n),
        s12: Vec::with_capacity(n),
        s21: Vec::with_capacity(n),
        s22: Vec::with_capacity(n),
        det: Vec::with_capacity(n),
    };
    let mut singular = Vec::new();
    for i in 0..n {
        let k2 = grid.wavenumber(i).powi(2);
        let s11 = c_s * (1.0 + k.b * k2);
        let s12 = -(k.kappa1 - k.a * k2);
        let s21 = -k.kappa2 * (1.0 - k.c * k2);
        let s22 = c_s * (1.0 + k.d * k2);
        let det = s11 * s22 - s12 * s21;
        if det.abs() <= 1e-12 * ((s11 * s22).abs() + (s12 * s21).abs()).max(f64::MIN_POSITIVE) {
            singular.push(grid.mode(i));
        }
        m.s11.push(s11);
        m.s12.push(s12);
        m.s21.push(s21);
        m.s22.push(s22);
        m.det.push(det);
    }
    if !singular.is_empty() {
        singular.sort_unstable();
        return Err(WaveError::SingularModes(singular));
    }
    Ok(m)
}

/// `ζ₀ = A sech²(w x)`, `v₀ = ζ₀`, centred at `x = 0`.
pub fn default_guess(grid: &Grid, amplitude: f64, width: f64) -> (Vec<f64>, Vec<f64>) {
    let z: Vec<f64> = grid.nodes().iter().map(|x| amplitude / (width * x).cosh().powi(2)).collect();
    (z.clone(), z)
}

/// Sech² guess scaled to the linear decay rate and the long-wave amplitude.
///
/// The width is half the smallest real characteristic root at `c_s` (the
/// real part when all roots are complex), the amplitude `2|c_s - c_γδ|c_s/(|κ|κ₂)`
/// with the sign of `(c_s - c_γδ)κ`, and `v_β = c_s ζ / κ₁`.
pub fn suggested_guess(k: &ModelCoeffs, c_s: f64, grid: &Grid) -> (Vec<f64>, Vec<f64>) {
    let lo = 4.0 * std::f64::consts::PI / grid.half_length();
    let width = characteristic_roots(k, c_s)
        .ok()
        .and_then(|roots| {
            let re: Vec<f64> = roots.iter().filter(|r| r.re > 0.0).map(|r| (r.re, r.im.abs())).filter(|(re, im)| *im <= 1e-10 * re).map(|(re, _)| re).collect();
            let pick = if re.is_empty() {
                roots.iter().map(|r| r.re.abs()).filter(|r| *r > 0.0).fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.min(r))))
            } else {
                re.into_iter().reduce(f64::min)
            };
            pick.map(|r| 0.5 * r)
        })
        .unwrap_or(0.5)
        .clamp(lo, 2.0);
    let gap = c_s - k.c_sound;
    let kap = if k.kappa_gd == 0.0 { 1.0 } else { k.kappa_gd };
    let sign = if gap * kap >= 0.0 { 1.0 } else { -1.0 };
    let amplitude = sign * (2.0 * gap.abs() * c_s.abs() / (kap.abs() * k.kappa2)).max(1e-3);
    let z: Vec<f64> = grid.nodes().iter().map(|x| amplitude / (width * x).cosh().powi(2)).collect();
    let v = z.iter().map(|z| c_s * z / k.kappa1).collect();
    (z, v)
}

/// One Petviashvili step with diagnostics.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub next: (Vec<Complex64>, Vec<Complex64>),
    /// Residual and stabilizing factor of the input iterate.
    pub residual: f64,
    pub m: f64,
}

/// Solver bound to one set of coefficients, speed and grid.
#[derive(Debug, Clone)]
pub struct PetviashviliSolver {
    coeffs: ModelCoeffs,
    c_s: f64,
    fourier: Fourier,
    symbol: SymbolMatrix,
    opts: PetviashviliOptions,
}

impl PetviashviliSolver {
    pub fn new(coeffs: ModelCoeffs, c_s: f64, grid: Grid, opts: PetviashviliOptions) -> Result<Self, WaveError> {
        opts.validate()?;
        let symbol = build_symbol_matrix(&coeffs, c_s, &grid)?;
        Ok(Self { coeffs, c_s, fourier: Fourier::new(grid), symbol, opts })
    }

    pub fn fourier(&self) -> &Fourier {
        &self.fourier
    }

    /// Collocation nonlinearity `κ(ζv, v²/2)` in coefficient space.
    fn nonlinear(&self, z: &[Complex64], v: &[Complex64]) -> Result<(Vec<Complex64>, Vec<Complex64>), WaveError> {
        let (zv, vv) = self.fourier.from_spectral_pair(z, v)?;
        let kap = self.coeffs.kappa_gd;
        let p: Vec<f64> = zv.iter().zip(&vv).map(|(a, b)| kap * a * b).collect();
        let q: Vec<f64> = vv.iter().map(|b| 0.5 * kap * b * b).collect();
        Ok(self.fourier.to_spectral_pair(&p, &q)?)
    }

    pub fn step(&self, z: &[Complex64], v: &[Complex64]) -> Result<StepOutcome, WaveError> {
        let (nz, nv) = self.nonlinear(z, v)?;
        let s = &self.symbol;
        let n = z.len();
        let (mut sw_w, mut n_w, mut res2) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let swz = z[i] * s.s11[i] + v[i] * s.s12[i];
            let swv = z[i] * s.s21[i] + v[i] * s.s22[i];
            sw_w += (swz * z[i].conj() + swv * v[i].conj()).re;
            n_w += (nz[i] * z[i].conj() + nv[i] * v[i].conj()).re;
            res2 += (swz - nz[i]).norm_sqr() + (swv - nv[i]).norm_sqr();
        }
        // Euclidean norm of node values: Σ_j |f_j|² = N Σ_k |ĉ_k|²
        let residual = (res2 * n as f64).sqrt();
        let m = sw_w / n_w;
        let scale = m.abs().powf(self.opts.exponent);
        let mut next_z = Vec::with_capacity(n);
        let mut next_v = Vec::with_capacity(n);
        for i in 0..n {
            let r = scale / s.det[i];
            next_z.push((nz[i] * s.s22[i] - nv[i] * s.s12[i]) * r);
            next_v.push((nv[i] * s.s11[i] - nz[i] * s.s21[i]) * r);
        }
        Ok(StepOutcome { next: (next_z, next_v), residual, m })
    }

    /// Rescales the iterate uniformly so the central node lies on `{f = 0}`:
    /// `f(sv, sζ) = s²q - s³κv²ζ/c_s` vanishes at `s = q c_s/(κv²ζ)`.
    fn project(&self, z: &mut [Complex64], v: &mut [Complex64]) -> Result<(), WaveError> {
        let (zv, vv) = self.fourier.from_spectral_pair(z, v)?;
        let j0 = self.fourier.grid().nyquist_index();
        let (v0, z0) = (vv[j0], zv[j0]);
        let (k, cs) = (&self.coeffs, self.c_s);
        let q = (-k.kappa1 * v0 * v0 - k.kappa2 * z0 * z0 + 2.0 * cs * z0 * v0) / cs;
        let s = q * cs / (k.kappa_gd * v0 * v0 * z0);
        if s.is_finite() && s > 0.0 {
            z.iter_mut().for_each(|c| *c *= s);
            v.iter_mut().for_each(|c| *c *= s);
        }
        Ok(())
    }

    /// `|f|` at the central node of the given iterate.
    pub fn manifold_defect(&self, z: &[Complex64], v: &[Complex64]) -> Result<f64, WaveError> {
        let (zv, vv) = self.fourier.from_spectral_pair(z, v)?;
        let j0 = self.fourier.grid().nyquist_index();
        Ok(toland_f(&self.coeffs, self.c_s, vv[j0], zv[j0]).abs())
    }

    pub fn solve(&self, guess_zeta: &[f64], guess_v: &[f64]) -> Result<SolitaryWave, WaveError> {
        self.solve_observed(guess_zeta, guess_v, |_, _, _| {})
    }

    /// Runs the iteration; `observe(ν, ζ̂, v̂)` sees every iterate.
    pub fn solve_observed(
        &self,
        guess_zeta: &[f64],
        guess_v: &[f64],
        mut observe: impl FnMut(usize, &[Complex64], &[Complex64]),
    ) -> Result<SolitaryWave, WaveError> {
        if guess_zeta.iter().chain(guess_v).all(|x| *x == 0.0) {
            return Err(WaveError::ZeroGuess);
        }
        let (mut z, mut v) = self.fourier.to_spectral_pair(guess_zeta, guess_v)?;
        if self.opts.projection_manifold {
            self.project(&mut z, &mut v)?;
        }
        let width = self.opts.mpe_cycle_width;
        let window = if width > 0 { width } else { 10 };
        let n = z.len();
        let stack = |z: &[Complex64], v: &[Complex64]| -> Vec<f64> {
            z.iter().chain(v).flat_map(|c| [c.re, c.im]).collect()
        };
        let unstack = |x: &[f64]| -> (Vec<Complex64>, Vec<Complex64>) {
            let all: Vec<Complex64> = x.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
            (all[..n].to_vec(), all[n..].to_vec())
        };
        let mut cycle: Vec<Vec<f64>> = Vec::new();
        let norm = |z: &[Complex64], v: &[Complex64]| z.iter().chain(v).map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let initial_norm = norm(&z, &v);
        let mut outer = Vec::new();
        let mut res_hist = Vec::new();
        let mut m_hist = Vec::new();
        let mut best: Option<(f64, Vec<Complex64>, Vec<Complex64>)> = None;
        for nu in 0..self.opts.max_iters {
            observe(nu, &z, &v);
            let out = self.step(&z, &v)?;
            res_hist.push(out.residual);
            if width == 0 || nu % width == 0 {
                outer.push(out.residual);
            }
            m_hist.push(out.m);
            if best.as_ref().is_none_or(|b| out.residual < b.0) {
                best = Some((out.residual, z.clone(), v.clone()));
            }
            if norm(&z, &v) < COLLAPSE * initial_norm {
                let w = self.finish(&z, &v, (res_hist, outer), m_hist, nu + 1, false)?;
                return Err(WaveError::Collapsed(Box::new(w)));
            }
            if out.residual <= self.opts.tolerance {
                if width > 0 && nu % width != 0 {
                    outer.push(out.residual);
                }
                return self.finish(&z, &v, (res_hist, outer), m_hist, nu + 1, true);
            }
            let diverged = !out.residual.is_finite()
                || (nu >= 2 * window && out.residual > 10.0 * res_hist[nu - window]);
            if diverged {
                let (_, bz, bv) = best.unwrap();
                let w = self.finish(&bz, &bv, (res_hist, outer), m_hist, nu + 1, false)?;
                return Err(WaveError::DivergenceDetected(Box::new(w)));
            }
            let (mut nz, mut nv) = out.next;
            if self.opts.projection_manifold {
                self.project(&mut nz, &mut nv)?;
            }
            if width > 0 {
                if cycle.is_empty() {
                    cycle.push(stack(&z, &v));
                }
                cycle.push(stack(&nz, &nv));
                if cycle.len() == width + 1 {
                    if let Some(s) = mpe_extrapolate(&cycle) {
                        let (ez, ev) = unstack(&s);
                        nz = ez;
                        nv = ev;
                        if self.opts.projection_manifold {
                            self.project(&mut nz, &mut nv)?;
                        }
                    }
                    cycle.clear();
                }
            }
            z = nz;
            v = nv;
        }
        let (_, bz, bv) = best.unwrap();
        let iters = res_hist.len();
        let w = self.finish(&bz, &bv, (res_hist, outer), m_hist, iters, false)?;
        Err(WaveError::MaxItersExceeded(Box::new(w)))
    }

    fn finish(
        &self,
        z: &[Complex64],
        v: &[Complex64],
        (residual_history, outer_residual_history): (Vec<f64>, Vec<f64>),
        mh_history: Vec<f64>,
        iterations: usize,
        converged: bool,
    ) -> Result<SolitaryWave, WaveError> {
        let g = self.fourier.grid();
        let beta = self.coeffs.beta;
        let (zeta, v_beta) = self.fourier.from_spectral_pair(z, v)?;
        let uh: Vec<Complex64> =
            v.iter().enumerate().map(|(i, c)| c * (1.0 + beta * g.wavenumber(i).powi(2))).collect();
        let u = self.fourier.from_spectral(&uh)?;
        let amplitude = zeta.iter().copied().fold(0.0, |a: f64, x| if x.abs() > a.abs() { x } else { a });
        let mut w = SolitaryWave {
            half_length: g.half_length(),
            c_s: self.c_s,
            beta,
            zeta,
            v_beta,
            u,
            residual_history,
            outer_residual_history,
            mh_history,
            iterations,
            converged,
            amplitude,
            wave_type: super::WaveType::Csw,
        };
        w.wave_type = classify_profile(&w);
        Ok(w)
    }
}

pub fn petviashvili_solve(
    coeffs: &ModelCoeffs,
    c_s: f64,
    grid: &Grid,
    guess: (&[f64], &[f64]),
    opts: &PetviashviliOptions,
) -> Result<SolitaryWave, WaveError> {
    PetviashviliSolver::new(*coeffs, c_s, *grid, *opts)?.solve(guess.0, guess.1)
}
