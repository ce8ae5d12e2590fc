//! Fourier-Galerkin semidiscretization and the fourth-order symmetric
//! composition of the implicit midpoint rule.
//!
//! The state carries `(ζ̂, v̂_β)`. Per mode `k̂`
//!
//! ```text
//! ζ̂′ = ik̂ [(-κ₁ + a k̂²) v̂ - λ (ζv)^] / (1 + b k̂²)
//! v̂′ = ik̂ [-κ₂ (1 - c k̂²) ζ̂ - (λ/2) (v²)^] / (1 + d k̂²)
//! ```
//!
//! with dealiased products. Each midpoint stage treats the linear coupling
//! exactly (a 2×2 solve per mode) and iterates on the quadratic term only.

use num_complex::Complex64;
use std::time::Instant;
use thiserror::Error;

use crate::model::ModelCoeffs;
use crate::spectral::{Fourier, Grid, SpectralError};

/// Composition weight `1/(2 - 2^{1/3})`.
pub fn composition_weights() -> [f64; 3] {
    let b1 = 1.0 / (2.0 - 2f64.cbrt());
    [b1, 1.0 - 2.0 * b1, b1]
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolveError {
    #[error("implicit stage did not converge after {iterations} iterations (relative change {residual:e})")]
    FixedPointNotConverged { iterations: usize, residual: f64 },
    #[error("non-finite state at step {step} (t = {t})")]
    NonFinite { step: usize, t: f64 },
    #[error("N dt = {product} exceeds the configured bound {alpha}")]
    CflViolation { product: f64, alpha: f64 },
    #[error("invalid stepper configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperConfig {
    pub dt: f64,
    #[serde(default = "default_fp_tolerance")]
    pub fp_tolerance: f64,
    #[serde(default = "default_fp_max_iters")]
    pub fp_max_iters: usize,
    #[serde(default)]
    pub cfl_alpha: Option<f64>,
}

fn default_fp_tolerance() -> f64 {
    1e-12
}

fn default_fp_max_iters() -> usize {
    200
}

impl StepperConfig {
    pub fn new(dt: f64) -> Self {
        Self { dt, fp_tolerance: default_fp_tolerance(), fp_max_iters: default_fp_max_iters(), cfl_alpha: None }
    }

    pub fn validate(&self) -> Result<(), EvolveError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(EvolveError::Config(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.fp_tolerance > 0.0) {
            return Err(EvolveError::Config("fp_tolerance must be positive".into()));
        }
        if self.fp_max_iters == 0 {
            return Err(EvolveError::Config("fp_max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// Spectra of `ζ` and `v_β` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub t: f64,
    pub zeta_hat: Vec<Complex64>,
    pub v_hat: Vec<Complex64>,
}

impl WaveState {
    pub fn from_values(fourier: &Fourier, t: f64, zeta: &[f64], v: &[f64]) -> Result<Self, SpectralError> {
        let (zeta_hat, v_hat) = fourier.to_spectral_pair(zeta, v)?;
        Ok(Self { t, zeta_hat, v_hat })
    }

    /// Node values `(ζ, v_β)`.
    pub fn values(&self, fourier: &Fourier) -> Result<(Vec<f64>, Vec<f64>), SpectralError> {
        fourier.from_spectral_pair(&self.zeta_hat, &self.v_hat)
    }

    /// Node values of `u = (1 - β∂²) v_β`.
    pub fn u_values(&self, fourier: &Fourier, beta: f64) -> Result<Vec<f64>, SpectralError> {
        let g = fourier.grid();
        let u: Vec<Complex64> = self
            .v_hat
            .iter()
            .enumerate()
            .map(|(i, &c)| c * (1.0 + beta * g.wavenumber(i).powi(2)))
            .collect();
        fourier.from_spectral(&u)
    }

    pub fn is_finite(&self) -> bool {
        self.zeta_hat.iter().chain(&self.v_hat).all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            t: self.t,
            zeta_hat: self.zeta_hat.iter().map(|c| c * factor).collect(),
            v_hat: self.v_hat.iter().map(|c| c * factor).collect(),
        }
    }

    /// Relative discrete L² distance over both components.
    pub fn relative_distance(&self, other: &Self) -> f64 {
        let diff: f64 = self
            .zeta_hat
            .iter()
            .zip(&other.zeta_hat)
            .chain(self.v_hat.iter().zip(&other.v_hat))
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let norm: f64 = other.zeta_hat.iter().chain(&other.v_hat).map(|c| c.norm_sqr()).sum();
        if norm == 0.0 { diff.sqrt() } else { (diff / norm).sqrt() }
    }
}

/// Called on the stepping thread at the observation stride.
pub trait Observer {
    fn observe(&mut self, step: usize, state: &WaveState);
}

impl<F: FnMut(usize, &WaveState)> Observer for F {
    fn observe(&mut self, step: usize, state: &WaveState) {
        self(step, state)
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RunSummary {
    pub steps: usize,
    /// Step actually used, `T/M`.
    pub dt: f64,
    pub dt_adjusted: bool,
    pub stride: usize,
    /// `N dt`, the quantity bounded by the Courant-type condition.
    pub cfl_product: f64,
    pub max_fp_iterations: usize,
    pub wall_seconds: f64,
}

/// Semidiscrete system with per-mode operator tables.
#[derive(Debug, Clone)]
pub struct Evolver {
    coeffs: ModelCoeffs,
    fourier: Fourier,
    config: StepperConfig,
    /// linear coupling: ζ̂′ = lin_z v̂, v̂′ = lin_v ζ̂
    lin_z: Vec<Complex64>,
    lin_v: Vec<Complex64>,
    /// quadratic factors: ζ̂′ += nl_z (ζv)^, v̂′ += nl_v (v²)^
    nl_z: Vec<Complex64>,
    nl_v: Vec<Complex64>,
    max_fp_iterations: std::cell::Cell<usize>,
}

impl Evolver {
    pub fn new(coeffs: ModelCoeffs, grid: Grid, config: StepperConfig) -> Result<Self, EvolveError> {
        config.validate()?;
        let n = grid.n();
        let (mut lin_z, mut lin_v, mut nl_z, mut nl_v) =
            (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        let lam = coeffs.kappa_gd;
        for i in 0..n {
            let k = grid.wavenumber(i);
            let ik = if i == grid.nyquist_index() { Complex64::default() } else { Complex64::new(0.0, k) };
            let k2 = k * k;
            let rb = 1.0 / (1.0 + coeffs.b * k2);
            let rd = 1.0 / (1.0 + coeffs.d * k2);
            lin_z.push(ik * ((-coeffs.kappa1 + coeffs.a * k2) * rb));
            lin_v.push(ik * (-coeffs.kappa2 * (1.0 - coeffs.c * k2) * rd));
            nl_z.push(ik * (-lam * rb));
            nl_v.push(ik * (-0.5 * lam * rd));
        }
        Ok(Self {
            coeffs,
            fourier: Fourier::new(grid),
            config,
            lin_z,
            lin_v,
            nl_z,
            nl_v,
            max_fp_iterations: std::cell::Cell::new(0),
        })
    }

    pub fn coeffs(&self) -> &ModelCoeffs {
        &self.coeffs
    }

    pub fn fourier(&self) -> &Fourier {
        &self.fourier
    }

    pub fn grid(&self) -> &Grid {
        self.fourier.grid()
    }

    pub fn config(&self) -> &StepperConfig {
        &self.config
    }

    fn nonlinear(&self, zeta: &[Complex64], v: &[Complex64]) -> Result<(Vec<Complex64>, Vec<Complex64>), EvolveError> {
        let n = zeta.len();
        if self.coeffs.kappa_gd == 0.0 {
            return Ok((vec![Complex64::default(); n], vec![Complex64::default(); n]));
        }
        let (p, q) = self.fourier.dealiased_quadratics(zeta, v)?;
        let nz = p.iter().zip(&self.nl_z).map(|(a, b)| a * b).collect();
        let nv = q.iter().zip(&self.nl_v).map(|(a, b)| a * b).collect();
        Ok((nz, nv))
    }

    /// Time derivative `(ζ̂′, v̂′)`.
    pub fn rhs(&self, s: &WaveState) -> Result<(Vec<Complex64>, Vec<Complex64>), EvolveError> {
        let (mut dz, mut dv) = self.nonlinear(&s.zeta_hat, &s.v_hat)?;
        for i in 0..dz.len() {
            dz[i] += self.lin_z[i] * s.v_hat[i];
            dv[i] += self.lin_v[i] * s.zeta_hat[i];
        }
        Ok((dz, dv))
    }

    /// One implicit midpoint step `y⁺ = y + h F((y + y⁺)/2)`.
    pub fn imr_substep(&self, s: &WaveState, h: f64) -> Result<WaveState, EvolveError> {
        let n = s.zeta_hat.len();
        let hh = 0.5 * h;
        // (I - hh L)^{-1} per mode
        let inv: Vec<(Complex64, Complex64, Complex64)> = (0..n)
            .map(|i| {
                let (a, b) = (self.lin_z[i] * hh, self.lin_v[i] * hh);
                let det = Complex64::new(1.0, 0.0) - a * b;
                let r = det.inv();
                (r, a * r, b * r)
            })
            .collect();
        let mut wz = s.zeta_hat.clone();
        let mut wv = s.v_hat.clone();
        let mut change = f64::INFINITY;
        for iter in 1..=self.config.fp_max_iters {
            let (nz, nv) = self.nonlinear(&wz, &wv)?;
            let mut diff = 0.0;
            let mut norm = 0.0;
            for i in 0..n {
                let rz = s.zeta_hat[i] + nz[i] * hh;
                let rv = s.v_hat[i] + nv[i] * hh;
                let (r, a, b) = inv[i];
                let z_new = rz * r + a * rv;
                let v_new = b * rz + rv * r;
                diff += (z_new - wz[i]).norm_sqr() + (v_new - wv[i]).norm_sqr();
                norm += z_new.norm_sqr() + v_new.norm_sqr();
                wz[i] = z_new;
                wv[i] = v_new;
            }
            change = if norm > 0.0 { (diff / norm).sqrt() } else { diff.sqrt() };
            if change <= self.config.fp_tolerance {
                if iter > self.max_fp_iterations.get() {
                    self.max_fp_iterations.set(iter);
                }
                let zeta_hat = wz.iter().zip(&s.zeta_hat).map(|(w, y)| w * 2.0 - y).collect();
                let v_hat = wv.iter().zip(&s.v_hat).map(|(w, y)| w * 2.0 - y).collect();
                return Ok(WaveState { t: s.t + h, zeta_hat, v_hat });
            }
            if !change.is_finite() {
                break;
            }
        }
        Err(EvolveError::FixedPointNotConverged { iterations: self.config.fp_max_iters, residual: change })
    }

    /// Three midpoint stages with weights `b₁, 1 - 2b₁, b₁`.
    pub fn composition_step(&self, s: &WaveState, dt: f64) -> Result<WaveState, EvolveError> {
        let [b1, b2, b3] = composition_weights();
        let t0 = s.t;
        let y = self.imr_substep(s, b1 * dt)?;
        let y = self.imr_substep(&y, b2 * dt)?;
        let mut y = self.imr_substep(&y, b3 * dt)?;
        y.t = t0 + dt;
        Ok(y)
    }

    /// Advances to `t + T` with `M = ⌈T/dt⌉` steps of size `T/M`. Observers
    /// see step 0, every `stride` steps (default `⌈M/400⌉`) and the final step.
    pub fn run(
        &self,
        initial: &WaveState,
        final_time: f64,
        stride: Option<usize>,
        observers: &mut [&mut dyn Observer],
    ) -> Result<(WaveState, RunSummary), (EvolveError, WaveState)> {
        let start = Instant::now();
        let n = self.grid().n() as f64;
        let steps = if final_time <= 0.0 { 0 } else { (final_time / self.config.dt - 1e-9).ceil().max(1.0) as usize };
        let dt = if steps == 0 { self.config.dt } else { final_time / steps as f64 };
        let cfl_product = n * dt;
        if let Some(alpha) = self.config.cfl_alpha {
            if cfl_product > alpha {
                return Err((EvolveError::CflViolation { product: cfl_product, alpha }, initial.clone()));
            }
        }
        let stride = stride.unwrap_or_else(|| steps.div_ceil(400)).max(1);
        self.max_fp_iterations.set(0);
        for o in observers.iter_mut() {
            o.observe(0, initial);
        }
        let t0 = initial.t;
        let mut state = initial.clone();
        for step in 1..=steps {
            let mut next = match self.composition_step(&state, dt) {
                Ok(s) => s,
                Err(e) => return Err((e, state)),
            };
            next.t = t0 + step as f64 * dt;
            if !next.is_finite() {
                return Err((EvolveError::NonFinite { step, t: next.t }, state));
            }
            state = next;
            if step % stride == 0 || step == steps {
                for o in observers.iter_mut() {
                    o.observe(step, &state);
                }
            }
        }
        let summary = RunSummary {
            steps,
            dt,
            dt_adjusted: steps > 0 && (dt - self.config.dt).abs() > 1e-15 * dt,
            stride,
            cfl_product,
            max_fp_iterations: self.max_fp_iterations.get(),
            wall_seconds: start.elapsed().as_secs_f64(),
        };
        Ok((state, summary))
    }
}
