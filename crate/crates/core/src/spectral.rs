//! Periodic Fourier grid on `[-L, L)`.
//!
//! Coefficients are stored in FFT order: index `i < N/2` is mode `k = i`,
//! index `i ≥ N/2` is mode `k = i - N`, so index `N/2` holds the Nyquist mode
//! `k = -N/2`. The forward transform divides by `N`, which makes `ĉ(0)` the
//! mean and a plane wave `e^{ik̂x}` have coefficient one.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    half_length: f64,
    n: usize,
}

impl Grid {
    pub fn new(half_length: f64, n: usize) -> Result<Self, SpectralError> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(SpectralError::InvalidGrid(format!("N = {n} must be even and >= 8")));
        }
        if !(half_length > 0.0 && half_length.is_finite()) {
            return Err(SpectralError::InvalidGrid(format!("L = {half_length} must be positive")));
        }
        Ok(Self { half_length, n })
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_length / self.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Integer mode number stored at index `i`.
    pub fn mode(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 { i } else { i - n }
    }

    /// Storage index of mode `k`, `-N/2 ≤ k < N/2`.
    pub fn index(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    pub fn nyquist_index(&self) -> usize {
        self.n / 2
    }

    /// `k̂ = πk/L` at index `i`.
    pub fn wavenumber(&self, i: usize) -> f64 {
        std::f64::consts::PI * self.mode(i) as f64 / self.half_length
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.wavenumber(i)).collect()
    }

    /// Discrete L² norm `(h Σ f_j²)^{1/2}`.
    pub fn l2_norm(&self, values: &[f64]) -> f64 {
        (self.h() * values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// Same norm evaluated from coefficients, `(2L Σ |ĉ|²)^{1/2}`.
    pub fn l2_norm_spectral(&self, coeffs: &[Complex64]) -> f64 {
        (2.0 * self.half_length * coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }
}

/// Field with both representations kept in sync.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub values: Vec<f64>,
    pub coeffs: Vec<Complex64>,
}

/// Transform plans for one grid, including the 2× padded size used for
/// dealiasing. Plans are shared read-only; scratch is allocated per call.
#[derive(Clone)]
pub struct Fourier {
    grid: Grid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    fwd_pad: Arc<dyn Fft<f64>>,
    inv_pad: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fourier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fourier").field("grid", &self.grid).finish()
    }
}

impl Fourier {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        let n = grid.n();
        Self {
            grid,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
            fwd_pad: planner.plan_fft_forward(2 * n),
            inv_pad: planner.plan_fft_inverse(2 * n),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn check(&self, len: usize) -> Result<(), SpectralError> {
        if len != self.grid.n() {
            return Err(SpectralError::LengthMismatch { expected: self.grid.n(), got: len });
        }
        Ok(())
    }

    pub fn to_spectral(&self, values: &[f64]) -> Result<Vec<Complex64>, SpectralError> {
        self.check(values.len())?;
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        let s = 1.0 / self.grid.n() as f64;
        buf.iter_mut().for_each(|c| *c *= s);
        flip_odd(&mut buf);
        Ok(buf)
    }

    /// Real part of the synthesis `Σ ĉ(k) e^{ik̂x_j}`.
    pub fn from_spectral(&self, coeffs: &[Complex64]) -> Result<Vec<f64>, SpectralError> {
        self.check(coeffs.len())?;
        let mut buf = coeffs.to_vec();
        flip_odd(&mut buf);
        self.inv.process(&mut buf);
        Ok(buf.into_iter().map(|c| c.re).collect())
    }

    pub fn field(&self, values: Vec<f64>) -> Result<Field, SpectralError> {
        let coeffs = self.to_spectral(&values)?;
        Ok(Field { values, coeffs })
    }

    pub fn field_from_coeffs(&self, coeffs: Vec<Complex64>) -> Result<Field, SpectralError> {
        let values = self.from_spectral(&coeffs)?;
        Ok(Field { values, coeffs })
    }

    /// Two real fields through one complex transform.
    pub fn to_spectral_pair(
        &self,
        f: &[f64],
        g: &[f64],
    ) -> Result<(Vec<Complex64>, Vec<Complex64>), SpectralError> {
        self.check(f.len())?;
        self.check(g.len())?;
        let n = self.grid.n();
        let mut buf: Vec<Complex64> = f.iter().zip(g).map(|(&a, &b)| Complex64::new(a, b)).collect();
        self.fwd.process(&mut buf);
        let s = 0.5 / n as f64;
        let mut fh = vec![Complex64::default(); n];
        let mut gh = vec![Complex64::default(); n];
        for i in 0..n {
            let z = buf[i];
            let zc = buf[(n - i) % n].conj();
            fh[i] = (z + zc) * s;
            gh[i] = (z - zc) * Complex64::new(0.0, -s);
        }
        flip_odd(&mut fh);
        flip_odd(&mut gh);
        Ok((fh, gh))
    }

    /// Inverse of [`Fourier::to_spectral_pair`].
    pub fn from_spectral_pair(
        &self,
        fh: &[Complex64],
        gh: &[Complex64],
    ) -> Result<(Vec<f64>, Vec<f64>), SpectralError> {
        self.check(fh.len())?;
        self.check(gh.len())?;
        let mut buf: Vec<Complex64> =
            fh.iter().zip(gh).map(|(&a, &b)| a + Complex64::new(0.0, 1.0) * b).collect();
        flip_odd(&mut buf);
        self.inv.process(&mut buf);
        Ok(buf.into_iter().map(|c| (c.re, c.im)).unzip())
    }

    /// Multiplies mode `k` by `(ik̂)^m`; odd orders zero the Nyquist mode.
    pub fn diff(&self, coeffs: &[Complex64], order: u32) -> Vec<Complex64> {
        let mut out = coeffs.to_vec();
        self.diff_in_place(&mut out, order);
        out
    }

    pub fn diff_in_place(&self, coeffs: &mut [Complex64], order: u32) {
        if order == 0 {
            return;
        }
        for (i, c) in coeffs.iter_mut().enumerate() {
            let ik = Complex64::new(0.0, self.grid.wavenumber(i));
            *c *= ik.powu(order);
        }
        if order % 2 == 1 {
            coeffs[self.grid.nyquist_index()] = Complex64::default();
        }
    }

    /// Values of the spectral derivative of order `m`.
    pub fn diff_values(&self, values: &[f64], order: u32) -> Result<Vec<f64>, SpectralError> {
        let c = self.to_spectral(values)?;
        self.from_spectral(&self.diff(&c, order))
    }

    fn pad(&self, coeffs: &[Complex64], out: &mut [Complex64]) {
        let n = self.grid.n();
        let half = n / 2;
        out.iter_mut().for_each(|c| *c = Complex64::default());
        out[..half].copy_from_slice(&coeffs[..half]);
        out[half + 1 + n..2 * n].copy_from_slice(&coeffs[half + 1..n]);
        // Nyquist split evenly between ±N/2 so the padded field stays real.
        let nyq = coeffs[half] * 0.5;
        out[half] = nyq;
        out[half + n] = nyq;
    }

    fn truncate(&self, padded: &[Complex64], scale: f64) -> Vec<Complex64> {
        let n = self.grid.n();
        let half = n / 2;
        let mut out = vec![Complex64::default(); n];
        for i in 0..half {
            out[i] = padded[i] * scale;
        }
        for i in half + 1..n {
            out[i] = padded[i + n] * scale;
        }
        out
    }

    /// Galerkin product `P_N(f g)` via 2× zero padding. The Nyquist mode of
    /// the result is zero. The padded transforms skip the `(-1)^k` node phase:
    /// they evaluate everything shifted by `L`, which commutes with products.
    pub fn dealiased_product(&self, f: &[Complex64], g: &[Complex64]) -> Result<Vec<Complex64>, SpectralError> {
        self.check(f.len())?;
        self.check(g.len())?;
        let m = 2 * self.grid.n();
        let mut pf = vec![Complex64::default(); m];
        let mut pg = vec![Complex64::default(); m];
        self.pad(f, &mut pf);
        self.pad(g, &mut pg);
        // f + i g in one inverse transform
        let mut buf: Vec<Complex64> = pf.iter().zip(&pg).map(|(&a, &b)| a + Complex64::new(0.0, 1.0) * b).collect();
        self.inv_pad.process(&mut buf);
        let mut prod: Vec<Complex64> = buf.iter().map(|z| Complex64::new(z.re * z.im, 0.0)).collect();
        self.fwd_pad.process(&mut prod);
        Ok(self.truncate(&prod, 1.0 / m as f64))
    }

    /// `(P_N(ζv), P_N(v²))` from two transforms of the padded size.
    pub fn dealiased_quadratics(
        &self,
        zeta: &[Complex64],
        v: &[Complex64],
    ) -> Result<(Vec<Complex64>, Vec<Complex64>), SpectralError> {
        self.check(zeta.len())?;
        self.check(v.len())?;
        let m = 2 * self.grid.n();
        let mut pz = vec![Complex64::default(); m];
        let mut pv = vec![Complex64::default(); m];
        self.pad(zeta, &mut pz);
        self.pad(v, &mut pv);
        let mut buf: Vec<Complex64> = pz.iter().zip(&pv).map(|(&a, &b)| a + Complex64::new(0.0, 1.0) * b).collect();
        self.inv_pad.process(&mut buf);
        // ζv in the real part, v² in the imaginary part
        for z in buf.iter_mut() {
            *z = Complex64::new(z.re * z.im, z.im * z.im);
        }
        self.fwd_pad.process(&mut buf);
        let s = 0.5 / m as f64;
        let mut p = vec![Complex64::default(); m];
        let mut q = vec![Complex64::default(); m];
        for i in 0..m {
            let z = buf[i];
            let zc = buf[(m - i) % m].conj();
            p[i] = z + zc;
            q[i] = (z - zc) * Complex64::new(0.0, -1.0);
        }
        Ok((self.truncate(&p, s), self.truncate(&q, s)))
    }

    /// Pointwise product on the nodes (aliased collocation product).
    pub fn collocation_product(&self, f: &[Complex64], g: &[Complex64]) -> Result<Vec<Complex64>, SpectralError> {
        let (fv, gv) = self.from_spectral_pair(f, g)?;
        let prod: Vec<f64> = fv.iter().zip(&gv).map(|(a, b)| a * b).collect();
        self.to_spectral(&prod)
    }

    /// Shift by `x0`: returns coefficients of `f(x - x0)`.
    pub fn translate(&self, coeffs: &[Complex64], x0: f64) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| c * Complex64::from_polar(1.0, -self.grid.wavenumber(i) * x0))
            .collect();
        // a real field cannot carry a non-real Nyquist amplitude
        let ny = self.grid.nyquist_index();
        out[ny] = Complex64::new(out[ny].re, 0.0);
        out
    }
}

/// Converts between DFT coefficients (nodes from index 0) and plane-wave
/// amplitudes on nodes starting at `x_0 = -L`: `e^{ik̂x_j} = (-1)^k e^{2πikj/N}`.
fn flip_odd(buf: &mut [Complex64]) {
    buf.iter_mut().skip(1).step_by(2).for_each(|c| *c = -*c);
}

/// `max |ĉ(-k) - conj(ĉ(k))|` over all modes.
pub fn conjugate_symmetry_defect(grid: &Grid, coeffs: &[Complex64]) -> f64 {
    (0..grid.n())
        .map(|i| {
            let j = (grid.n() - i) % grid.n();
            (coeffs[j] - coeffs[i].conj()).norm()
        })
        .fold(0.0, f64::max)
}
