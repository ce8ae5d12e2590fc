//! Observers and measurements on evolved states: discrete invariants,
//! peak tracking, errors against exact solutions and convergence tables.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::evolve::{EvolveError, Evolver, Observer, StepperConfig, WaveState};
use crate::model::{ModelCoeffs, Polarity};
use crate::spectral::{Fourier, Grid, SpectralError};
use crate::waves::{sample_exact, ExactSech2, WaveError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantRecord {
    pub t: f64,
    pub i_h: f64,
    pub e_h: f64,
    pub l2_zeta: f64,
    pub l2_v: f64,
    pub l2_u: f64,
}

/// Discrete momentum and Hamiltonian with spectral derivatives:
///
/// ```text
/// I_h = h Σ (U V + b U′V′)
/// E_h = h Σ (κ₂U²/2 + κ₁V²/2 - a V′²/2 - κ₂c U′²/2 + κ U V²/2)
/// ```
///
/// with `U = ζ`, `V = v_β`. Conserved when `b = d`.
pub fn invariants(s: &WaveState, fourier: &Fourier, k: &ModelCoeffs) -> Result<InvariantRecord, SpectralError> {
    let g = fourier.grid();
    let h = g.h();
    let (u, v) = fourier.from_spectral_pair(&s.zeta_hat, &s.v_hat)?;
    let (du, dv) = fourier.from_spectral_pair(&fourier.diff(&s.zeta_hat, 1), &fourier.diff(&s.v_hat, 1))?;
    let mut i_h = 0.0;
    let mut e_h = 0.0;
    for j in 0..g.n() {
        i_h += u[j] * v[j] + k.b * du[j] * dv[j];
        e_h += 0.5 * k.kappa2 * u[j] * u[j] + 0.5 * k.kappa1 * v[j] * v[j]
            - 0.5 * k.a * dv[j] * dv[j]
            - 0.5 * k.kappa2 * k.c * du[j] * du[j]
            + 0.5 * k.kappa_gd * u[j] * v[j] * v[j];
    }
    let uu = s.u_values(fourier, k.beta)?;
    Ok(InvariantRecord {
        t: s.t,
        i_h: h * i_h,
        e_h: h * e_h,
        l2_zeta: g.l2_norm(&u),
        l2_v: g.l2_norm(&v),
        l2_u: g.l2_norm(&uu),
    })
}

/// Records [`invariants`] at each observation.
#[derive(Debug, Clone)]
pub struct InvariantObserver {
    fourier: Fourier,
    coeffs: ModelCoeffs,
    pub records: Vec<InvariantRecord>,
    pub error: Option<SpectralError>,
}

impl InvariantObserver {
    pub fn new(fourier: Fourier, coeffs: ModelCoeffs) -> Self {
        Self { fourier, coeffs, records: Vec::new(), error: None }
    }

    /// `max |X(t) - X(0)| / |X(0)|` for `I_h` and `E_h`.
    pub fn max_relative_drift(&self) -> (f64, f64) {
        let Some(first) = self.records.first() else { return (0.0, 0.0) };
        let rel = |x: f64, x0: f64| if x0 == 0.0 { (x - x0).abs() } else { ((x - x0) / x0).abs() };
        self.records.iter().fold((0.0f64, 0.0f64), |(di, de), r| {
            (di.max(rel(r.i_h, first.i_h)), de.max(rel(r.e_h, first.e_h)))
        })
    }

    /// `max |X(t) - X(0)|` for `I_h` and `E_h`.
    pub fn max_absolute_drift(&self) -> (f64, f64) {
        let Some(first) = self.records.first() else { return (0.0, 0.0) };
        self.records.iter().fold((0.0f64, 0.0f64), |(di, de), r| {
            (di.max((r.i_h - first.i_h).abs()), de.max((r.e_h - first.e_h).abs()))
        })
    }
}

impl Observer for InvariantObserver {
    fn observe(&mut self, _step: usize, state: &WaveState) {
        match invariants(state, &self.fourier, &self.coeffs) {
            Ok(r) => self.records.push(r),
            Err(e) => self.error = Some(e),
        }
    }
}

/// Predicted crest trajectory `x₀ + c_s t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakReference {
    pub x0: f64,
    pub c_s: f64,
}

impl PeakReference {
    pub fn position(&self, t: f64) -> f64 {
        self.x0 + self.c_s * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakTrack {
    pub t: f64,
    /// Signed interpolated extremum of `ζ`.
    pub amplitude: f64,
    /// Crest abscissa in `[-L, L)`.
    pub location: f64,
    /// Crest abscissa accumulated across periodic wraps.
    pub unwrapped_location: f64,
    pub speed: Option<f64>,
    /// `unwrapped_location - (x₀ + c_s t)`.
    pub phase_error: Option<f64>,
    /// A secondary extremum exceeds a tenth of the tracked one.
    pub multi_peak: bool,
}

/// Wraps `x` into `[-L, L)`.
pub fn wrap(x: f64, half_length: f64) -> f64 {
    let p = 2.0 * half_length;
    x - p * ((x + half_length) / p).floor()
}

/// Sub-grid extremum through nodes `j-1, j, j+1` of `y`: `(offset in h, value)`.
fn quadratic_fit(ym: f64, y0: f64, yp: f64) -> (f64, f64) {
    let den = ym - 2.0 * y0 + yp;
    if den == 0.0 {
        return (0.0, y0);
    }
    let off = 0.5 * (ym - yp) / den;
    (off, y0 - 0.25 * (ym - yp) * off)
}

/// Extremal node of `s ζ` restricted to an optional periodic window `(center, half-width)`.
fn extremal_node(zeta: &[f64], grid: &Grid, sign: f64, window: Option<(f64, f64)>) -> Option<usize> {
    let l = grid.half_length();
    (0..zeta.len())
        .filter(|&j| window.is_none_or(|(c, w)| wrap(grid.node(j) - c, l).abs() <= w))
        .max_by(|&i, &j| (sign * zeta[i]).total_cmp(&(sign * zeta[j])))
}

/// Crest of `ζ` without time bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crest {
    pub location: f64,
    pub amplitude: f64,
    pub multi_peak: bool,
}

/// Locates the crest of `ζ` with a three-point quadratic fit. `window`
/// restricts the search to a periodic neighbourhood `(center, half-width)`,
/// used to follow one of several waves.
pub fn locate_crest(zeta: &[f64], grid: &Grid, polarity: Polarity, window: Option<(f64, f64)>) -> Crest {
    let n = zeta.len();
    let sign = polarity.sign();
    let l = grid.half_length();
    let j = extremal_node(zeta, grid, sign, window).unwrap_or(0);
    let at = |i: isize| sign * zeta[i.rem_euclid(n as isize) as usize];
    let ji = j as isize;
    let (off, peak) = quadratic_fit(at(ji - 1), at(ji), at(ji + 1));
    let location = wrap(grid.node(j) + off * grid.h(), l);

    // nodes above half height around the crest
    let mut reach = 1isize;
    while reach < n as isize / 2 && (at(ji - reach) > 0.5 * peak || at(ji + reach) > 0.5 * peak) {
        reach += 1;
    }
    let exclusion = 2 * reach;
    let mut second = 0.0f64;
    for i in 0..n as isize {
        let d = (i - ji).rem_euclid(n as isize);
        if d.min(n as isize - d) <= exclusion {
            continue;
        }
        if window.is_some_and(|(c, w)| wrap(grid.node(i as usize) - c, l).abs() > w) {
            continue;
        }
        let y = at(i);
        if y >= at(i - 1) && y >= at(i + 1) {
            second = second.max(y);
        }
    }
    Crest { location, amplitude: sign * peak, multi_peak: 10.0 * second > peak }
}

/// Newton refinement of a crest on the trigonometric interpolant of `ζ̂`.
pub fn refine_crest(zeta_hat: &[Complex64], grid: &Grid, crest: Crest) -> Crest {
    let ny = grid.nyquist_index();
    let eval = |x: f64| -> (f64, f64, f64) {
        let (mut f, mut d1, mut d2) = (0.0, 0.0, 0.0);
        for (i, c) in zeta_hat.iter().enumerate() {
            let k = grid.wavenumber(i);
            let e = c * Complex64::from_polar(1.0, k * x);
            f += e.re;
            if i != ny {
                d1 -= k * e.im;
                d2 -= k * k * e.re;
            }
        }
        (f, d1, d2)
    };
    let mut x = crest.location;
    for _ in 0..20 {
        let (_, d1, d2) = eval(x);
        if d2 == 0.0 {
            break;
        }
        let step = d1 / d2;
        if step.abs() > grid.h() {
            return crest;
        }
        x -= step;
        if step.abs() <= 1e-14 * grid.half_length() {
            break;
        }
    }
    Crest { location: wrap(x, grid.half_length()), amplitude: eval(x).0, ..crest }
}

/// Adds unwrapping, speed and phase bookkeeping to a crest.
pub fn link_crest(
    crest: Crest,
    t: f64,
    half_length: f64,
    prev: Option<&PeakTrack>,
    reference: Option<&PeakReference>,
) -> PeakTrack {
    let location = crest.location;
    let (unwrapped_location, speed) = match prev {
        Some(p) => {
            let u = p.unwrapped_location + wrap(location - p.location, half_length);
            let dt = t - p.t;
            (u, if dt > 0.0 { Some((u - p.unwrapped_location) / dt) } else { p.speed })
        }
        None => {
            // start on the reference branch so the phase error is a small number
            let u = match reference {
                Some(r) => r.position(t) + wrap(location - r.position(t), half_length),
                None => location,
            };
            (u, None)
        }
    };
    PeakTrack {
        t,
        amplitude: crest.amplitude,
        location,
        unwrapped_location,
        speed,
        phase_error: reference.map(|r| unwrapped_location - r.position(t)),
        multi_peak: crest.multi_peak,
    }
}

/// [`locate_crest`] followed by [`link_crest`].
pub fn track_peak(
    zeta: &[f64],
    grid: &Grid,
    t: f64,
    polarity: Polarity,
    prev: Option<&PeakTrack>,
    reference: Option<&PeakReference>,
    window: Option<(f64, f64)>,
) -> PeakTrack {
    link_crest(locate_crest(zeta, grid, polarity, window), t, grid.half_length(), prev, reference)
}

/// Follows one crest across observations.
#[derive(Debug, Clone)]
pub struct PeakTracker {
    fourier: Fourier,
    polarity: Polarity,
    reference: Option<PeakReference>,
    /// Half-width of a search window centred on the reference trajectory.
    window: Option<f64>,
    refine: bool,
    pub tracks: Vec<PeakTrack>,
}

impl PeakTracker {
    pub fn new(fourier: Fourier, polarity: Polarity, reference: Option<PeakReference>) -> Self {
        Self { fourier, polarity, reference, window: None, refine: false, tracks: Vec::new() }
    }

    /// Restricts the search to `|x - (x₀ + c_s t)| ≤ half_width` (periodically).
    pub fn windowed(mut self, half_width: f64) -> Self {
        self.window = Some(half_width);
        self
    }

    /// Refines each crest on the trigonometric interpolant.
    pub fn refined(mut self) -> Self {
        self.refine = true;
        self
    }

    pub fn last(&self) -> Option<&PeakTrack> {
        self.tracks.last()
    }

    /// Speed over the last `span` of time, less sensitive to grid locking than
    /// the per-observation difference.
    pub fn mean_speed(&self, span: f64) -> Option<f64> {
        let last = self.tracks.last()?;
        let first = self.tracks.iter().find(|p| p.t >= last.t - span)?;
        (last.t > first.t).then(|| (last.unwrapped_location - first.unwrapped_location) / (last.t - first.t))
    }

    pub fn track(&mut self, zeta: &[f64], t: f64) -> PeakTrack {
        self.track_with(zeta, None, t)
    }

    fn track_with(&mut self, zeta: &[f64], zeta_hat: Option<&[Complex64]>, t: f64) -> PeakTrack {
        let g = self.fourier.grid();
        let window = match (self.window, self.reference) {
            (Some(w), Some(r)) => Some((r.position(t), w)),
            _ => None,
        };
        let mut crest = locate_crest(zeta, g, self.polarity, window);
        if let Some(c) = zeta_hat {
            crest = refine_crest(c, g, crest);
        }
        let p = link_crest(crest, t, g.half_length(), self.tracks.last(), self.reference.as_ref());
        self.tracks.push(p);
        p
    }
}

impl Observer for PeakTracker {
    fn observe(&mut self, _step: usize, state: &WaveState) {
        if let Ok(z) = self.fourier.from_spectral(&state.zeta_hat) {
            let hat = self.refine.then_some(state.zeta_hat.as_slice());
            self.track_with(&z, hat, state.t);
        }
    }
}

/// `‖a - b‖ / ‖b‖` for coefficient vectors, by Parseval.
pub fn relative_l2_error(a: &[Complex64], b: &[Complex64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let norm: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    if norm == 0.0 { diff.sqrt() } else { (diff / norm).sqrt() }
}

/// Discrete L² errors of `(ζ, v_β)`, normalized by the reference norm and absolute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct L2Errors {
    pub zeta: f64,
    pub v: f64,
    pub zeta_abs: f64,
    pub v_abs: f64,
}

pub fn error_vs_reference(s: &WaveState, reference: &WaveState, grid: &Grid) -> L2Errors {
    let abs = |a: &[Complex64], b: &[Complex64]| {
        let d: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        grid.l2_norm_spectral(&d)
    };
    L2Errors {
        zeta: relative_l2_error(&s.zeta_hat, &reference.zeta_hat),
        v: relative_l2_error(&s.v_hat, &reference.v_hat),
        zeta_abs: abs(&s.zeta_hat, &reference.zeta_hat),
        v_abs: abs(&s.v_hat, &reference.v_hat),
    }
}

/// Discrete L² errors against the exact wave at `s.t`.
pub fn error_vs_exact(s: &WaveState, e: &ExactSech2, fourier: &Fourier) -> Result<L2Errors, WaveError> {
    let exact = sample_exact(e, fourier, s.t, 0.0)?;
    Ok(error_vs_reference(s, &exact.state, fourier.grid()))
}

/// Exact solutions used as convergence references.
pub trait ExactReference: Sync {
    fn state(&self, fourier: &Fourier, t: f64) -> Result<WaveState, WaveError>;
}

impl ExactReference for ExactSech2 {
    fn state(&self, fourier: &Fourier, t: f64) -> Result<WaveState, WaveError> {
        Ok(sample_exact(self, fourier, t, 0.0)?.state)
    }
}

/// Single Fourier mode of the linearized system, `ζ̂ = A e^{-iωt}` at mode `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearMode {
    pub coeffs: ModelCoeffs,
    pub mode: i64,
    pub amplitude: f64,
}

impl LinearMode {
    /// `(ζ̂′ coupling, ω)` at wavenumber `k̂`.
    fn symbols(&self, k: f64) -> (Complex64, f64) {
        let c = &self.coeffs;
        let a = Complex64::new(0.0, k * (-c.kappa1 + c.a * k * k) / (1.0 + c.b * k * k));
        let b = Complex64::new(0.0, -k * c.kappa2 * (1.0 - c.c * k * k) / (1.0 + c.d * k * k));
        (a, (-(a * b).re).max(0.0).sqrt())
    }
}

impl ExactReference for LinearMode {
    fn state(&self, fourier: &Fourier, t: f64) -> Result<WaveState, WaveError> {
        let g = fourier.grid();
        let n = g.n();
        let i = g.index(self.mode);
        let (a, w) = self.symbols(g.wavenumber(i));
        if a.norm() == 0.0 || w == 0.0 {
            return Err(WaveError::InvalidOptions(format!("mode {} is not oscillatory", self.mode)));
        }
        let lam = Complex64::new(0.0, -w);
        let z = self.amplitude * (lam * t).exp();
        let mut zeta_hat = vec![Complex64::default(); n];
        let mut v_hat = vec![Complex64::default(); n];
        zeta_hat[i] = z;
        v_hat[i] = lam * z / a;
        let j = g.index(-self.mode);
        zeta_hat[j] = zeta_hat[i].conj();
        v_hat[j] = v_hat[i].conj();
        Ok(WaveState { t, zeta_hat, v_hat })
    }
}

/// One `(N, dt)` cell of a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n_modes: usize,
    pub dt: f64,
    pub error_zeta: Option<f64>,
    pub error_v: Option<f64>,
    pub error_zeta_abs: Option<f64>,
    pub error_v_abs: Option<f64>,
    /// Rate against the previous `dt` of the same `N`.
    pub rate_zeta: Option<f64>,
    pub rate_v: Option<f64>,
    pub steps: usize,
    pub wall_seconds: f64,
    pub failure: Option<String>,
}

#[derive(Clone, Copy)]
pub struct ConvergenceProblem<'a> {
    pub coeffs: ModelCoeffs,
    pub reference: &'a dyn ExactReference,
    pub half_length: f64,
    pub final_time: f64,
    pub stepper: StepperConfig,
}

/// `log(e₁/e₂) / log(dt₁/dt₂)` between consecutive entries.
pub fn observed_rates(dts: &[f64], errors: &[Option<f64>]) -> Vec<Option<f64>> {
    (0..dts.len())
        .map(|i| {
            if i == 0 {
                return None;
            }
            match (errors[i - 1], errors[i]) {
                (Some(e1), Some(e2)) if e1 > 0.0 && e2 > 0.0 => Some((e1 / e2).ln() / (dts[i - 1] / dts[i]).ln()),
                _ => None,
            }
        })
        .collect()
}

fn run_cell(p: &ConvergenceProblem, n: usize, dt: f64) -> Result<(L2Errors, usize, f64), String> {
    let grid = Grid::new(p.half_length, n).map_err(|e| e.to_string())?;
    let fourier = Fourier::new(grid);
    let initial = p.reference.state(&fourier, 0.0).map_err(|e| e.to_string())?;
    let ev = Evolver::new(p.coeffs, grid, StepperConfig { dt, ..p.stepper }).map_err(|e| e.to_string())?;
    let (last, summary) = ev.run(&initial, p.final_time, None, &mut []).map_err(|(e, _): (EvolveError, _)| e.to_string())?;
    let exact = p.reference.state(&fourier, last.t).map_err(|e| e.to_string())?;
    Ok((error_vs_reference(&last, &exact, &grid), summary.steps, summary.wall_seconds))
}

/// Runs every `(N, dt)` cell, `jobs` at a time (0 uses all cores), and
/// assembles rows ordered by `N` then by the given `dt` order.
pub fn convergence_table(p: &ConvergenceProblem, dts: &[f64], ns: &[usize], jobs: usize) -> Vec<ConvergenceRow> {
    let cells: Vec<(usize, f64)> = ns.iter().flat_map(|&n| dts.iter().map(move |&dt| (n, dt))).collect();
    let work = || -> Vec<ConvergenceRow> {
        cells
            .par_iter()
            .map(|&(n, dt)| match run_cell(p, n, dt) {
                Ok((e, steps, wall)) => ConvergenceRow {
                    n_modes: n,
                    dt,
                    error_zeta: Some(e.zeta),
                    error_v: Some(e.v),
                    error_zeta_abs: Some(e.zeta_abs),
                    error_v_abs: Some(e.v_abs),
                    rate_zeta: None,
                    rate_v: None,
                    steps,
                    wall_seconds: wall,
                    failure: None,
                },
                Err(msg) => ConvergenceRow {
                    n_modes: n,
                    dt,
                    error_zeta: None,
                    error_v: None,
                    error_zeta_abs: None,
                    error_v_abs: None,
                    rate_zeta: None,
                    rate_v: None,
                    steps: 0,
                    wall_seconds: 0.0,
                    failure: Some(msg),
                },
            })
            .collect()
    };
    let mut rows = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(work),
        Err(_) => work(),
    };
    for chunk in rows.chunks_mut(dts.len().max(1)) {
        let rz = observed_rates(dts, &chunk.iter().map(|r| r.error_zeta).collect::<Vec<_>>());
        let rv = observed_rates(dts, &chunk.iter().map(|r| r.error_v).collect::<Vec<_>>());
        for (i, r) in chunk.iter_mut().enumerate() {
            r.rate_zeta = rz[i];
            r.rate_v = rv[i];
        }
    }
    rows
}
