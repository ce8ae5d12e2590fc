//! Subcommand bodies. Each fills the session summary and writes its
//! artifacts; errors after the output directory exists leave partial
//! artifacts in place.

use std::path::Path;

use num_complex::Complex64;
use serde_json::{json, Map, Value};

use super::config::{Direction, ExperimentKind, GuessKind, InitialCondition, Resolved};
use super::output::{read_profile, Cell, OutputDir, Profile, ProfileMeta};
use super::CliError;
use crate::diagnostics::{
    error_vs_exact, locate_crest, ConvergenceProblem, InvariantObserver, L2Errors, PeakReference, PeakTrack,
    PeakTracker,
};
use crate::evolve::{EvolveError, Evolver, Observer, WaveState};
use crate::model::{
    cc_speed_bound, characteristic_roots, classify_linear, classify_nft, classify_wellposed, delta_polynomial,
    dispersion_profile, toland_segment, ModelCoeffs, Polarity,
};
use crate::spectral::{Fourier, Grid};
use crate::waves::{
    default_guess, exact_sech2, sample_exact, substitution_residual, suggested_guess, ExactBranch, ExactSech2,
    PetviashviliSolver, ProfileMetrics, SolitaryWave, WaveError, WaveType,
};

/// Default crest search half-width for superposed waves.
const COLLIDE_WINDOW: f64 = 10.0;
/// `max |ζ|` over `|x| ≥ 0.9 L` relative to the amplitude above which a
/// decaying profile is reported as wrapped.
const WRAP_TAIL: f64 = 1e-8;

/// Mutable state shared by the subcommands of one run.
#[derive(Debug)]
pub struct Session {
    pub out: OutputDir,
    pub quiet: bool,
    pub jobs: usize,
    pub summary: Map<String, Value>,
    pub warnings: Vec<String>,
    pub conventions: Vec<String>,
    pub steps: Option<usize>,
}

impl Session {
    fn note(&mut self, key: &str, value: Value) {
        self.summary.insert(key.to_string(), value);
    }

    fn progress(&self, msg: &str) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }
}

pub fn map_wave(e: WaveError) -> CliError {
    match e {
        WaveError::MaxItersExceeded(_) | WaveError::DivergenceDetected(_) | WaveError::Collapsed(_) => {
            CliError::NonConvergence(e.to_string())
        }
        other => CliError::Config(other.to_string()),
    }
}

pub fn map_evolve(e: EvolveError) -> CliError {
    match e {
        EvolveError::FixedPointNotConverged { residual, .. } if !residual.is_finite() => CliError::BlowUp(e.to_string()),
        EvolveError::FixedPointNotConverged { .. } => CliError::NonConvergence(e.to_string()),
        EvolveError::NonFinite { .. } => CliError::BlowUp(e.to_string()),
        other => CliError::Config(other.to_string()),
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

/// Linear and existence classification at the run's primary speed.
pub fn classification(r: &Resolved) -> Value {
    let k = &r.coeffs;
    let mut m = Map::new();
    m.insert("linear_case".into(), to_value(&classify_linear(k)));
    m.insert("wellposed_case".into(), to_value(&classify_wellposed(k)));
    m.insert("hamiltonian".into(), json!(k.is_hamiltonian()));
    m.insert("consistency_residual".into(), json!(k.consistency_residual()));
    if let Some(cs) = primary_speed(r) {
        let c = classify_nft(k, cs);
        m.insert("nft".into(), to_value(&c));
        m.insert(
            "predicted_wave_type".into(),
            to_value(&c.nft_case.and_then(|n| n.predicted_wave_type()).map(|w| w.to_string())),
        );
    }
    Value::Object(m)
}

fn primary_speed(r: &Resolved) -> Option<f64> {
    r.config
        .wave
        .as_ref()
        .and_then(|w| w.speed)
        .or_else(|| r.config.superposition.iter().find_map(|s| s.speed))
}

pub fn run(r: &Resolved, s: &mut Session) -> Result<(), CliError> {
    match r.kind {
        ExperimentKind::DeriveParams => derive_params(r, s),
        ExperimentKind::Classify => classify(r, s),
        ExperimentKind::Dispersion => dispersion(r, s),
        ExperimentKind::Exact => exact(r, s),
        ExperimentKind::Solitary => solitary(r, s),
        ExperimentKind::Evolve | ExperimentKind::Perturb | ExperimentKind::Collide | ExperimentKind::Resolve => {
            evolution(r, s)
        }
        ExperimentKind::Convergence => convergence(r, s),
    }
}

fn derive_params(r: &Resolved, s: &mut Session) -> Result<(), CliError> {
    s.out.write_json("coeffs.json", &r.coeffs)?;
    s.note("coeffs", to_value(&r.coeffs));
    Ok(())
}

fn classify(r: &Resolved, s: &mut Session) -> Result<(), CliError> {
    let k = &r.coeffs;
    let mut m = match classification(r) {
        Value::Object(m) => m,
        _ => Map::new(),
    };
    m.insert("cc_speed_bound".into(), json!(cc_speed_bound(k)));
    if let Some(cs) = primary_speed(r) {
        let roots = characteristic_roots(k, cs)
            .map(|rs| rs.iter().map(|z| json!([z.re, z.im])).collect::<Vec<_>>())
            .ok();
        m.insert("characteristic_roots".into(), json!(roots));
        m.insert("delta_polynomial".into(), to_value(&delta_polynomial(k, cs)));
        m.insert("toland_segment".into(), to_value(&toland_segment(k, cs).ok()));
    }
    let v = Value::Object(m);
    s.out.write_json("classification.json", &v)?;
    s.note("classification", v);
    Ok(())
}

fn dispersion(r: &Resolved, s: &mut Session) -> Result<(), CliError> {
    let block = r.config.dispersion.unwrap_or_default();
    if block.samples < 2 || !(block.x_max > 0.0) {
        return Err(CliError::Config("dispersion: samples >= 2 and x_max > 0 required".into()));
    }
    let xs: Vec<f64> = (0..block.samples).map(|i| block.x_max * i as f64 / (block.samples - 1) as f64).collect();
    let p = dispersion_profile(&r.coeffs, &xs).map_err(|e| CliError::Config(e.to_string()))?;
    let rows = (0..xs.len()).map(|i| vec![Cell::F(p.x[i]), Cell::F(p.phi[i]), Cell::F(p.psi[i])]);
    s.out.write_csv("dispersion.csv", &["x", "phi", "psi"], rows)?;
    s.note("p1", json!(p.p1));
    s.note("p2", json!(p.p2));
    s.note("p3", json!(p.p3));
    s.note("phi_star", json!(p.phi_star));
    s.note("x_star", json!(p.x_star));
    s.note("phi_at_zero", json!(p.phi[0]));
    Ok(())
}

fn exact_wave(k: &ModelCoeffs, b_ratio: Option<f64>) -> Result<ExactSech2, CliError> {
    let branch = b_ratio.map_or(ExactBranch::Generic, |b| ExactBranch::Degenerate { b_ratio: b });
    exact_sech2(k, branch).map_err(|e| CliError::Config(e.to_string()))
}

fn exact_summary(e: &ExactSech2) -> Value {
    json!({
        "c_s": e.c_s,
        "amplitude": e.amplitude(),
        "inverse_width": e.width(),
        "b_ratio": e.b_ratio,
        "b_ratio_squared": e.b_ratio * e.b_ratio,
        "mu1": e.mu1,
        "mu2": e.mu2,
        "center": e.x0,
    })
}

fn wrap_warning(s: &mut Session, what: &str) {
    s.warnings.push(format!("{what}: profile does not decay to round-off at x = ±L; periodic images overlap"));
}

fn exact(r: &Resolved, s: &mut Session) -> Result<(), CliError> {
    let (center, b_ratio) = match r.config.initial {
        Some(InitialCondition::Exact { center, b_ratio }) => (center, b_ratio),
        _ => (0.0, None),
    };
    let grid = r.grid()?;
    let fourier = Fourier::new(grid);
    let e = exact_wave(&r.coeffs, b_ratio)?.at(center);
    let sample = sample_exact(&e, &fourier, 0.0, r.coeffs.beta).map_err(map_wave)?;
    let residual = substitution_residual(&e.at(0.0), &r.coeffs, &fourier).map_err(map_wave)?;
    if sample.wrap_warning {
        wrap_warning(s, "exact wave");
    }
    let mut meta = ProfileMeta::new("exact", &grid, &r.coeffs, Some(e.c_s), 0.0);
    meta.residual = Some(residual);
    meta.wave_type = Some(WaveType::Csw.to_string());
    s.out.write_profile("profile", &Profile { meta, zeta: sample.zeta, v_beta: sample.v_beta, u: sample.u })?;
    let mut sum = exact_summary(&e);
    sum["substitution_residual"] = json!(residual);
    s.note("exact", sum);
    Ok(())
}

/// Profile solve for the `wave` block at speed `c_s`.
fn solve_wave(r: &Resolved, grid: &Grid, c_s: f64) -> Result<SolitaryWave, WaveError> {
    let w = r.config.wave.clone().unwrap_or_else(|| super::config::WaveBlock {
        speed: Some(c_s),
        speed_offset: None,
        guess: GuessKind::Auto,
        petviashvili: Default::default(),
    });
    let solver = PetviashviliSolver::new(r.coeffs, c_s, *grid, w.petviashvili)?;
    let (gz, gv) = match &w.guess {
        GuessKind::Auto => suggested_guess(&r.coeffs, c_s, grid),
        GuessKind::Sech2 { amplitude, width } => default_guess(grid, *amplitude, *width),
        GuessKind::Exact => {
            let e = exact_sech2(&r.coeffs, ExactBranch::Generic)?;
            let smp = sample_exact(&e, solver.fourier(), 0.0, r.coeffs.beta)?;
            (smp.zeta, smp.v_beta)
        }
        GuessKind::Profile { path } => {
            let p = load_on_grid(path, grid).map_err(|e| WaveError::InvalidOptions(e.to_string()))?;
            (p.zeta, p.v_beta)
        }
    };
    solver.solve(&gz, &gv)
}

fn load_on_grid(path: &Path, grid: &Grid) -> Result<Profile, CliError> {
    let p = read_profile(path)?;
    if p.meta.n_modes != grid.n() || (p.meta.half_length - grid.half_length()).abs() > 1e-12 * grid.half_length() {
        return Err(CliError::Config(format!(
            "profile {} is on (L, N) = ({}, {}), the run uses ({}, {})",
            path.display(),
            p.meta.half_length,
            p.meta.n_modes,
            grid.half_length(),
            grid.n()
        )));
    }
    Ok(p)
}

fn decays(w: &SolitaryWave) -> bool {
    ProfileMetrics::of(&w.zeta).tail_amplitude <= WRAP_TAIL * w.amplitude.abs()
}

fn write_wave(s: &mut Session, stem: &str, w: &SolitaryWave, grid: &Grid, k: &ModelCoeffs) -> Result<(), CliError> {
    let mut meta = ProfileMeta::new("solitary", grid, k, Some(w.c_s), 0.0);
    meta.residual = Some(w.final_residual());
    meta.wave_type = Some(w.wave_type.to_string());
    s.out.write_profile(stem, &Profile { meta, zeta: w.zeta.clone(), v_beta: w.v_beta.clone(), u: w.u.clone() })
}

fn write_histories(s: &mut Session, prefix: &str, w: &SolitaryWave) -> Result<(), CliError> {
    let rows = w
        .residual_history
        .iter()
        .enumerate()
        .map(|(i, r)| vec![Cell::U(i + 1), Cell::F(*r), Cell::Opt(w.mh_history.get(i).copied())]);
    s.out.write_csv(&format!("{prefix}residuals.csv"), &["iteration", "residual", "m_h"], rows)?;
    let rows = w.outer_residual_history.iter().enumerate().map(|(i, r)| vec![Cell::U(i + 1), Cell::F(*r)]);
    s.out.write_csv(&format!("{prefix}outer_residuals.csv"), &["outer_iteration", "residual"], rows)
}

fn wave_summary(w: &SolitaryWave) -> Value {
    json!({
        "c_s": w.c_s,
        "amplitude": w.amplitude,
        "wave_type": w.wave_type.to_string(),
        "iterations": w.iterations,
        "converged": w.converged,
        "final_residual": w.final_residual(),
        "final_m_h": w.mh_history.last(),
        "outer_monotone_after_5": monotone_after(&w.outer_residual_history, 5),
    })
}

/// True when the sequence does not increase after its first `skip` entries.
pub fn monotone_after(xs: &[f64], skip: usize) -> bool {
    xs.iter().skip(skip).collect::<Vec<_>>().windows(2).all(|p| p[1] <= p[0])
}

fn solitary(r: &Resolved, s: &mut Session) -> Result<(), CliError> {
    let grid = r.grid()?;
    let c_s = r.wave_speed()?;
    let w = match solve_wave(r, &grid, c_s) {
        Ok(w) => w,
        Err(e) => {
            if let Some(p) = e.partial() {
                write_wave(s, "profile_partial", p, &grid, &r.coeffs)?;
                write_histories(s, "", p)?;
                s.note("wave", wave_summary(p));
            }
            return Err(map_wave(e));
        }
    };
    write_wave(s, "profile", &w, &grid, &r.coeffs)?;
    write_histories(s, "", &w)?;
    let fourier = Fourier::new(grid);
    let d1 = |f: &[f64]| fourier.diff_values(f, 1).map_err(|e| CliError::Config(e.to_string()));
    let (zx, vx, ux) = (d1(&w.zeta)?, d1(&w.v_beta)?, d1(&w.u)?);
    let rows = (0..grid.n()).map(|j| {
        vec![
            Cell::F(grid.node(j)),
            Cell::F(w.zeta[j]),
            Cell::F(zx[j]),
            Cell::F(w.v_beta[j]),
            Cell::F(vx[j]),
            Cell::F(w.u[j]),
            Cell::F(ux[j]),
        ]
    });
    s.out.write_csv("phase.csv", &["x", "zeta", "zeta_x", "v_beta", "v_beta_x", "u", "u_x"], rows)?;
    if matches!(w.wave_type, WaveType::Csw | WaveType::CswNonmonotone) && !decays(&w) {
        wrap_warning(s, "solitary wave");
    }
    let mut sum = wave_summary(&w);
    if let Ok(seg) = toland_segment(&r.coeffs, c_s) {
        sum["toland_segment"] = to_value(&seg);
        let mid = grid.n() / 2;
        sum["crest"] = json!({"v_beta": w.v_beta[mid], "zeta": w.zeta[mid]});
    }
    s.note("wave", sum);
    Ok(())
}

/// One crest to follow during a run.
#[derive(Debug, Clone)]
struct TrackTarget {
    name: String,
    polarity: Polarity,
    reference: Option<PeakReference>,
    window: Option<f64>,
}

fn polarity_of(amplitude: f64) -> Polarity {
    if amplitude < 0.0 { Polarity::Depression } else { Polarity::Elevation }
}

struct Initial {
    state: WaveState,
    tracks: Vec<TrackTarget>,
    exact: Option<ExactSech2>,
}

fn translated(fourier: &Fourier, w: &SolitaryWave, center: f64, dir: f64) -> Result<WaveState, CliError> {
    let st = WaveState::from_values(fourier, 0.0, &w.zeta, &w.v_beta).map_err(|e| CliError::Config(e.to_string()))?;
    let v: Vec<Complex64> = fourier.translate(&st.v_hat, center).into_iter().map(|c| c * dir).collect();
    Ok(WaveState { t: 0.0, zeta_hat: fourier.translate(&st.zeta_hat, center), v_hat: v })
}

fn single_wave(r: &Resolved, s: &mut Session, fourier: &Fourier, target: &InitialCondition) -> Result<Initial, CliError> {
    let grid = *fourier.grid();
    match target {
        InitialCondition::Exact { center, b_ratio } => {
            let e = exact_wave(&r.coeffs, *b_ratio)?.at(*center);
            let smp = sample_exact(&e, fourier, 0.0, r.coeffs.beta).map_err(map_wave)?;
            if smp.wrap_warning {
                wrap_warning(s, "exact wave");
            }
            s.note("exact", exact_summary(&e));
            Ok(Initial {
                state: smp.state,
                tracks: vec![TrackTarget {
                    name: "wave".into(),
                    polarity: polarity_of(e.amplitude()),
                    reference: Some(PeakReference { x0: *center, c_s: e.c_s }),
                    window: None,
                }],
                exact: Some(e),
            })
        }
        InitialCondition::Solitary { center } => {
            let c_s = r.wave_speed()?;
            s.progress(&format!("solving for the traveling wave at c_s = {c_s}"));
            let w = match solve_wave(r, &grid, c_s) {
                Ok(w) => w,
                Err(e) => {
                    if let Some(p) = e.partial() {
                        write_histories(s, "wave_", p)?;
                    }
                    return Err(map_wave(e));
                }
            };
            write_wave(s, "wave_profile", &w, &grid, &r.coeffs)?;
            write_histories(s, "wave_", &w)?;
            if matches!(w.wave_type, WaveType::Csw | WaveType::CswNonmonotone) && !decays(&w) {
                wrap_warning(s, "solitary wave");
            }
            s.note("wave", wave_summary(&w));
            Ok(Initial {
                state: translated(fourier, &w, *center, 1.0)?,
                tracks: vec![TrackTarget {
                    name: "wave".into(),
                    polarity: polarity_of(w.amplitude),
                    reference: Some(PeakReference { x0: *center, c_s }),
                    window: None,
                }],
                exact: None,
            })
        }
        InitialCondition::Profile { path } => {
            let p = load_on_grid(path, &grid)?;
            let state = WaveState::from_values(fourier, 0.0, &p.zeta, &p.v_beta)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let amp = p.zeta.iter().copied().fold(0.0, |a: f64, x| if x.abs() > a.abs() { x } else { a });
            let polarity = polarity_of(amp);
            let reference = p.meta.c_s.map(|c_s| PeakReference {
                x0: locate_crest(&p.zeta, &grid, polarity, None).location,
                c_s,
            });
            Ok(Initial {
                state,
                tracks: vec![TrackTarget { name: "wave".into(), polarity, reference, window: None }],
                exact: None,
            })
        }
        InitialCondition::Gaussian { amplitude, tau } => {
            let zeta: Vec<f64> = grid.nodes().iter().map(|x| amplitude * (-tau * x * x).exp()).collect();
            let zh = fourier.to_spectral(&zeta).map_err(|e| CliError::Config(e.to_string()))?;
            let beta = r.coeffs.beta;
            let v_hat = zh
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let k = grid.wavenumber(i);
                    c / (1.0 + beta * k * k)
                })
                .collect();
            Ok(Initial {
                state: WaveState { t: 0.0, zeta_hat: zh, v_hat },
                tracks: vec![TrackTarget {
                    name: "leading".into(),
                    polarity: polarity_of(*amplitude),
                    reference: None,
                    window: None,
                }],
                exact: None,
            })
        }
    }
}

fn superposition(r: &Resolved, s: &mut Session, fourier: &Fourier) -> Result<Initial, CliError> {
    let grid = *fourier.grid();
    let n = grid.n();
    let mut state =
        WaveState { t: 0.0, zeta_hat: vec![Complex64::default(); n], v_hat: vec![Complex64::default(); n] };
    let mut tracks = Vec::new();
    let mut cache: Vec<(u64, SolitaryWave)> = Vec::new();
    let mut waves = Vec::new();
    for (i, sw) in r.config.superposition.iter().enumerate() {
        let w = if let Some(path) = &sw.profile {
            let p = load_on_grid(path, &grid)?;
            let c_s = p.meta.c_s.or(sw.speed).ok_or_else(|| {
                CliError::Config(format!("superposition.{i}: profile sidecar has no speed; give speed"))
            })?;
            let amplitude = p.zeta.iter().copied().fold(0.0, |a: f64, x| if x.abs() > a.abs() { x } else { a });
            SolitaryWave {
                half_length: grid.half_length(),
                c_s,
                beta: p.meta.beta,
                zeta: p.zeta,
                v_beta: p.v_beta,
                u: p.u,
                residual_history: vec![],
                outer_residual_history: vec![],
                mh_history: vec![],
                iterations: 0,
                converged: true,
                amplitude,
                wave_type: WaveType::Csw,
            }
        } else {
            let c_s = sw.speed.unwrap_or_default();
            match cache.iter().find(|(bits, _)| *bits == c_s.to_bits()) {
                Some((_, w)) => w.clone(),
                None => {
                    s.progress(&format!("solving for the traveling wave at c_s = {c_s}"));
                    let w = solve_wave(r, &grid, c_s).map_err(map_wave)?;
                    write_wave(s, &format!("wave{i}_profile"), &w, &grid, &r.coeffs)?;
                    if matches!(w.wave_type, WaveType::Csw | WaveType::CswNonmonotone) && !decays(&w) {
                        wrap_warning(s, &format!("superposition.{i}"));
                    }
                    cache.push((c_s.to_bits(), w.clone()));
                    w
                }
            }
        };
        let dir = sw.direction.sign();
        let part = translated(fourier, &w, sw.center, dir)?;
        for j in 0..n {
            state.zeta_hat[j] += part.zeta_hat[j];
            state.v_hat[j] += part.v_hat[j];
        }
        let polarity = r.config.tracking.and_then(|t| t.polarity).unwrap_or(polarity_of(w.amplitude));
        tracks.push(TrackTarget {
            name: format!("wave{i}"),
            polarity,
            reference: Some(PeakReference { x0: sw.center, c_s: dir * w.c_s }),
            window: Some(r.config.tracking.and_then(|t| t.window).unwrap_or(COLLIDE_WINDOW)),
        });
        waves.push(json!({
            "index": i,
            "c_s": w.c_s,
            "direction": if sw.direction == Direction::Right { "right" } else { "left" },
            "center": sw.center,
            "amplitude": w.amplitude,
            "wave_type": w.wave_type.to_string(),
        }));
    }
    s.note("superposition", Value::Array(waves));
    Ok(Initial { state, tracks, exact: None })
}

fn evolution(r: &Resolved, s: &mut Session) -> Result<(), CliError> {
    let grid = r.grid()?;
    let st = r.stepper()?;
    let ev = Evolver::new(r.coeffs, grid, st.stepper()).map_err(map_evolve)?;
    let fourier = ev.fourier().clone();
    let mut init = match r.kind {
        ExperimentKind::Collide => superposition(r, s, &fourier)?,
        ExperimentKind::Perturb => {
            let target = r.config.initial.clone().unwrap_or(InitialCondition::Solitary { center: 0.0 });
            let factor = r.config.perturbation.map_or(1.0, |p| p.factor);
            let mut init = single_wave(r, s, &fourier, &target)?;
            init.state = init.state.scaled(factor);
            init.exact = None;
            s.note("perturbation_factor", json!(factor));
            s.conventions.push(
                "amplitude and speed changes are relative to the values tracked at t = 0 on the perturbed state".into(),
            );
            init
        }
        _ => {
            let target = r.config.initial.clone().ok_or_else(|| CliError::Config("`initial` block required".into()))?;
            single_wave(r, s, &fourier, &target)?
        }
    };
    if let Some(t) = r.config.tracking {
        for target in &mut init.tracks {
            if let Some(p) = t.polarity {
                target.polarity = p;
            }
            if let (Some(w), None) = (t.window, target.window) {
                target.window = Some(w);
            }
        }
    }
    s.conventions.push("state variables are zeta and v_beta; u = (1 - beta d_xx) v_beta".into());
    s.conventions.push("L2 norms are discrete: sqrt(h sum f_j^2)".into());

    let steps = if st.final_time <= 0.0 { 0 } else { (st.final_time / st.dt - 1e-9).ceil().max(1.0) as usize };
    let dt_eff = if steps == 0 { st.dt } else { st.final_time / steps as f64 };
    let cfl = grid.n() as f64 * dt_eff;
    if cfl > st.cfl_warn {
        s.warnings.push(format!("CFL product N dt = {cfl} exceeds {}", st.cfl_warn));
    }

    let mut invariants = InvariantObserver::new(fourier.clone(), r.coeffs);
    let mut trackers: Vec<PeakTracker> = init
        .tracks
        .iter()
        .map(|t| {
            let tr = PeakTracker::new(fourier.clone(), t.polarity, t.reference).refined();
            match t.window {
                Some(w) if t.reference.is_some() => tr.windowed(w),
                _ => tr,
            }
        })
        .collect();
    let mut errors: Vec<(f64, L2Errors)> = Vec::new();
    let mut error_failure: Option<WaveError> = None;
    let exact = init.exact;
    let mut error_obs = |_: usize, state: &WaveState| {
        if let Some(e) = &exact {
            match error_vs_exact(state, e, &fourier) {
                Ok(err) => errors.push((state.t, err)),
                Err(err) => error_failure = Some(err),
            }
        }
    };
    let interval = r.config.output.snapshot_interval;
    let mut next_snapshot = 0.0;
    let mut snapshots: Vec<(f64, WaveState)> = Vec::new();
    let mut snap_obs = |_: usize, state: &WaveState| {
        if let Some(iv) = interval {
            if state.t >= next_snapshot - 1e-9 * iv {
                snapshots.push((state.t, state.clone()));
                while next_snapshot <= state.t + 1e-9 * iv {
                    next_snapshot += iv;
                }
            }
        }
    };
    let quiet = s.quiet;
    let report_every = steps.div_ceil(10).max(1);
    let mut next_report = report_every;
    let mut progress_obs = |step: usize, state: &WaveState| {
        if !quiet && step >= next_report {
            eprintln!("  step {step}/{steps}  t = {:.4}", state.t);
            while next_report <= step {
                next_report += report_every;
            }
        }
    };
    s.progress(&format!("evolving to T = {} with dt = {dt_eff} ({steps} steps, N = {})", st.final_time, grid.n()));
    let result = {
        let mut obs: Vec<&mut dyn Observer> = vec![&mut invariants, &mut error_obs, &mut snap_obs, &mut progress_obs];
        for t in trackers.iter_mut() {
            obs.push(t);
        }
        ev.run(&init.state, st.final_time, r.config.output.stride, &mut obs)
    };

    write_invariants(s, &invariants)?;
    for (target, tr) in init.tracks.iter().zip(&trackers) {
        write_tracks(s, &format!("peaks_{}.csv", target.name), &tr.tracks)?;
    }
    if !errors.is_empty() {
        let rows = errors.iter().map(|(t, e)| {
            vec![Cell::F(*t), Cell::F(e.zeta), Cell::F(e.v), Cell::F(e.zeta_abs), Cell::F(e.v_abs)]
        });
        s.out.write_csv("errors.csv", &["t", "error_zeta", "error_v", "error_zeta_abs", "error_v_abs"], rows)?;
    }
    for (i, (t, state)) in snapshots.iter().enumerate() {
        write_state(s, &format!("snapshots/snapshot_{i:05}"), state, &fourier, &r.coeffs, *t)?;
    }

    let (last, outcome) = match result {
        Ok((last, summary)) => {
            s.steps = Some(summary.steps);
            s.note("run", to_value(&summary));
            (last, Ok(()))
        }
        Err((e, last_good)) => {
            s.note("failed_at", json!(last_good.t));
            (last_good, Err(map_evolve(e)))
        }
    };
    write_state(s, "final_state", &last, &fourier, &r.coeffs, last.t)?;

    let (di, de) = invariants.max_relative_drift();
    let (ai, ae) = invariants.max_absolute_drift();
    s.note(
        "invariant_drift",
        json!({"i_h": di, "e_h": de, "i_h_abs": ai, "e_h_abs": ae, "conserved": r.coeffs.is_hamiltonian()}),
    );
    if let (Some(first), Some(lastrec)) = (invariants.records.first(), invariants.records.last()) {
        let max_change = invariants
            .records
            .iter()
            .map(|rec| ((rec.l2_zeta - first.l2_zeta) / first.l2_zeta).abs())
            .fold(0.0, f64::max);
        s.note(
            "l2_zeta",
            json!({"initial": first.l2_zeta, "final": lastrec.l2_zeta, "max_relative_change": max_change}),
        );
    }
    if let Some((_, e)) = errors.last() {
        s.note("final_error", to_value(e));
    }
    let span = r.config.tracking.and_then(|t| t.speed_span).unwrap_or(0.1 * st.final_time);
    let peaks: Vec<Value> =
        init.tracks.iter().zip(&trackers).map(|(target, tr)| peak_summary(target, tr, span)).collect();
    s.note("peaks", Value::Array(peaks));
    if let Some(e) = error_failure {
        s.warnings.push(format!("error observer failed: {e}"));
    }
    outcome
}

fn write_state(
    s: &mut Session,
    stem: &str,
    state: &WaveState,
    fourier: &Fourier,
    k: &ModelCoeffs,
    t: f64,
) -> Result<(), CliError> {
    let io = |e: crate::spectral::SpectralError| CliError::Io(e.to_string());
    let (zeta, v_beta) = state.values(fourier).map_err(io)?;
    let u = state.u_values(fourier, k.beta).map_err(io)?;
    let meta = ProfileMeta::new("state", fourier.grid(), k, None, t);
    s.out.write_profile(stem, &Profile { meta, zeta, v_beta, u })
}

fn write_invariants(s: &mut Session, inv: &InvariantObserver) -> Result<(), CliError> {
    let rows = inv.records.iter().map(|r| {
        vec![Cell::F(r.t), Cell::F(r.i_h), Cell::F(r.e_h), Cell::F(r.l2_zeta), Cell::F(r.l2_v), Cell::F(r.l2_u)]
    });
    s.out.write_csv("invariants.csv", &["t", "I_h", "E_h", "l2_zeta", "l2_v_beta", "l2_u"], rows)
}

fn write_tracks(s: &mut Session, name: &str, tracks: &[PeakTrack]) -> Result<(), CliError> {
    let rows = tracks.iter().map(|p| {
        vec![
            Cell::F(p.t),
            Cell::F(p.amplitude),
            Cell::F(p.location),
            Cell::F(p.unwrapped_location),
            Cell::Opt(p.speed),
            Cell::Opt(p.phase_error),
            Cell::B(p.multi_peak),
        ]
    });
    s.out.write_csv(
        name,
        &["t", "amplitude", "location", "unwrapped_location", "speed", "phase_error", "multi_peak"],
        rows,
    )
}

fn peak_summary(target: &TrackTarget, tr: &PeakTracker, span: f64) -> Value {
    let first = tr.tracks.first();
    let last = tr.last();
    let a0 = first.map(|p| p.amplitude);
    let a1 = last.map(|p| p.amplitude);
    let speed = tr.mean_speed(span);
    let reference_speed = target.reference.map(|r| r.c_s);
    json!({
        "name": target.name,
        "polarity": to_value(&target.polarity),
        "initial_amplitude": a0,
        "final_amplitude": a1,
        "relative_amplitude_change": a0.zip(a1).map(|(a0, a1)| (a1 - a0) / a0),
        "final_location": last.map(|p| p.location),
        "mean_speed": speed,
        "reference_speed": reference_speed,
        "relative_speed_change": speed.zip(reference_speed).map(|(c, c0)| (c - c0) / c0),
        "final_phase_error": last.and_then(|p| p.phase_error),
        "final_multi_peak": last.map(|p| p.multi_peak),
    })
}

fn convergence(r: &Resolved, s: &mut Session) -> Result<(), CliError> {
    let block = r.config.convergence.clone().ok_or_else(|| CliError::Config("`convergence` block required".into()))?;
    let g = r.config.grid.ok_or_else(|| CliError::Config("`grid` block required".into()))?;
    let st = r.stepper()?;
    let ns = if block.n_modes.is_empty() { vec![g.n_modes] } else { block.n_modes.clone() };
    for &n in &ns {
        Grid::new(g.half_length, n).map_err(|e| CliError::Config(format!("convergence.n_modes: {e}")))?;
    }
    let e = exact_wave(&r.coeffs, block.b_ratio)?;
    if e.width() * g.half_length < 20.0 {
        wrap_warning(s, "exact reference");
    }
    s.note("exact", exact_summary(&e));
    let cfl = ns.iter().map(|&n| n as f64).fold(0.0, f64::max) * block.dts.iter().copied().fold(0.0, f64::max);
    if cfl > st.cfl_warn {
        s.warnings.push(format!("CFL product N dt = {cfl} exceeds {}", st.cfl_warn));
    }
    let problem = ConvergenceProblem {
        coeffs: r.coeffs,
        reference: &e,
        half_length: g.half_length,
        final_time: st.final_time,
        stepper: st.stepper(),
    };
    s.progress(&format!("running {} cells with {} jobs", ns.len() * block.dts.len(), s.jobs));
    let rows = crate::diagnostics::convergence_table(&problem, &block.dts, &ns, s.jobs);
    let csv_rows = rows.iter().map(|row| {
        vec![
            Cell::U(row.n_modes),
            Cell::F(row.dt),
            Cell::Opt(row.error_zeta),
            Cell::Opt(row.error_v),
            Cell::Opt(row.error_zeta_abs),
            Cell::Opt(row.error_v_abs),
            Cell::Opt(row.rate_zeta),
            Cell::Opt(row.rate_v),
            Cell::U(row.steps),
        ]
    });
    s.out.write_csv(
        "convergence.csv",
        &["n_modes", "dt", "error_zeta", "error_v", "error_zeta_abs", "error_v_abs", "rate_zeta", "rate_v", "steps"],
        csv_rows,
    )?;
    s.conventions.push("error_* columns are normalized by the discrete L2 norm of the exact solution; error_*_abs are absolute".into());
    s.steps = Some(rows.iter().map(|r| r.steps).sum());
    s.note("rows", to_value(&rows));
    let failures: Vec<String> = rows
        .iter()
        .filter_map(|row| row.failure.as_ref().map(|f| format!("N = {}, dt = {}: {f}", row.n_modes, row.dt)))
        .collect();
    if failures.is_empty() {
        Ok(())
    } else if failures.iter().any(|f| f.contains("non-finite")) {
        Err(CliError::BlowUp(failures.join("; ")))
    } else {
        Err(CliError::NonConvergence(failures.join("; ")))
    }
}
