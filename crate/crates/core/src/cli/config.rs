//! Experiment configuration: JSON schema, dotted overrides and resolution
//! into validated solver inputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::CliError;
use crate::evolve::StepperConfig;
use crate::model::{coeffs_from_quadruple, derive_coeffs, ModelCoeffs, PhysicalParams, Polarity};
use crate::spectral::Grid;
use crate::waves::PetviashviliOptions;

/// Consistency residual above which a warning is recorded.
pub const CONSISTENCY_WARN: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    DeriveParams,
    Classify,
    Dispersion,
    Exact,
    Solitary,
    Evolve,
    Perturb,
    Collide,
    Resolve,
    Convergence,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::DeriveParams => "derive-params",
            ExperimentKind::Classify => "classify",
            ExperimentKind::Dispersion => "dispersion",
            ExperimentKind::Exact => "exact",
            ExperimentKind::Solitary => "solitary",
            ExperimentKind::Evolve => "evolve",
            ExperimentKind::Perturb => "perturb",
            ExperimentKind::Collide => "collide",
            ExperimentKind::Resolve => "resolve",
            ExperimentKind::Convergence => "convergence",
        }
    }
}

/// Complete experiment description. Every block is optional at parse time;
/// [`resolve`] checks the blocks each experiment needs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physical: Option<PhysicalParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadruple: Option<Quadruple>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stepper: Option<StepperBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wave: Option<WaveBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialCondition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationBlock>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub superposition: Vec<SuperposedWave>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tracking: Option<TrackingBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispersion: Option<DispersionBlock>,
    #[serde(default)]
    pub output: OutputBlock,
}

/// Dispersion coefficients given directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quadruple {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub gamma: f64,
    pub delta: f64,
    /// Regularization length; defaults to `max(c + d, 0)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub half_length: f64,
    pub n_modes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperBlock {
    pub dt: f64,
    pub final_time: f64,
    #[serde(default = "default_fp_tolerance")]
    pub fp_tolerance: f64,
    #[serde(default = "default_fp_max_iters")]
    pub fp_max_iters: usize,
    /// Hard bound on `N dt`; runs above it are rejected.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cfl_alpha: Option<f64>,
    /// `N dt` above which a warning is recorded.
    #[serde(default = "default_cfl_warn")]
    pub cfl_warn: f64,
}

fn default_fp_tolerance() -> f64 {
    1e-12
}

fn default_fp_max_iters() -> usize {
    200
}

fn default_cfl_warn() -> f64 {
    100.0
}

impl StepperBlock {
    pub fn stepper(&self) -> StepperConfig {
        StepperConfig {
            dt: self.dt,
            fp_tolerance: self.fp_tolerance,
            fp_max_iters: self.fp_max_iters,
            cfl_alpha: self.cfl_alpha,
        }
    }
}

/// Traveling wave computed by the profile solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveBlock {
    /// Absolute speed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed: Option<f64>,
    /// Speed relative to the sound speed `c_γδ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_offset: Option<f64>,
    #[serde(default)]
    pub guess: GuessKind,
    #[serde(default)]
    pub petviashvili: PetviashviliOptions,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GuessKind {
    /// Sech² scaled to the linear decay rate and the long-wave amplitude.
    #[default]
    Auto,
    /// `A sech²(w x)` for both fields.
    Sech2 { amplitude: f64, width: f64 },
    /// The closed-form sech² wave of the model.
    Exact,
    /// A profile CSV written by an earlier run.
    Profile { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    /// Closed-form sech² wave centred at `center`.
    Exact {
        #[serde(default)]
        center: f64,
        /// Ratio `v_β/ζ` on the degenerate branch.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b_ratio: Option<f64>,
    },
    /// Profile solver output for the `wave` block, centred at `center`.
    Solitary {
        #[serde(default)]
        center: f64,
    },
    /// Profile CSV written by an earlier run.
    Profile { path: PathBuf },
    /// `ζ = A e^{-τ x²}`, `u = ζ`.
    Gaussian { amplitude: f64, tau: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationBlock {
    /// The initial state is the traveling wave multiplied by `factor`.
    pub factor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Right,
    Left,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Right => 1.0,
            Direction::Left => -1.0,
        }
    }
}

/// One wave of a superposition. Left-moving waves use `(ζ, -v_β)` of the
/// right-moving profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperposedWave {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_offset: Option<f64>,
    pub center: f64,
    pub direction: Direction,
    /// Profile CSV instead of a fresh solve.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackingBlock {
    /// Crest sign; defaults to the sign of the initial amplitude.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarity: Option<Polarity>,
    /// Half-width of the search window around the predicted crest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
    /// Time span over which the final speed is averaged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_span: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceBlock {
    pub dts: Vec<f64>,
    /// Defaults to the `grid` block's `n_modes`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub n_modes: Vec<usize>,
    /// Ratio `v_β/ζ` on the degenerate branch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionBlock {
    /// Sample `x = k²` on `[0, x_max]`.
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_x_max() -> f64 {
    10.0
}

fn default_samples() -> usize {
    201
}

impl Default for DispersionBlock {
    fn default() -> Self {
        Self { x_max: default_x_max(), samples: default_samples() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    /// Used when `--out` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    /// Observation stride in time steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    /// Time between profile snapshots; none when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_interval: Option<f64>,
}

/// Validated configuration with derived quantities.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub kind: ExperimentKind,
    /// Input with speeds resolved to absolute values; re-running it
    /// reproduces the run.
    pub config: ExperimentConfig,
    pub coeffs: ModelCoeffs,
    pub warnings: Vec<String>,
}

impl Resolved {
    pub fn grid(&self) -> Result<Grid, CliError> {
        let g = self.config.grid.ok_or_else(|| missing("grid", self.kind))?;
        Grid::new(g.half_length, g.n_modes).map_err(|e| CliError::Config(format!("grid: {e}")))
    }

    pub fn stepper(&self) -> Result<StepperBlock, CliError> {
        self.config.stepper.ok_or_else(|| missing("stepper", self.kind))
    }

    pub fn wave(&self) -> Result<&WaveBlock, CliError> {
        self.config.wave.as_ref().ok_or_else(|| missing("wave", self.kind))
    }

    /// Absolute speed of the `wave` block.
    pub fn wave_speed(&self) -> Result<f64, CliError> {
        self.wave()?.speed.ok_or_else(|| CliError::Config("wave: speed or speed_offset required".into()))
    }
}

fn missing(block: &str, kind: ExperimentKind) -> CliError {
    CliError::Config(format!("`{block}` block required by {}", kind.name()))
}

/// Reads the JSON file (or `{}`), applies `key=value` overrides and parses.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<ExperimentConfig, CliError> {
    let mut value: Value = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => Value::Object(Default::default()),
    };
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    serde_json::from_value(value).map_err(|e| CliError::Config(format!("invalid configuration: {e}")))
}

/// Sets the dotted `key` to `value`, parsed as JSON when possible and as a
/// string otherwise. Numeric segments index arrays.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not key=value")))?;
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("override key `{key}` is malformed")));
    }
    let mut node = root;
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        node = match node {
            Value::Array(items) => {
                let idx: usize =
                    part.parse().map_err(|_| CliError::Config(format!("`{part}` in `{key}` is not an array index")))?;
                let len = items.len();
                items
                    .get_mut(idx)
                    .ok_or_else(|| CliError::Config(format!("index {idx} in `{key}` out of range ({len} entries)")))?
            }
            Value::Object(map) => map.entry(part.to_string()).or_insert_with(|| {
                if last { Value::Null } else { Value::Object(Default::default()) }
            }),
            Value::Null => {
                *node = Value::Object(Default::default());
                let Value::Object(map) = node else { unreachable!() };
                map.entry(part.to_string()).or_insert(Value::Null)
            }
            _ => return Err(CliError::Config(format!("`{key}` descends into a scalar"))),
        };
    }
    *node = parsed;
    Ok(())
}

fn resolve_speed(speed: &mut Option<f64>, offset: &mut Option<f64>, c_sound: f64, what: &str) -> Result<(), CliError> {
    match (*speed, offset.take()) {
        (Some(_), Some(_)) => Err(CliError::Config(format!("{what}: give speed or speed_offset, not both"))),
        (None, Some(o)) => {
            *speed = Some(c_sound + o);
            Ok(())
        }
        (Some(s), None) if !s.is_finite() => Err(CliError::Config(format!("{what}: speed must be finite"))),
        _ => Ok(()),
    }
}

/// Checks the blocks `kind` needs and derives the coefficients.
pub fn resolve(mut config: ExperimentConfig, kind: ExperimentKind) -> Result<Resolved, CliError> {
    if let Some(k) = config.experiment {
        if k != kind {
            return Err(CliError::Config(format!(
                "configuration is for `{}` but `{}` was requested",
                k.name(),
                kind.name()
            )));
        }
    }
    config.experiment = Some(kind);
    let mut warnings = Vec::new();
    let coeffs = match (&config.physical, &config.quadruple) {
        (Some(p), None) => derive_coeffs(p).map_err(|e| CliError::Config(format!("physical: {e}")))?,
        (None, Some(q)) => {
            let k = coeffs_from_quadruple(q.a, q.b, q.c, q.d, q.gamma, q.delta, true)
                .map_err(|e| CliError::Config(format!("quadruple: {e}")))?;
            match q.beta {
                Some(b) if !(b >= 0.0) => return Err(CliError::Config(format!("quadruple: beta = {b} < 0"))),
                Some(b) => k.with_beta(b),
                None => k,
            }
        }
        _ => return Err(CliError::Config("exactly one of `physical` or `quadruple` is required".into())),
    };
    let residual = coeffs.consistency_residual();
    if residual.abs() > CONSISTENCY_WARN {
        warnings.push(format!("consistency residual (delta+gamma)a + b + c + d - S = {residual:.3e}"));
    }
    let c_sound = coeffs.c_sound;
    if let Some(w) = config.wave.as_mut() {
        resolve_speed(&mut w.speed, &mut w.speed_offset, c_sound, "wave")?;
        w.petviashvili.validate().map_err(|e| CliError::Config(format!("wave.petviashvili: {e}")))?;
        if let GuessKind::Sech2 { amplitude, width } = w.guess {
            if !(amplitude.is_finite() && amplitude != 0.0 && width > 0.0) {
                return Err(CliError::Config("wave.guess: amplitude must be nonzero and width positive".into()));
            }
        }
    }
    for (i, s) in config.superposition.iter_mut().enumerate() {
        resolve_speed(&mut s.speed, &mut s.speed_offset, c_sound, &format!("superposition.{i}"))?;
    }
    let resolved = Resolved { kind, config, coeffs, warnings };
    validate_blocks(&resolved)?;
    Ok(resolved)
}

fn validate_blocks(r: &Resolved) -> Result<(), CliError> {
    use ExperimentKind::*;
    let c = &r.config;
    let needs_grid = !matches!(r.kind, DeriveParams | Classify | Dispersion | Convergence);
    if needs_grid {
        r.grid()?;
    }
    if let Some(s) = c.stepper {
        s.stepper().validate().map_err(|e| CliError::Config(format!("stepper: {e}")))?;
        if !(s.final_time >= 0.0 && s.final_time.is_finite()) {
            return Err(CliError::Config("stepper: final_time must be finite and non-negative".into()));
        }
    }
    if let Some(iv) = c.output.snapshot_interval {
        if !(iv > 0.0) {
            return Err(CliError::Config("output: snapshot_interval must be positive".into()));
        }
    }
    if c.output.stride == Some(0) {
        return Err(CliError::Config("output: stride must be at least 1".into()));
    }
    match r.kind {
        Solitary => {
            r.wave_speed()?;
        }
        Evolve | Perturb | Collide | Resolve => {
            r.stepper()?;
        }
        Convergence => {
            r.stepper()?;
            let block = c.convergence.as_ref().ok_or_else(|| missing("convergence", r.kind))?;
            if block.dts.is_empty() || block.dts.iter().any(|d| !(*d > 0.0)) {
                return Err(CliError::Config("convergence: dts must be positive and nonempty".into()));
            }
            if block.n_modes.is_empty() && c.grid.is_none() {
                return Err(CliError::Config("convergence: n_modes or a grid block required".into()));
            }
            if c.grid.is_none() {
                return Err(missing("grid", r.kind));
            }
        }
        _ => {}
    }
    match r.kind {
        Evolve => {
            let init = c.initial.as_ref().ok_or_else(|| missing("initial", r.kind))?;
            if matches!(init, InitialCondition::Solitary { .. }) {
                r.wave_speed()?;
            }
        }
        Perturb => {
            let p = c.perturbation.ok_or_else(|| missing("perturbation", r.kind))?;
            if !p.factor.is_finite() {
                return Err(CliError::Config("perturbation: factor must be finite".into()));
            }
            match c.initial {
                None | Some(InitialCondition::Solitary { .. }) => {
                    r.wave_speed()?;
                }
                _ => {}
            }
        }
        Collide => {
            if c.superposition.is_empty() {
                return Err(CliError::Config("collide: `superposition` needs at least one wave".into()));
            }
            for (i, s) in c.superposition.iter().enumerate() {
                if s.speed.is_none() && s.profile.is_none() {
                    return Err(CliError::Config(format!("superposition.{i}: speed, speed_offset or profile required")));
                }
            }
        }
        Resolve => match c.initial {
            Some(InitialCondition::Gaussian { amplitude, tau }) => {
                if !(tau > 0.0 && amplitude.is_finite()) {
                    return Err(CliError::Config("initial: gaussian tau must be positive".into()));
                }
            }
            _ => return Err(CliError::Config("resolve: `initial` must be a gaussian".into())),
        },
        _ => {}
    }
    Ok(())
}
