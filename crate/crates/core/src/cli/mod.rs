//! Command-line experiment runner.
//!
//! Each subcommand reads a JSON [`ExperimentConfig`], applies `--override
//! key=value` edits and writes CSV tables, JSON sidecars, the resolved
//! configuration (`config.json`) and `report.json` to the output directory.
//! Exit codes: 0 success, 1 i/o failure, 2 configuration error, 3 solver
//! non-convergence, 4 numerical blow-up.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};
use thiserror::Error;

pub use config::{apply_override, load_config, resolve, ExperimentConfig, ExperimentKind, Resolved};
pub use output::{read_profile, OutputDir, Profile, ProfileMeta, RunReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver did not converge: {0}")]
    NonConvergence(String),
    #[error("numerical blow-up: {0}")]
    BlowUp(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::BlowUp(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "bbwaves", version, about = "Solitary-wave experiments for Boussinesq/Boussinesq internal-wave systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON experiment configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output.directory`).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Dotted `key=value` edit applied to the configuration; repeatable.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Worker threads for convergence tables (0 uses every core).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Suppress progress and summary output.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Dispersion coefficients from the physical parameters.
    DeriveParams,
    /// Well-posedness and existence classification.
    Classify,
    /// Sampled dispersion functions phi and psi.
    Dispersion,
    /// Closed-form sech² wave sampled on the grid.
    Exact,
    /// Traveling-wave profile from the Petviashvili solver.
    Solitary,
    /// Time evolution of an exact, computed, loaded or Gaussian initial state.
    Evolve,
    /// Evolution of a traveling wave scaled by a perturbation factor.
    Perturb,
    /// Evolution of superposed traveling waves.
    Collide,
    /// Evolution of a Gaussian pulse into a train of solitary waves.
    Resolve,
    /// Temporal convergence table against the exact wave.
    Convergence,
}

impl Command {
    pub fn kind(self) -> ExperimentKind {
        match self {
            Command::DeriveParams => ExperimentKind::DeriveParams,
            Command::Classify => ExperimentKind::Classify,
            Command::Dispersion => ExperimentKind::Dispersion,
            Command::Exact => ExperimentKind::Exact,
            Command::Solitary => ExperimentKind::Solitary,
            Command::Evolve => ExperimentKind::Evolve,
            Command::Perturb => ExperimentKind::Perturb,
            Command::Collide => ExperimentKind::Collide,
            Command::Resolve => ExperimentKind::Resolve,
            Command::Convergence => ExperimentKind::Convergence,
        }
    }
}

/// Run-time options that are not part of the experiment.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub jobs: usize,
    pub quiet: bool,
}

/// Resolves `config` for `kind`, runs it and writes `config.json` and
/// `report.json`. A report is written for failed runs too; the error is
/// returned after it.
pub fn execute(kind: ExperimentKind, config: ExperimentConfig, opts: &RunOptions) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let resolved = resolve(config, kind)?;
    let dir = opts
        .out
        .clone()
        .or_else(|| resolved.config.output.directory.clone())
        .unwrap_or_else(|| PathBuf::from("bbwaves-out").join(kind.name()));
    let mut session = commands::Session {
        out: OutputDir::create(&dir)?,
        quiet: opts.quiet,
        jobs: opts.jobs,
        summary: Map::new(),
        warnings: resolved.warnings.clone(),
        conventions: Vec::new(),
        steps: None,
    };
    session.out.write_json("config.json", &resolved.config)?;
    let outcome = commands::run(&resolved, &mut session);
    let mut files = session.out.files().to_vec();
    files.push("report.json".into());
    let report = RunReport {
        command: kind.name().into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: resolved.config.clone(),
        coeffs: resolved.coeffs,
        c_sound: resolved.coeffs.c_sound,
        classification: commands::classification(&resolved),
        summary: Value::Object(session.summary),
        warnings: session.warnings,
        conventions: session.conventions,
        files,
        steps: session.steps,
        wall_seconds: start.elapsed().as_secs_f64(),
        error: outcome.as_ref().err().map(|e| e.to_string()),
        exit_code: outcome.as_ref().err().map_or(0, CliError::exit_code),
    };
    session.out.write_json("report.json", &report)?;
    outcome.map(|_| report)
}

/// Entry point for the `bbwaves` binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let kind = cli.command.kind();
    let common = cli.common;
    let result = load_config(common.config.as_deref(), &common.overrides).and_then(|cfg| {
        execute(kind, cfg, &RunOptions { out: common.out.clone(), jobs: common.jobs, quiet: common.quiet })
    });
    match result {
        Ok(report) => {
            if !common.quiet {
                for w in &report.warnings {
                    eprintln!("warning: {w}");
                }
                println!("{}", serde_json::to_string_pretty(&report.summary).unwrap_or_default());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
