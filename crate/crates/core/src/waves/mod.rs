//! Traveling-wave profiles: closed-form sech² waves, the Petviashvili
//! fixed-point solver with extrapolation and manifold projection, and
//! profile classification.

mod classify;
mod exact;
mod mpe;
mod petviashvili;

pub use classify::{classify_profile, ProfileMetrics};
pub use exact::{exact_sech2, sample_exact, substitution_residual, ExactBranch, ExactSample, ExactSech2};
pub use mpe::mpe_extrapolate;
pub use petviashvili::{
    build_symbol_matrix, default_guess, petviashvili_solve, suggested_guess, PetviashviliOptions, PetviashviliSolver,
    SymbolMatrix,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ModelError;
use crate::spectral::SpectralError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WaveType {
    #[serde(rename = "CSW")]
    Csw,
    #[serde(rename = "CSW-nonmonotone")]
    CswNonmonotone,
    #[serde(rename = "GSW")]
    Gsw,
    #[serde(rename = "PeriodicTW")]
    PeriodicTw,
}

impl std::fmt::Display for WaveType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WaveType::Csw => "CSW",
            WaveType::CswNonmonotone => "CSW-nonmonotone",
            WaveType::Gsw => "GSW",
            WaveType::PeriodicTw => "PeriodicTW",
        })
    }
}

/// Converged (or best available) traveling-wave profile on the grid nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolitaryWave {
    pub half_length: f64,
    pub c_s: f64,
    pub beta: f64,
    pub zeta: Vec<f64>,
    pub v_beta: Vec<f64>,
    /// `(1 - β∂²) v_β`.
    pub u: Vec<f64>,
    /// Residual of every Petviashvili iterate.
    pub residual_history: Vec<f64>,
    /// Residual of every outer iterate: each step without extrapolation,
    /// each extrapolated iterate with it.
    pub outer_residual_history: Vec<f64>,
    pub mh_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Signed value of `ζ` where `|ζ|` is largest.
    pub amplitude: f64,
    pub wave_type: WaveType,
}

impl SolitaryWave {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::NAN)
    }

    /// Grid the profile lives on.
    pub fn grid(&self) -> Result<crate::spectral::Grid, SpectralError> {
        crate::spectral::Grid::new(self.half_length, self.zeta.len())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveError {
    #[error("no exact sech^2 solution: {0}")]
    NoExactSolution(String),
    #[error("degenerate branch conditions not met: {0}")]
    DegenerateBranchMismatch(String),
    #[error("symbol matrix singular at modes {0:?}")]
    SingularModes(Vec<i64>),
    #[error("initial guess is zero")]
    ZeroGuess,
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error("maximum iterations reached (best residual {:e})", .0.final_residual())]
    MaxItersExceeded(Box<SolitaryWave>),
    #[error("residual diverged (last {:e})", .0.final_residual())]
    DivergenceDetected(Box<SolitaryWave>),
    #[error("iterates collapsed to the zero solution")]
    Collapsed(Box<SolitaryWave>),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl WaveError {
    /// Partial result carried by solver failures.
    pub fn partial(&self) -> Option<&SolitaryWave> {
        match self {
            WaveError::MaxItersExceeded(w) | WaveError::DivergenceDetected(w) | WaveError::Collapsed(w) => Some(w),
            _ => None,
        }
    }
}
