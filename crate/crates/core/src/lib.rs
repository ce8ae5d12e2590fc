//! Solitary and generalized solitary internal waves of the
//! Boussinesq/Boussinesq systems for a two-layer fluid under a rigid lid.
//!
//! ```text
//! (1 - b∂²) ζ_t + κ₁ v_x + λ (ζv)_x + a v_xxx = 0
//! (1 - d∂²) v_t + κ₂ ζ_x + λ v v_x + κ₂ c ζ_xxx = 0
//!
//! κ₁ = 1/(δ+γ), κ₂ = 1-γ, λ = (δ²-γ)/(δ+γ)², v = (1 - β∂²)⁻¹ u
//! ```
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: coefficients from physical parameters, well-posedness and
//!   existence classification, dispersion functions, closed-form predicates.
//! - [`spectral`]: periodic Fourier grid, transforms, derivatives, dealiased products.
//! - [`waves`]: exact sech² waves and the Petviashvili profile solver.
//! - [`evolve`]: fourth-order symplectic time stepping of the semidiscrete system.
//! - [`diagnostics`]: invariants, peak tracking, errors and convergence tables.
//! - [`cli`]: JSON-configured experiments writing CSV/JSON artifacts.
//!
//! The runnable programs under `examples/` walk through each capability;
//! `cargo run --release --example <name>` lists them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnostics;
pub mod evolve;
pub mod model;
pub mod spectral;
pub mod waves;

pub use evolve::{Evolver, StepperConfig, WaveState};
pub use model::{coeffs_from_quadruple, derive_coeffs, sound_speed, ModelCoeffs, PhysicalParams};
pub use spectral::{Fourier, Grid};
pub use waves::{SolitaryWave, WaveType};
