//! Parameter algebra for the four-coefficient Boussinesq/Boussinesq family.
//!
//! Everything here is a pure function of `(a, b, c, d, γ, δ)` and, where a
//! traveling wave is involved, its speed `c_s`: coefficient derivation from the
//! modelling parameters, linear well-posedness, the normal-form existence
//! table, the `(B, A)` bifurcation plane, dispersion functions and the
//! closed-form existence predicates used to seed and check the profile solver.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

use crate::waves::WaveType;

/// Absolute tolerance under which `D` is treated as zero.
pub const D_ZERO_TOL: f64 = 1e-12;
/// Tolerance for locating a point of the `(B, A)` plane on a bifurcation curve.
pub const CURVE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("parameter out of range: {0}")]
    Domain(String),
    #[error("D = b d c_s^2 - (1-gamma) a c vanishes")]
    DZero,
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("degenerate: {0}")]
    Degenerate(String),
}

// ─── parameters and coefficients ────────────────────────────────────────────

/// Density ratio, depth ratio and the three modelling parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    pub gamma: f64,
    pub delta: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta: f64,
    /// Allows `gamma == 0` (free-surface limit).
    #[serde(default)]
    pub surface: bool,
}

impl PhysicalParams {
    pub fn new(gamma: f64, delta: f64, alpha1: f64, alpha2: f64, beta: f64) -> Self {
        Self { gamma, delta, alpha1, alpha2, beta, surface: false }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        check_gamma_delta(self.gamma, self.delta)?;
        if self.gamma == 0.0 && !self.surface {
            return Err(ModelError::Domain("gamma = 0 requires surface mode".into()));
        }
        if !(self.alpha1 >= 0.0) {
            return Err(ModelError::Domain(format!("alpha1 = {} < 0", self.alpha1)));
        }
        if !(self.alpha2 <= 1.0) {
            return Err(ModelError::Domain(format!("alpha2 = {} > 1", self.alpha2)));
        }
        if !(self.beta >= 0.0) {
            return Err(ModelError::Domain(format!("beta = {} < 0", self.beta)));
        }
        Ok(())
    }
}

fn check_gamma_delta(gamma: f64, delta: f64) -> Result<(), ModelError> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(ModelError::Domain(format!("gamma = {gamma} not in [0, 1)")));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(ModelError::Domain(format!("delta = {delta} must be positive")));
    }
    Ok(())
}

/// Dispersion coefficients together with every derived constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub gamma: f64,
    pub delta: f64,
    /// Regularization length in `u = (1 - β ∂²) v_β`.
    pub beta: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    /// Nonlinearity coefficient `(δ² - γ)/(δ + γ)²`.
    pub kappa_gd: f64,
    pub c_sound: f64,
    pub s_const: f64,
    /// `(δ+γ)a + b + c + d - S`, when requested.
    pub consistency: Option<f64>,
}

impl ModelCoeffs {
    fn assemble(a: f64, b: f64, c: f64, d: f64, gamma: f64, delta: f64, beta: f64) -> Self {
        let kappa1 = 1.0 / (delta + gamma);
        let kappa2 = 1.0 - gamma;
        Self {
            a,
            b,
            c,
            d,
            gamma,
            delta,
            beta,
            kappa1,
            kappa2,
            kappa_gd: (delta * delta - gamma) / ((delta + gamma) * (delta + gamma)),
            c_sound: (kappa2 * kappa1).sqrt(),
            s_const: s_const(gamma, delta),
            consistency: None,
        }
    }

    /// `(δ+γ)a + b + c + d - S(γ, δ)`.
    pub fn consistency_residual(&self) -> f64 {
        (self.delta + self.gamma) * self.a + self.b + self.c + self.d - self.s_const
    }

    /// `a/κ₁`, written `ã` in the dispersion formulas.
    pub fn a_tilde(&self) -> f64 {
        self.a / self.kappa1
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    /// Same coefficients with the quadratic terms switched off.
    pub fn linearized(mut self) -> Self {
        self.kappa_gd = 0.0;
        self
    }

    /// True when `b = d` up to round-off, the Hamiltonian case.
    pub fn is_hamiltonian(&self) -> bool {
        (self.b - self.d).abs() <= 1e-12 * self.b.abs().max(self.d.abs()).max(1.0)
    }
}

/// `S(γ, δ) = (1 + γδ) / (3δ(γ + δ))`.
pub fn s_const(gamma: f64, delta: f64) -> f64 {
    (1.0 + gamma * delta) / (3.0 * delta * (gamma + delta))
}

pub fn derive_coeffs(p: &PhysicalParams) -> Result<ModelCoeffs, ModelError> {
    p.validate()?;
    let (g, dl) = (p.gamma, p.delta);
    let gd = g + dl;
    let a = ((1.0 - p.alpha1) * (1.0 + g * dl) - 3.0 * dl * p.beta * gd) / (3.0 * dl * gd * gd);
    let b = p.alpha1 * (1.0 + g * dl) / (3.0 * dl * gd);
    let c = p.beta * p.alpha2;
    let d = p.beta * (1.0 - p.alpha2);
    let mut k = ModelCoeffs::assemble(a, b, c, d, g, dl, p.beta);
    k.consistency = Some(k.consistency_residual());
    Ok(k)
}

/// Builds coefficients from a user quadruple. A quadruple violating the
/// consistency identity is accepted; with `check` its residual is recorded.
/// `β` defaults to `c + d` (clamped at zero).
pub fn coeffs_from_quadruple(
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    gamma: f64,
    delta: f64,
    check: bool,
) -> Result<ModelCoeffs, ModelError> {
    check_gamma_delta(gamma, delta)?;
    for (name, v) in [("a", a), ("b", b), ("c", c), ("d", d)] {
        if !v.is_finite() {
            return Err(ModelError::Domain(format!("{name} = {v} is not finite")));
        }
    }
    let mut k = ModelCoeffs::assemble(a, b, c, d, gamma, delta, (c + d).max(0.0));
    if check {
        k.consistency = Some(k.consistency_residual());
    }
    Ok(k)
}

pub fn sound_speed(gamma: f64, delta: f64) -> Result<f64, ModelError> {
    if !(gamma < 1.0) {
        return Err(ModelError::Domain(format!("gamma = {gamma} >= 1")));
    }
    if !(delta + gamma > 0.0) {
        return Err(ModelError::Domain("delta + gamma must be positive".into()));
    }
    Ok(((1.0 - gamma) / (delta + gamma)).sqrt())
}

// ─── classification ─────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinearCase {
    C1,
    C2,
    C3,
    IllPosed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WellPosedCase {
    I,
    II,
    III,
    IV,
    V,
    VI,
    VII,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NftCase {
    A1,
    A2,
    A3,
    A4,
    A5,
    A6,
    DZero,
}

impl NftCase {
    /// Wave type predicted near the sound speed by the normal-form table.
    pub fn predicted_wave_type(self) -> Option<WaveType> {
        match self {
            NftCase::A1 | NftCase::A2 => Some(WaveType::Gsw),
            NftCase::A3 | NftCase::A4 | NftCase::A5 | NftCase::A6 => Some(WaveType::Csw),
            NftCase::DZero => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Curve {
    C0,
    C1,
    C2,
    C3,
}

/// Location in the `(B, A)` plane of `λ⁴ - Bλ² + A = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    /// `A > 0`, `|B| < 2√A`: complex quartet.
    R1,
    /// `A > 0`, `B > 2√A`: four real roots.
    R2,
    /// `A < 0`: two real and two imaginary roots.
    R3,
    /// `A > 0`, `B < -2√A`: four imaginary roots.
    R4,
    OnCurve(Curve),
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::R1 => write!(f, "1"),
            Region::R2 => write!(f, "2"),
            Region::R3 => write!(f, "3"),
            Region::R4 => write!(f, "4"),
            Region::OnCurve(c) => write!(f, "{c:?}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub c_s: f64,
    pub linear_case: LinearCase,
    pub wellposed_case: Option<WellPosedCase>,
    pub nft_case: Option<NftCase>,
    pub d_det: f64,
    pub a_coef: Option<f64>,
    pub b_coef: Option<f64>,
    pub region: Option<Region>,
}

fn nearly_equal(x: f64, y: f64) -> bool {
    (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0)
}

pub fn classify_linear(k: &ModelCoeffs) -> LinearCase {
    let (a, b, c, d) = (k.a, k.b, k.c, k.d);
    let tied = nearly_equal(c, a * (k.delta + k.gamma));
    if a <= 0.0 && c <= 0.0 && b >= 0.0 && d >= 0.0 {
        LinearCase::C1
    } else if b >= 0.0 && d >= 0.0 && tied && c > 0.0 {
        LinearCase::C2
    } else if nearly_equal(b, d) && b < 0.0 && tied && c > 0.0 {
        LinearCase::C3
    } else {
        LinearCase::IllPosed
    }
}

pub fn classify_wellposed(k: &ModelCoeffs) -> Option<WellPosedCase> {
    if classify_linear(k) != LinearCase::C1 {
        return None;
    }
    let (a, b, c, d) = (k.a, k.b, k.c, k.d);
    let pos = |x: f64| x > 0.0;
    let neg = |x: f64| x < 0.0;
    let zero = |x: f64| x == 0.0;
    if pos(b) && pos(d) && zero(a) && zero(c) {
        Some(WellPosedCase::I)
    } else if pos(b) && pos(d) && neg(a) && neg(c) {
        Some(WellPosedCase::II)
    } else if zero(b) && pos(d) && neg(a) && neg(c) {
        Some(WellPosedCase::III)
    } else if zero(a) && zero(c) && ((zero(b) && pos(d)) || (pos(b) && zero(d))) {
        Some(WellPosedCase::IV)
    } else if pos(b) && pos(d) && ((zero(a) && neg(c)) || (neg(a) && zero(c))) {
        Some(WellPosedCase::V)
    } else if zero(b) && pos(d) && neg(a) && zero(c) {
        Some(WellPosedCase::VI)
    } else if (pos(b) && zero(d) && neg(a) && zero(c)) || (zero(b) && pos(d) && zero(a) && neg(c)) {
        Some(WellPosedCase::VII)
    } else {
        None
    }
}

/// `D = b d c_s² - (1-γ) a c`.
pub fn d_det(k: &ModelCoeffs, c_s: f64) -> f64 {
    k.b * k.d * c_s * c_s - k.kappa2 * k.a * k.c
}

/// Coefficients `(A, B)` of the characteristic equation, or `DZero`.
pub fn characteristic_coefficients(k: &ModelCoeffs, c_s: f64) -> Result<(f64, f64), ModelError> {
    let dd = d_det(k, c_s);
    if dd.abs() <= D_ZERO_TOL {
        return Err(ModelError::DZero);
    }
    let c2 = k.c_sound * k.c_sound;
    let a_coef = (c_s * c_s - c2) / dd;
    let b_coef = ((k.b + k.d) * c_s * c_s + (k.c + k.a / k.kappa1) * c2) / dd;
    Ok((a_coef, b_coef))
}

/// Region of the `(B, A)` plane. The bifurcation curves are `A = 0` and
/// `B = ±2√A`, where pairs of roots of `λ⁴ - Bλ² + A` collide.
pub fn region(a_coef: f64, b_coef: f64) -> Region {
    if a_coef.abs() <= CURVE_TOL {
        return if b_coef >= 0.0 { Region::OnCurve(Curve::C0) } else { Region::OnCurve(Curve::C1) };
    }
    if a_coef < 0.0 {
        return Region::R3;
    }
    let two_root = 2.0 * a_coef.sqrt();
    if (b_coef + two_root).abs() <= CURVE_TOL {
        Region::OnCurve(Curve::C2)
    } else if (b_coef - two_root).abs() <= CURVE_TOL {
        Region::OnCurve(Curve::C3)
    } else if b_coef > two_root {
        Region::R2
    } else if b_coef < -two_root {
        Region::R4
    } else {
        Region::R1
    }
}

fn nft_case(k: &ModelCoeffs, dd: f64) -> Option<NftCase> {
    if dd.abs() <= D_ZERO_TOL {
        return Some(NftCase::DZero);
    }
    let (a, b, c, d) = (k.a, k.b, k.c, k.d);
    let both_neg = a < 0.0 && c < 0.0;
    let bd_pos = b > 0.0 && d > 0.0;
    if both_neg && b == 0.0 && d > 0.0 {
        return Some(NftCase::A1);
    }
    if both_neg && bd_pos {
        let split = b * d - a * c / k.kappa1;
        return if split < 0.0 {
            Some(NftCase::A2)
        } else if split > 0.0 {
            Some(NftCase::A3)
        } else {
            None
        };
    }
    if !bd_pos {
        return None;
    }
    match (a == 0.0, c == 0.0) {
        (true, false) if c < 0.0 => Some(NftCase::A4),
        (false, true) if a < 0.0 => Some(NftCase::A5),
        (true, true) => Some(NftCase::A6),
        _ => None,
    }
}

pub fn classify_nft(k: &ModelCoeffs, c_s: f64) -> Classification {
    let linear_case = classify_linear(k);
    let dd = d_det(k, c_s);
    let mut out = Classification {
        c_s,
        linear_case,
        wellposed_case: classify_wellposed(k),
        nft_case: None,
        d_det: dd,
        a_coef: None,
        b_coef: None,
        region: None,
    };
    if linear_case != LinearCase::C1 {
        return out;
    }
    out.nft_case = nft_case(k, dd);
    if let Ok((ac, bc)) = characteristic_coefficients(k, c_s) {
        out.a_coef = Some(ac);
        out.b_coef = Some(bc);
        out.region = Some(region(ac, bc));
    }
    out
}

/// Roots of `λ⁴ - Bλ² + A = 0` as two `±` pairs.
pub fn quartic_roots(a_coef: f64, b_coef: f64) -> [Complex64; 4] {
    let disc = Complex64::new(b_coef * b_coef - 4.0 * a_coef, 0.0).sqrt();
    let half = Complex64::new(0.5, 0.0);
    let s1 = (Complex64::new(b_coef, 0.0) + disc) * half;
    let s2 = (Complex64::new(b_coef, 0.0) - disc) * half;
    let (r1, r2) = (s1.sqrt(), s2.sqrt());
    [r1, -r1, r2, -r2]
}

pub fn characteristic_roots(k: &ModelCoeffs, c_s: f64) -> Result<[Complex64; 4], ModelError> {
    let (ac, bc) = characteristic_coefficients(k, c_s)?;
    Ok(quartic_roots(ac, bc))
}

// ─── dispersion ─────────────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionProfile {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub phi_star: Option<f64>,
    pub x_star: Option<f64>,
    pub x: Vec<f64>,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
}

/// `P(x) = p₁x² + p₂x - p₃`, the numerator of `φ′`.
pub fn p_coefficients(k: &ModelCoeffs) -> (f64, f64, f64) {
    let (at, b, c, d) = (k.a_tilde(), k.b, k.c, k.d);
    let p1 = at * c * (b + d) + b * d * (at + c);
    let p2 = 2.0 * (at * c - b * d);
    let p3 = at + b + c + d;
    (p1, p2, p3)
}

/// `φ(x) = √((1 - ãx)(1 - cx)/((1 + bx)(1 + dx)))`.
pub fn phi(k: &ModelCoeffs, x: f64) -> Result<f64, ModelError> {
    let den = (1.0 + k.b * x) * (1.0 + k.d * x);
    if den == 0.0 {
        return Err(ModelError::Domain(format!("1 + bx or 1 + dx vanishes at x = {x}")));
    }
    let rad = (1.0 - k.a_tilde() * x) * (1.0 - k.c * x) / den;
    if rad < 0.0 {
        return Err(ModelError::Domain(format!("negative radicand at x = {x}")));
    }
    Ok(rad.sqrt())
}

pub fn phi_prime(k: &ModelCoeffs, x: f64) -> Result<f64, ModelError> {
    let f = phi(k, x)?;
    let (p1, p2, p3) = p_coefficients(k);
    let p = p1 * x * x + p2 * x - p3;
    let q = (1.0 + k.b * x) * (1.0 + k.d * x);
    Ok(p / (2.0 * f * q * q))
}

/// `ψ(x) = 2xφ′(x) + φ(x)`, so that `ψ(k²) = d(kφ(k²))/dk`.
pub fn psi(k: &ModelCoeffs, x: f64) -> Result<f64, ModelError> {
    Ok(2.0 * x * phi_prime(k, x)? + phi(k, x)?)
}

/// Phase speeds `v±(k) = -c_s ± c φ(k²)` in the frame moving with `c_s`.
pub fn phase_speeds(k: &ModelCoeffs, c_s: f64, wavenumber: f64) -> Result<(f64, f64), ModelError> {
    let f = k.c_sound * phi(k, wavenumber * wavenumber)?;
    Ok((-c_s + f, -c_s - f))
}

/// Group velocities `ω′±(k) = -c_s ± c ψ(k²)`.
pub fn group_velocities(k: &ModelCoeffs, c_s: f64, wavenumber: f64) -> Result<(f64, f64), ModelError> {
    let g = k.c_sound * psi(k, wavenumber * wavenumber)?;
    Ok((-c_s + g, -c_s - g))
}

pub fn dispersion_profile(k: &ModelCoeffs, xs: &[f64]) -> Result<DispersionProfile, ModelError> {
    let (p1, p2, p3) = p_coefficients(k);
    let bd = k.b * k.d;
    let phi_star = if bd > 0.0 {
        let r = k.a_tilde() * k.c / bd;
        (r >= 0.0).then(|| r.sqrt())
    } else {
        None
    };
    let x_star = positive_root(p1, p2, -p3);
    let mut phis = Vec::with_capacity(xs.len());
    let mut psis = Vec::with_capacity(xs.len());
    for &x in xs {
        phis.push(phi(k, x)?);
        psis.push(psi(k, x)?);
    }
    Ok(DispersionProfile { p1, p2, p3, phi_star, x_star, x: xs.to_vec(), phi: phis, psi: psis })
}

/// Smallest positive root of `p x² + q x + r`.
fn positive_root(p: f64, q: f64, r: f64) -> Option<f64> {
    let roots: Vec<f64> = if p == 0.0 {
        if q == 0.0 { vec![] } else { vec![-r / q] }
    } else {
        let disc = q * q - 4.0 * p * r;
        if disc < 0.0 {
            vec![]
        } else {
            let s = disc.sqrt();
            // cancellation-free pair
            let t = -0.5 * (q + q.signum() * s);
            if t == 0.0 { vec![0.0] } else { vec![t / p, r / t] }
        }
    };
    roots.into_iter().filter(|&x| x > 0.0 && x.is_finite()).reduce(f64::min)
}

// ─── existence predicates ───────────────────────────────────────────────────

/// Concentration-compactness speed bound `min(κ₂|c|/b, |a|/(2b))`.
pub fn cc_speed_bound(k: &ModelCoeffs) -> Option<f64> {
    if !(k.is_hamiltonian() && k.b > 0.0 && k.a < 0.0 && k.c < 0.0) {
        return None;
    }
    Some((k.kappa2 * k.c.abs() / k.b).min(k.a.abs() / (2.0 * k.b)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarity {
    Elevation,
    Depression,
}

impl Polarity {
    pub fn sign(self) -> f64 {
        match self {
            Polarity::Elevation => 1.0,
            Polarity::Depression => -1.0,
        }
    }
}

/// End points of the admissible segment of `{f = 0}` in the `(v_β, ζ)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TolandSegment {
    pub p1: (f64, f64),
    pub p2: (f64, f64),
    pub polarity: Polarity,
    /// Directions where the quadratic form `Q` vanishes, paired with `p1`, `p2`.
    pub null_directions: [(f64, f64); 2],
}

/// `f(v_β, ζ)` of the first integral: `(1/c_s)(-κ₁v² - κv²ζ - κ₂ζ² + 2c_s ζ v)`.
pub fn toland_f(k: &ModelCoeffs, c_s: f64, v: f64, zeta: f64) -> f64 {
    (-k.kappa1 * v * v - k.kappa_gd * v * v * zeta - k.kappa2 * zeta * zeta
        + 2.0 * c_s * zeta * v)
        / c_s
}

/// Gradient of [`toland_f`] with respect to `(v_β, ζ)`.
pub fn toland_grad(k: &ModelCoeffs, c_s: f64, v: f64, zeta: f64) -> (f64, f64) {
    let dv = (-2.0 * k.kappa1 * v - 2.0 * k.kappa_gd * v * zeta + 2.0 * c_s * zeta) / c_s;
    let dz = (-k.kappa_gd * v * v - 2.0 * k.kappa2 * zeta + 2.0 * c_s * v) / c_s;
    (dv, dz)
}

/// Speed implied by `f = 0` at a crest with `μ = ζ(0)/v_β(0)`.
pub fn speed_amplitude(k: &ModelCoeffs, mu: f64, zeta0: f64) -> f64 {
    (k.kappa1 + k.kappa_gd * zeta0 + k.kappa2 * mu * mu) / (2.0 * mu)
}

pub fn toland_segment(k: &ModelCoeffs, c_s: f64) -> Result<TolandSegment, ModelError> {
    if k.kappa_gd.abs() <= 1e-12 {
        return Err(ModelError::Degenerate("kappa_gd = 0 (delta^2 = gamma)".into()));
    }
    if c_s == 0.0 {
        return Err(ModelError::Degenerate("c_s = 0".into()));
    }
    if !(k.is_hamiltonian() && k.b > 0.0 && k.a <= 0.0 && k.c <= 0.0) {
        return Err(ModelError::NotApplicable("requires a, c <= 0 and b = d > 0".into()));
    }
    let polarity = if c_s > 0.0 {
        if (c_s - k.c_sound) * k.kappa_gd > 0.0 { Polarity::Elevation } else { Polarity::Depression }
    } else if k.kappa_gd < 0.0 {
        Polarity::Elevation
    } else {
        Polarity::Depression
    };
    if k.a == 0.0 && k.c == 0.0 {
        let kap = k.kappa_gd;
        let p1 = if c_s < 0.0 {
            (0.0, 0.0)
        } else {
            let u1 = (c_s * c_s - k.c_sound * k.c_sound) / (c_s * kap);
            (u1, c_s * u1 / k.kappa2)
        };
        let u1p = 2.0 * (c_s - k.c_sound) / kap;
        let p2 = (u1p, (k.kappa1 / k.kappa2).sqrt() * u1p);
        return Ok(TolandSegment { p1, p2, polarity, null_directions: [(1.0, 0.0), (0.0, 1.0)] });
    }
    let dirs = q_null_directions(k, c_s);
    let p1 = tangency_point(k, c_s, dirs[0])?;
    let p2 = tangency_point(k, c_s, dirs[1])?;
    Ok(TolandSegment { p1, p2, polarity, null_directions: dirs })
}

/// Unit directions where `Q(u) = -(a/c_s)u₁² - 2b u₁u₂ - (κ₂c/c_s)u₂²` vanishes,
/// the one closer to the `u₁` axis first.
pub fn q_null_directions(k: &ModelCoeffs, c_s: f64) -> [(f64, f64); 2] {
    let qa = -k.a / c_s;
    let qb = -k.b;
    let qc = -k.kappa2 * k.c / c_s;
    // Q(cos θ, sin θ) = qa cos² + 2 qb cos sin + qc sin²
    let mut dirs: Vec<(f64, f64)> = Vec::new();
    if qc == 0.0 {
        dirs.push((0.0, 1.0));
        let t = -qa / (2.0 * qb);
        let n = (1.0 + t * t).sqrt();
        dirs.push((1.0 / n, t / n));
    } else {
        let disc = (qb * qb - qa * qc).max(0.0).sqrt();
        for t in [(-qb + disc) / qc, (-qb - disc) / qc] {
            let n = (1.0 + t * t).sqrt();
            dirs.push((1.0 / n, t / n));
        }
    }
    dirs.sort_by(|x, y| x.1.abs().total_cmp(&y.1.abs()));
    [dirs[0], dirs[1]]
}

/// Point of `{f = 0} \ {0}` where `∇f ⊥ dir`, by bracketing along rays.
fn tangency_point(k: &ModelCoeffs, c_s: f64, dir: (f64, f64)) -> Result<(f64, f64), ModelError> {
    // On the ray s(cos θ, sin θ): c_s f = s² q(θ) + s³ g(θ).
    let ray = |th: f64| -> Option<(f64, f64)> {
        let (e1, e2) = (th.cos(), th.sin());
        let q = -k.kappa1 * e1 * e1 - k.kappa2 * e2 * e2 + 2.0 * c_s * e1 * e2;
        let g = -k.kappa_gd * e1 * e1 * e2;
        if g == 0.0 {
            return None;
        }
        let s = -q / g;
        (s > 0.0 && q * c_s > 0.0).then_some((s * e1, s * e2))
    };
    let h = |th: f64| -> Option<f64> {
        let (v, z) = ray(th)?;
        let (gv, gz) = toland_grad(k, c_s, v, z);
        Some(gv * dir.0 + gz * dir.1)
    };
    const SAMPLES: usize = 20_000;
    let step = std::f64::consts::TAU / SAMPLES as f64;
    let mut best: Option<(f64, f64)> = None;
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=SAMPLES {
        let th = i as f64 * step;
        let cur = h(th).map(|v| (th, v));
        if let (Some((t0, h0)), Some((t1, h1))) = (prev, cur) {
            if h0 == 0.0 || h0.signum() != h1.signum() {
                let root = bisect(&h, t0, t1, h0);
                if let Some(p) = ray(root) {
                    let r = p.0.hypot(p.1);
                    if best.is_none_or(|b| r < b.0.hypot(b.1)) {
                        best = Some(p);
                    }
                }
            }
        }
        prev = cur;
    }
    best.ok_or_else(|| ModelError::NotApplicable("no tangency point on f = 0".into()))
}

fn bisect(h: &impl Fn(f64) -> Option<f64>, mut lo: f64, mut hi: f64, h_lo: f64) -> f64 {
    let s_lo = h_lo.signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        match h(mid) {
            Some(v) if v.signum() == s_lo && v != 0.0 => lo = mid,
            Some(_) => hi = mid,
            None => break,
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Coefficients of `Δ(k) = Δ₀ + Δ₁k² + Δ₂k⁴ = det S(k)` and the tail decay rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaPolynomial {
    pub d0: f64,
    pub d1: f64,
    pub d2: f64,
    pub r_minus: Option<f64>,
    pub r_plus: Option<f64>,
    /// `Δ₂ = 0`: a single decay rate from `Δ₀ - Δ₁r² = 0`.
    pub reduced: bool,
}

pub fn delta_polynomial(k: &ModelCoeffs, c_s: f64) -> DeltaPolynomial {
    let c2 = k.c_sound * k.c_sound;
    let cs2 = c_s * c_s;
    let d0 = cs2 - c2;
    let d1 = cs2 * (k.b + k.d) - c2 * (-k.c - k.a / k.kappa1);
    let d2 = cs2 * k.b * k.d - k.kappa2 * k.a * k.c;
    let rate = |r2: f64| (r2 >= 0.0 && r2.is_finite()).then(|| r2.sqrt());
    if d2 == 0.0 {
        let r_minus = if d1 != 0.0 { rate(d0 / d1) } else { None };
        return DeltaPolynomial { d0, d1, d2, r_minus, r_plus: None, reduced: true };
    }
    let disc = d1 * d1 - 4.0 * d0 * d2;
    if disc < 0.0 {
        return DeltaPolynomial { d0, d1, d2, r_minus: None, r_plus: None, reduced: false };
    }
    let s = disc.sqrt();
    DeltaPolynomial {
        d0,
        d1,
        d2,
        r_minus: rate((d1 - s) / (2.0 * d2)),
        r_plus: rate((d1 + s) / (2.0 * d2)),
        reduced: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bench() -> ModelCoeffs {
        coeffs_from_quadruple(-1.0 / 3.0, 0.758466, -2.0 / 3.0, 0.758466, 0.5, 0.9, true).unwrap()
    }

    fn a3_witness() -> ModelCoeffs {
        let s = s_const(0.5, 0.9);
        let d = (0.5 + 0.9) / 3.0 - 1.0 / 3.0 + 2.0 / 3.0 + s;
        coeffs_from_quadruple(-1.0 / 3.0, 1.0 / 3.0, -2.0 / 3.0, d, 0.5, 0.9, true).unwrap()
    }

    #[test]
    fn derived_coefficients_match_hand_values() {
        let k = derive_coeffs(&PhysicalParams::new(0.5, 0.9, 1.0, 0.0, 0.0)).unwrap();
        assert_eq!(k.a, 0.0);
        assert!((k.b - 1.45 / (3.0 * 0.9 * 1.4)).abs() < 1e-15);
        assert!((k.b - 0.383598).abs() < 1e-6);
        assert_eq!((k.c, k.d), (0.0, 0.0));

        let mut p = PhysicalParams::new(0.0, 1.0, 0.0, 0.0, 0.0);
        assert!(derive_coeffs(&p).is_err());
        p.surface = true;
        let k = derive_coeffs(&p).unwrap();
        assert!((k.a - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!((k.b, k.c, k.d), (0.0, 0.0, 0.0));
    }

    #[test]
    fn derived_coefficients_are_consistent() {
        let k = derive_coeffs(&PhysicalParams::new(0.5, 0.9, 0.3, -2.0, 1.7)).unwrap();
        assert!(k.consistency.unwrap().abs() < 1e-14);
        assert!(((0.9 + 0.5) * k.a + k.b + k.c + k.d - 0.383598).abs() < 1e-6);
    }

    #[test]
    fn parameter_domain_is_enforced() {
        assert!(derive_coeffs(&PhysicalParams::new(1.0, 0.9, 0.0, 0.0, 0.0)).is_err());
        assert!(derive_coeffs(&PhysicalParams::new(0.5, 0.0, 0.0, 0.0, 0.0)).is_err());
        assert!(derive_coeffs(&PhysicalParams::new(0.5, 0.9, -0.1, 0.0, 0.0)).is_err());
        assert!(derive_coeffs(&PhysicalParams::new(0.5, 0.9, 0.0, 1.1, 0.0)).is_err());
        assert!(derive_coeffs(&PhysicalParams::new(0.5, 0.9, 0.0, 0.0, -1.0)).is_err());
        assert!(sound_speed(1.0, 0.5).is_err());
    }

    #[test]
    fn quadruple_residuals() {
        assert!(a3_witness().consistency.unwrap().abs() <= 1e-6);
        let z = coeffs_from_quadruple(0.0, 0.0, 0.0, 0.0, 0.5, 0.9, true).unwrap();
        assert!((z.consistency.unwrap() + s_const(0.5, 0.9)).abs() < 1e-15);
        let dl = (0.5 + (0.25f64 + 8.0).sqrt()) / 2.0;
        let k1 = 1.0 / (0.5 + dl);
        let a = k1 * (1.0 / 6.0 - 1.0 / 9.0 + 1.0 / 6.0 - 4.0 / 3.0);
        let k = coeffs_from_quadruple(a, 1.0 / 9.0, -1.0 / 6.0, 4.0 / 3.0, 0.5, dl, true).unwrap();
        assert!(k.consistency.unwrap().abs() <= 1e-6);
        assert!((a + 0.508252).abs() < 1e-6);
        // b = d = 0.758466 is the consistent choice for the benchmark.
        assert!(bench().consistency.unwrap().abs() < 1e-6);
        assert!(!coeffs_from_quadruple(0., 0., 0., 0., 0.5, 0.9, false).unwrap().consistency.is_some());
    }

    #[test]
    fn sound_speed_values() {
        let c = sound_speed(0.5, 0.9).unwrap();
        assert!((c - 0.597614).abs() < 1e-6);
        assert!((c + 0.1 - 0.6976).abs() < 1e-4);
        assert!((c + 0.5 - 1.0976).abs() < 1e-4);
        assert_eq!(sound_speed(0.0, 1.0).unwrap(), 1.0);
        let k = bench();
        assert!((k.c_sound * k.c_sound - k.kappa1 * k.kappa2).abs() < 1e-15);
    }

    #[test]
    fn linear_cases() {
        assert_eq!(classify_linear(&a3_witness()), LinearCase::C1);
        let k = coeffs_from_quadruple(0.0, 0.1918, 0.0, 0.1918, 0.5, 0.9, false).unwrap();
        assert_eq!(classify_linear(&k), LinearCase::C1);
        let k = coeffs_from_quadruple(0.1, -0.2, 0.1 * 1.4, -0.2, 0.5, 0.9, false).unwrap();
        assert_eq!(classify_linear(&k), LinearCase::C3);
        let k = coeffs_from_quadruple(0.1, 0.2, 0.1 * 1.4, 0.3, 0.5, 0.9, false).unwrap();
        assert_eq!(classify_linear(&k), LinearCase::C2);
        let k = coeffs_from_quadruple(0.1, 0.2, 0.3, 0.3, 0.5, 0.9, false).unwrap();
        assert_eq!(classify_linear(&k), LinearCase::IllPosed);
    }

    #[test]
    fn wellposed_cases() {
        let q = |a, b, c, d| coeffs_from_quadruple(a, b, c, d, 0.5, 0.9, false).unwrap();
        assert_eq!(classify_wellposed(&a3_witness()), Some(WellPosedCase::II));
        assert_eq!(classify_wellposed(&q(0.0, 0.0, 0.0, 1.0)), Some(WellPosedCase::IV));
        assert_eq!(classify_wellposed(&q(0.0, 1.0, 0.0, 0.0)), Some(WellPosedCase::IV));
        assert_eq!(classify_wellposed(&q(0.0, 0.0, 0.0, 0.0)), None);
        assert_eq!(classify_wellposed(&q(0.0, 1.0, 0.0, 1.0)), Some(WellPosedCase::I));
        assert_eq!(classify_wellposed(&q(-1.0, 0.0, -1.0, 1.0)), Some(WellPosedCase::III));
        assert_eq!(classify_wellposed(&q(0.0, 1.0, -1.0, 1.0)), Some(WellPosedCase::V));
        assert_eq!(classify_wellposed(&q(-1.0, 1.0, 0.0, 1.0)), Some(WellPosedCase::V));
        assert_eq!(classify_wellposed(&q(-1.0, 0.0, 0.0, 1.0)), Some(WellPosedCase::VI));
        assert_eq!(classify_wellposed(&q(-1.0, 1.0, 0.0, 0.0)), Some(WellPosedCase::VII));
        assert_eq!(classify_wellposed(&q(0.0, 0.0, -1.0, 1.0)), Some(WellPosedCase::VII));
        assert_eq!(classify_wellposed(&q(1.0, 1.0, 1.4, 1.0)), None);
    }

    #[test]
    fn nft_witnesses() {
        let k = a3_witness();
        let cl = classify_nft(&k, k.c_sound + 0.5);
        assert_eq!(cl.nft_case, Some(NftCase::A3));
        assert_eq!(cl.nft_case.unwrap().predicted_wave_type(), Some(WaveType::Csw));
        let k = coeffs_from_quadruple(0.0, 0.2, 0.0, 0.3, 0.5, 0.9, false).unwrap();
        let cl = classify_nft(&k, 1.1);
        assert_eq!(cl.nft_case, Some(NftCase::A6));
        assert!((cl.d_det - 0.2 * 0.3 * 1.21).abs() < 1e-15);
        let k = coeffs_from_quadruple(0.0, 0.0, 0.0, 0.3, 0.5, 0.9, false).unwrap();
        assert_eq!(classify_nft(&k, 1.1).nft_case, Some(NftCase::DZero));
        assert!(characteristic_roots(&k, 1.1).is_err());
    }

    #[test]
    fn regions_of_the_plane() {
        assert_eq!(region(0.0, 1.0), Region::OnCurve(Curve::C0));
        assert_eq!(region(0.0, -1.0), Region::OnCurve(Curve::C1));
        assert_eq!(region(4.0, -4.0), Region::OnCurve(Curve::C2));
        assert_eq!(region(4.0, 4.0), Region::OnCurve(Curve::C3));
        assert_eq!(region(1.0, 3.0), Region::R2);
        assert_eq!(region(-1.0, 0.3), Region::R3);
        assert_eq!(region(1.0, 0.5), Region::R1);
        assert_eq!(region(1.0, -3.0), Region::R4);
    }

    #[test]
    fn quartic_roots_on_curves() {
        let r = quartic_roots(0.0, 4.0);
        let mut re: Vec<f64> = r.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        assert_eq!(re, vec![-2.0, 0.0, 0.0, 2.0]);
        assert!(r.iter().all(|z| z.im == 0.0));
        let r = quartic_roots(0.0, -9.0);
        let mut im: Vec<f64> = r.iter().map(|z| z.im).collect();
        im.sort_by(f64::total_cmp);
        assert!(r.iter().all(|z| z.re.abs() < 1e-15));
        assert!((im[0] + 3.0).abs() < 1e-15 && (im[3] - 3.0).abs() < 1e-15);
        assert!(im[1].abs() < 1e-15 && im[2].abs() < 1e-15);
    }

    #[test]
    fn dispersion_basics() {
        let k = a3_witness();
        assert_eq!(phi(&k, 0.0).unwrap(), 1.0);
        let prof = dispersion_profile(&k, &[0.0, 1.0, 10.0]).unwrap();
        assert!((prof.phi_star.unwrap() - 0.88801).abs() < 1e-4);
        assert!((prof.p3 - k.s_const).abs() < 1e-6);
        assert_eq!(prof.phi[0], 1.0);
        let x = prof.x_star.unwrap();
        assert!((prof.p1 * x * x + prof.p2 * x - prof.p3).abs() < 1e-12);
        let bad = coeffs_from_quadruple(1.0, 0.0, -1.0, 0.0, 0.5, 0.9, false).unwrap();
        assert!(phi(&bad, 2.0).is_err());
    }

    #[test]
    fn surface_limit_phi_degenerates_gracefully() {
        let k = coeffs_from_quadruple(-0.2, 0.0, -0.1, 0.0, 0.5, 0.9, false).unwrap();
        let x = 0.7;
        let expect = ((1.0 - k.a_tilde() * x) * (1.0 + 0.1 * x)).sqrt();
        assert!((phi(&k, x).unwrap() - expect).abs() < 1e-15);
        assert!(dispersion_profile(&k, &[x]).unwrap().phi_star.is_none());
    }

    #[test]
    fn cc_bound_value() {
        let m = cc_speed_bound(&bench()).unwrap();
        assert!((m - (1.0 / 3.0) / (2.0 * 0.758466)).abs() < 1e-12);
        assert!((m - 0.2198).abs() < 1e-4);
        assert!(cc_speed_bound(&a3_witness()).is_none());
        // tie: κ₂|c|/b = |a|/(2b)
        let k = coeffs_from_quadruple(-0.5, 0.4, -0.5, 0.4, 0.5, 0.9, false).unwrap();
        let m = cc_speed_bound(&k).unwrap();
        assert!((m - 0.5 * 0.5 / 0.4).abs() < 1e-15 && (m - 0.5 / 0.8).abs() < 1e-15);
    }

    #[test]
    fn toland_points_for_the_diagonal_case() {
        let k = coeffs_from_quadruple(0.0, 0.191799, 0.0, 0.191799, 0.5, 0.9, false).unwrap();
        let cs = k.c_sound + 0.5;
        let seg = toland_segment(&k, cs).unwrap();
        assert!((seg.p1.0 - 4.8825).abs() < 5e-4 && (seg.p1.1 - 10.7182).abs() < 5e-4);
        assert!((seg.p2.0 - 6.3226).abs() < 5e-4 && (seg.p2.1 - 7.5569).abs() < 5e-4);
        assert_eq!(seg.polarity, Polarity::Elevation);
        for p in [seg.p1, seg.p2] {
            assert!(toland_f(&k, cs, p.0, p.1).abs() < 1e-10);
        }
        let mu = seg.p1.1 / seg.p1.0;
        assert!((speed_amplitude(&k, mu, seg.p1.1) - cs).abs() < 1e-12);
        let seg0 = toland_segment(&k, k.c_sound).unwrap();
        assert_eq!(seg0.p1, (0.0, 0.0));
        assert_eq!(toland_segment(&k, -1.0).unwrap().p1, (0.0, 0.0));
    }

    #[test]
    fn toland_numeric_route_agrees_with_closed_form() {
        let k = coeffs_from_quadruple(0.0, 0.191799, 0.0, 0.191799, 0.5, 0.9, false).unwrap();
        let cs = k.c_sound + 0.5;
        let closed = toland_segment(&k, cs).unwrap();
        let p1 = tangency_point(&k, cs, (1.0, 0.0)).unwrap();
        let p2 = tangency_point(&k, cs, (0.0, 1.0)).unwrap();
        assert!((p1.0 - closed.p1.0).abs() < 1e-9 && (p1.1 - closed.p1.1).abs() < 1e-9);
        assert!((p2.0 - closed.p2.0).abs() < 1e-9 && (p2.1 - closed.p2.1).abs() < 1e-9);
    }

    #[test]
    fn toland_general_case_satisfies_tangency() {
        let k = bench();
        let cs = k.c_sound + 0.3;
        let seg = toland_segment(&k, cs).unwrap();
        let q = |u: (f64, f64)| {
            -k.a / cs * u.0 * u.0 - 2.0 * k.b * u.0 * u.1 - k.kappa2 * k.c / cs * u.1 * u.1
        };
        for (p, v) in [(seg.p1, seg.null_directions[0]), (seg.p2, seg.null_directions[1])] {
            assert!(q(v).abs() < 1e-12);
            assert!(toland_f(&k, cs, p.0, p.1).abs() < 1e-10);
            let g = toland_grad(&k, cs, p.0, p.1);
            assert!((g.0 * v.0 + g.1 * v.1).abs() < 1e-9);
        }
    }

    #[test]
    fn toland_polarity_and_degeneracy() {
        // δ² < γ gives κ < 0
        let k = coeffs_from_quadruple(0.0, 0.2, 0.0, 0.2, 0.5, 0.5, false).unwrap();
        assert!(k.kappa_gd < 0.0);
        assert_eq!(toland_segment(&k, k.c_sound + 0.1).unwrap().polarity, Polarity::Depression);
        let dl = 0.5f64.sqrt();
        let k = coeffs_from_quadruple(0.0, 0.2, 0.0, 0.2, 0.5, dl, false).unwrap();
        assert!(matches!(toland_segment(&k, 1.0), Err(ModelError::Degenerate(_))));
    }

    #[test]
    fn delta_polynomial_cases() {
        let k = a3_witness();
        let dp = delta_polynomial(&k, k.c_sound + 0.5);
        assert!(dp.d0 > 0.0 && dp.d1 > 0.0 && dp.d2 > 0.0);
        let dp = delta_polynomial(&k, k.c_sound);
        assert_eq!(dp.d0, 0.0);
        assert_eq!(dp.r_minus, Some(0.0));
        let b = 0.191799;
        let k = coeffs_from_quadruple(0.0, b, 0.0, b, 0.5, 0.9, false).unwrap();
        let cs = k.c_sound + 0.5;
        let dp = delta_polynomial(&k, cs);
        let expect = (1.0 / b.sqrt()) * (1.0 - k.c_sound / cs).sqrt();
        assert!((dp.r_minus.unwrap() - expect).abs() < 1e-12);
        let k = coeffs_from_quadruple(0.0, 0.0, -0.3, 0.4, 0.5, 0.9, false).unwrap();
        let dp = delta_polynomial(&k, 1.0);
        assert!(dp.reduced && dp.r_plus.is_none());
        let r = dp.r_minus.unwrap();
        assert!((dp.d0 - dp.d1 * r * r).abs() < 1e-12);
    }
}
