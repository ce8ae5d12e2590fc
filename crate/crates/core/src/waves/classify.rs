use serde::Serialize;

use super::{SolitaryWave, WaveType};

/// Relative boundary amplitude above which a non-decaying tail counts as ripples.
const GSW_TAIL: f64 = 1e-8;
/// Values below this fraction of the amplitude are ignored when counting sign changes.
const SIGN_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileMetrics {
    pub amplitude: f64,
    /// `max |ζ|` over `|x| ≥ 0.9 L`.
    pub tail_amplitude: f64,
    /// `max |ζ|` over `0.6 L ≤ |x| < 0.75 L`.
    pub mid_amplitude: f64,
    pub sign_changes: usize,
}

impl ProfileMetrics {
    pub fn of(zeta: &[f64]) -> Self {
        let n = zeta.len();
        let amplitude = zeta.iter().copied().fold(0.0, |a: f64, x| if x.abs() > a.abs() { x } else { a });
        let band = |lo: f64, hi: f64| {
            zeta.iter()
                .enumerate()
                .filter(|(j, _)| {
                    // |x|/L at node j
                    let r = (2.0 * *j as f64 / n as f64 - 1.0).abs();
                    r >= lo && r < hi
                })
                .fold(0.0f64, |m, (_, z)| m.max(z.abs()))
        };
        let floor = SIGN_FLOOR * amplitude.abs();
        let mut sign_changes = 0;
        let mut last = 0.0f64;
        for &z in zeta {
            if z.abs() <= floor {
                continue;
            }
            if last != 0.0 && z.signum() != last {
                sign_changes += 1;
            }
            last = z.signum();
        }
        Self { amplitude, tail_amplitude: band(0.9, 1.1), mid_amplitude: band(0.6, 0.75), sign_changes }
    }
}

pub fn classify_profile(w: &SolitaryWave) -> WaveType {
    let m = ProfileMetrics::of(&w.zeta);
    let a = m.amplitude.abs();
    if a == 0.0 {
        return WaveType::Csw;
    }
    if m.tail_amplitude >= 0.5 * a {
        return WaveType::PeriodicTw;
    }
    let decaying = m.tail_amplitude < 0.5 * m.mid_amplitude;
    if m.tail_amplitude > GSW_TAIL * a && !decaying {
        return WaveType::Gsw;
    }
    if m.sign_changes >= 2 {
        WaveType::CswNonmonotone
    } else {
        WaveType::Csw
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wave(zeta: Vec<f64>) -> SolitaryWave {
        SolitaryWave {
            half_length: 50.0,
            c_s: 1.0,
            beta: 0.0,
            u: zeta.clone(),
            v_beta: zeta.clone(),
            residual_history: vec![],
            outer_residual_history: vec![],
            mh_history: vec![],
            iterations: 0,
            converged: true,
            amplitude: 0.0,
            wave_type: WaveType::Csw,
            zeta,
        }
    }

    fn nodes(n: usize) -> Vec<f64> {
        (0..n).map(|j| -50.0 + j as f64 * 100.0 / n as f64).collect()
    }

    #[test]
    fn sech_is_csw() {
        let z = nodes(512).iter().map(|x| 2.0 / (0.5 * x).cosh().powi(2)).collect();
        assert_eq!(classify_profile(&wave(z)), WaveType::Csw);
    }

    #[test]
    fn oscillatory_decay_is_nonmonotone() {
        let z = nodes(512).iter().map(|x| (-0.3 * x.abs()).exp() * (1.5 * x).cos()).collect();
        assert_eq!(classify_profile(&wave(z)), WaveType::CswNonmonotone);
    }

    #[test]
    fn ripples_make_gsw() {
        let z = nodes(512)
            .iter()
            .map(|x| 1.0 / (0.5 * x).cosh().powi(2) + 1e-4 * (2.0 * x).cos())
            .collect();
        assert_eq!(classify_profile(&wave(z)), WaveType::Gsw);
    }

    #[test]
    fn cosine_is_periodic() {
        let z = nodes(512).iter().map(|x| (std::f64::consts::PI * x / 10.0).cos()).collect();
        assert_eq!(classify_profile(&wave(z)), WaveType::PeriodicTw);
    }
}
