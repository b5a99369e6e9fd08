//! Exact two-mode Fock-space model of one conversion round: the pump-driven
//! beamsplitter-like unitary coupling the signal mode to the selected
//! converted mode, plus the one-pump-per-round guard.

use num_complex::Complex64;
use thiserror::Error;

/// Total-photon-number truncation keeps factorial arithmetic well inside f64.
pub const MAX_CUTOFF: usize = 32;

/// Default truncation: heralded-single-photon scenarios occupy n <= 2, so 4
/// leaves headroom for multi-pair tests.
pub const DEFAULT_CUTOFF: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum FockError {
    #[error("cutoff must be in 1..={MAX_CUTOFF}, got {0}")]
    CutoffOutOfRange(usize),
    #[error("amplitude vector has length {got}, expected {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("occupation ({n_s}, {n_c}) exceeds the total-photon cutoff {cutoff}")]
    OutsideTruncation { n_s: usize, n_c: usize, cutoff: usize },
    #[error("state norm^2 is {0}, expected 1 within 1e-12")]
    NotNormalized(f64),
    #[error("amplitudes beyond the total-photon cutoff must be exactly zero")]
    NonzeroBeyondCutoff,
    #[error("theta must lie in [0, pi], got {0}")]
    ThetaOutOfRange(f64),
    #[error("phi must lie in [0, 2*pi), got {0}")]
    PhiOutOfRange(f64),
    #[error("round index must be at least 1")]
    RoundOutOfRange,
    #[error("pump power must be nonnegative, got {0} mW")]
    NegativePumpPower(f64),
    #[error("coefficient b must be positive, got {0} mW^-1")]
    NonPositiveLawCoefficient(f64),
}

/// Joint photon-number amplitudes of the signal and converted modes,
/// truncated at a total photon number `cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeFockState {
    cutoff: usize,
    amplitudes: Vec<Complex64>,
}

const NORM_TOLERANCE: f64 = 1e-12;

impl TwoModeFockState {
    fn dim(cutoff: usize) -> usize {
        (cutoff + 1) * (cutoff + 1)
    }

    fn index(&self, n_s: usize, n_c: usize) -> usize {
        n_s * (self.cutoff + 1) + n_c
    }

    pub fn vacuum(cutoff: usize) -> Result<Self, FockError> {
        Self::fock(cutoff, 0, 0)
    }

    /// The basis state |n_s, n_c>.
    pub fn fock(cutoff: usize, n_s: usize, n_c: usize) -> Result<Self, FockError> {
        if cutoff == 0 || cutoff > MAX_CUTOFF {
            return Err(FockError::CutoffOutOfRange(cutoff));
        }
        if n_s + n_c > cutoff {
            return Err(FockError::OutsideTruncation { n_s, n_c, cutoff });
        }
        let mut amplitudes = vec![Complex64::ZERO; Self::dim(cutoff)];
        amplitudes[n_s * (cutoff + 1) + n_c] = Complex64::ONE;
        Ok(TwoModeFockState { cutoff, amplitudes })
    }

    /// Build a state from row-major amplitudes indexed by (n_s, n_c).
    /// The vector must be normalized and zero beyond the cutoff.
    pub fn from_amplitudes(cutoff: usize, amplitudes: Vec<Complex64>) -> Result<Self, FockError> {
        if cutoff == 0 || cutoff > MAX_CUTOFF {
            return Err(FockError::CutoffOutOfRange(cutoff));
        }
        if amplitudes.len() != Self::dim(cutoff) {
            return Err(FockError::ShapeMismatch {
                expected: Self::dim(cutoff),
                got: amplitudes.len(),
            });
        }
        let state = TwoModeFockState { cutoff, amplitudes };
        for n_s in 0..=cutoff {
            for n_c in 0..=cutoff {
                if n_s + n_c > cutoff && state.amplitudes[state.index(n_s, n_c)] != Complex64::ZERO
                {
                    return Err(FockError::NonzeroBeyondCutoff);
                }
            }
        }
        let norm_sq = state.norm_sq();
        if (norm_sq - 1.0).abs() > NORM_TOLERANCE {
            return Err(FockError::NotNormalized(norm_sq));
        }
        Ok(state)
    }

    /// Like [`TwoModeFockState::from_amplitudes`] but rescales to unit norm.
    pub fn from_unnormalized(cutoff: usize, amplitudes: Vec<Complex64>) -> Result<Self, FockError> {
        if cutoff == 0 || cutoff > MAX_CUTOFF {
            return Err(FockError::CutoffOutOfRange(cutoff));
        }
        if amplitudes.len() != Self::dim(cutoff) {
            return Err(FockError::ShapeMismatch {
                expected: Self::dim(cutoff),
                got: amplitudes.len(),
            });
        }
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if norm_sq <= 0.0 {
            return Err(FockError::NotNormalized(norm_sq));
        }
        let scale = norm_sq.sqrt().recip();
        Self::from_amplitudes(cutoff, amplitudes.into_iter().map(|a| a * scale).collect())
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn amplitude(&self, n_s: usize, n_c: usize) -> Complex64 {
        self.amplitudes[self.index(n_s, n_c)]
    }

    pub fn probability(&self, n_s: usize, n_c: usize) -> f64 {
        self.amplitude(n_s, n_c).norm_sqr()
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Distribution of the total photon number n_s + n_c.
    pub fn total_photon_distribution(&self) -> Vec<f64> {
        let mut dist = vec![0.0; self.cutoff + 1];
        for n_s in 0..=self.cutoff {
            for n_c in 0..=(self.cutoff - n_s) {
                dist[n_s + n_c] += self.probability(n_s, n_c);
            }
        }
        dist
    }

    /// Marginal distribution of the converted-mode photon number.
    pub fn converted_number_distribution(&self) -> Vec<f64> {
        let mut dist = vec![0.0; self.cutoff + 1];
        for n_s in 0..=self.cutoff {
            for n_c in 0..=(self.cutoff - n_s) {
                dist[n_c] += self.probability(n_s, n_c);
            }
        }
        dist
    }
}

/// Pump setting for one conversion round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfcSetting {
    theta: f64,
    phi: f64,
    round: u32,
    pump_channel: u32,
}

impl QfcSetting {
    pub fn new(theta: f64, phi: f64, round: u32, pump_channel: u32) -> Result<Self, FockError> {
        if !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(FockError::ThetaOutOfRange(theta));
        }
        if !(0.0..std::f64::consts::TAU).contains(&phi) {
            return Err(FockError::PhiOutOfRange(phi));
        }
        if round == 0 {
            return Err(FockError::RoundOutOfRange);
        }
        Ok(QfcSetting {
            theta,
            phi,
            round,
            pump_channel,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn pump_channel(&self) -> u32 {
        self.pump_channel
    }

    /// The setting that undoes this one: same theta, phi advanced by pi.
    pub fn inverse(&self) -> QfcSetting {
        QfcSetting {
            theta: self.theta,
            phi: (self.phi + std::f64::consts::PI) % std::f64::consts::TAU,
            round: self.round,
            pump_channel: self.pump_channel,
        }
    }
}

/// Interaction angle from pump power: theta = 2 * sqrt(b * P), so that
/// sin^2(theta / 2) reproduces the efficiency law with unit peak.
/// Overdriving past the optimum yields theta > pi.
pub fn theta_from_power(b_per_mw: f64, pump_power_mw: f64) -> Result<f64, FockError> {
    if b_per_mw <= 0.0 {
        return Err(FockError::NonPositiveLawCoefficient(b_per_mw));
    }
    if pump_power_mw < 0.0 {
        return Err(FockError::NegativePumpPower(pump_power_mw));
    }
    Ok(2.0 * (b_per_mw * pump_power_mw).sqrt())
}

/// Probability that one signal photon leaves in the converted mode.
pub fn conversion_probability(theta: f64) -> f64 {
    (theta / 2.0).sin().powi(2)
}

/// Coefficients of the signal and converted input modes in the outgoing
/// converted mode: (e^{-i phi} sin(theta/2), cos(theta/2)).
pub fn mode_transform_coeffs(setting: &QfcSetting) -> (Complex64, Complex64) {
    let half = setting.theta / 2.0;
    let phase = Complex64::from_polar(1.0, -setting.phi);
    (phase * half.sin(), Complex64::new(half.cos(), 0.0))
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Apply the conversion-round unitary to a state.
///
/// The creation operators map as
///   a_s+ -> cos(theta/2) a_s+ + e^{-i phi} sin(theta/2) a_c+
///   a_c+ -> -e^{+i phi} sin(theta/2) a_s+ + cos(theta/2) a_c+
/// which fixes the complementary output by unitarity. Photon-number sectors
/// are preserved, so the truncation is exact rather than approximate.
pub fn apply_qfc(state: &TwoModeFockState, setting: &QfcSetting) -> TwoModeFockState {
    let cutoff = state.cutoff;
    let half = setting.theta / 2.0;
    let cos = Complex64::new(half.cos(), 0.0);
    let sin_out = Complex64::from_polar(half.sin(), -setting.phi);
    let sin_back = -Complex64::from_polar(half.sin(), setting.phi);

    let mut out = vec![Complex64::ZERO; TwoModeFockState::dim(cutoff)];
    for n_s in 0..=cutoff {
        for n_c in 0..=(cutoff - n_s) {
            let amp = state.amplitudes[state.index(n_s, n_c)];
            if amp == Complex64::ZERO {
                continue;
            }
            let total = n_s + n_c;
            let norm_in = (factorial(n_s) * factorial(n_c)).sqrt();
            // expand (alpha a_s+ + beta a_c+)^{n_s} (gamma a_s+ + delta a_c+)^{n_c} |0,0>
            for j in 0..=n_s {
                let term_s = binomial(n_s, j)
                    * cos.powu(j as u32)
                    * sin_out.powu((n_s - j) as u32);
                for k in 0..=n_c {
                    let term_c = binomial(n_c, k)
                        * sin_back.powu(k as u32)
                        * cos.powu((n_c - k) as u32);
                    let m_s = j + k;
                    let m_c = total - m_s;
                    let weight = (factorial(m_s) * factorial(m_c)).sqrt() / norm_in;
                    out[m_s * (cutoff + 1) + m_c] += amp * term_s * term_c * weight;
                }
            }
        }
    }
    TwoModeFockState {
        cutoff,
        amplitudes: out,
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Outcome of the one-pump-per-round check. A violation is a value, not an
/// error: simulation engines must refuse to run a round while in violation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PumpGuard {
    Ok { channel: u32 },
    Violation { channels: Vec<u32> },
}

impl PumpGuard {
    pub fn is_ok(&self) -> bool {
        matches!(self, PumpGuard::Ok { .. })
    }
}

/// Exactly one active pump is required for a deterministic conversion round.
pub fn simultaneous_pump_guard(active_pumps: &[u32]) -> PumpGuard {
    match active_pumps {
        [channel] => PumpGuard::Ok { channel: *channel },
        other => PumpGuard::Violation {
            channels: other.to_vec(),
        },
    }
}
