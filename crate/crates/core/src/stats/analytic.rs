//! Closed-form heralded cross-correlation for a single-mode thermal pair
//! source with uncorrelated Poisson noise on both arms.

use super::StatsError;

/// One detection arm: end-to-end photon efficiency and the probability of an
/// unrelated noise count per emission window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmModel {
    pub efficiency: f64,
    pub noise_per_window: f64,
}

impl ArmModel {
    pub fn noiseless(efficiency: f64) -> Self {
        ArmModel {
            efficiency,
            noise_per_window: 0.0,
        }
    }

    fn validate(&self, what: &'static str) -> Result<(), StatsError> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(StatsError::EfficiencyOutOfRange {
                what,
                value: self.efficiency,
            });
        }
        if !(0.0..1.0).contains(&self.noise_per_window) {
            return Err(StatsError::EfficiencyOutOfRange {
                what: "noise probability per window",
                value: self.noise_per_window,
            });
        }
        Ok(())
    }
}

/// Expected herald/channel cross-correlation g = P(joint) / (P_H * P_C).
///
/// The pair number per window is thermal, P(n) = mu^n / (1 + mu)^(n + 1),
/// so E[x^n] = 1 / (1 + mu (1 - x)). With click probabilities
///   P_arm = 1 - (1 - nu) E[(1 - e)^n]
/// and detections independent given n,
///   P_joint = 1 - (1 - nu_H) E[(1-e_H)^n] - (1 - nu_C) E[(1-e_C)^n]
///             + (1 - nu_H)(1 - nu_C) E[((1-e_H)(1-e_C))^n].
/// Noiseless and lossless this collapses to g = 1 + 1/mu; noise drives
/// g toward 1.
pub fn analytic_g(mu: f64, herald: ArmModel, channel: ArmModel) -> Result<f64, StatsError> {
    if !(mu > 0.0) {
        return Err(StatsError::MuOutOfRange(mu));
    }
    herald.validate("herald arm efficiency")?;
    channel.validate("channel arm efficiency")?;

    // E[x^n] under the thermal distribution
    let moment = |x: f64| 1.0 / (1.0 + mu * (1.0 - x));
    let x_h = 1.0 - herald.efficiency;
    let x_c = 1.0 - channel.efficiency;
    let quiet_h = (1.0 - herald.noise_per_window) * moment(x_h);
    let quiet_c = (1.0 - channel.noise_per_window) * moment(x_c);
    let p_h = 1.0 - quiet_h;
    let p_c = 1.0 - quiet_c;
    let p_joint = 1.0 - quiet_h - quiet_c
        + (1.0 - herald.noise_per_window) * (1.0 - channel.noise_per_window) * moment(x_h * x_c);
    Ok(p_joint / (p_h * p_c))
}
