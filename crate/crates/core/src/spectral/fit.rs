//! Damped least-squares fit of the a*sin^2(sqrt(b*P)) law to a measured
//! power sweep. The objective is multimodal in b (the sin^2 period), so the
//! solver multi-starts from a fixed ladder of b guesses.

use super::{EfficiencyCurve, SpectralError};
use thiserror::Error;

const B_STARTS: [f64; 4] = [0.005, 0.01, 0.02, 0.04];
const MAX_ITERATIONS: usize = 200;
const RELATIVE_STEP_TOLERANCE: f64 = 1e-9;
const MIN_SAMPLES: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least {MIN_SAMPLES} samples, got {0}")]
    TooFewSamples(usize),
    #[error("all efficiencies are zero; the law parameters are undetermined")]
    DegenerateData,
    #[error("no start converged within {MAX_ITERATIONS} iterations (best: a={}, b={} mW^-1, rms={})", best.a, best.b_per_mw, best.rms_residual)]
    NotConverged { best: EfficiencyFit },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Result of a curve fit: the law constants plus the RMS misfit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyFit {
    pub a: f64,
    pub b_per_mw: f64,
    pub rms_residual: f64,
    pub iterations: usize,
}

fn model(a: f64, b: f64, p: f64) -> f64 {
    a * (b * p).sqrt().sin().powi(2)
}

fn sum_squared_residuals(a: f64, b: f64, powers: &[f64], etas: &[f64]) -> f64 {
    powers
        .iter()
        .zip(etas)
        .map(|(&p, &y)| {
            let r = y - model(a, b, p);
            r * r
        })
        .sum()
}

#[derive(Clone, Copy)]
struct StartResult {
    a: f64,
    b: f64,
    sse: f64,
    iterations: usize,
    converged: bool,
}

fn run_start(a0: f64, b0: f64, powers: &[f64], etas: &[f64]) -> StartResult {
    let mut a = a0;
    let mut b = b0;
    let mut sse = sum_squared_residuals(a, b, powers, etas);
    let mut lambda = 1e-3;
    for iteration in 1..=MAX_ITERATIONS {
        // normal equations for the 2-parameter Jacobian
        let (mut jaa, mut jab, mut jbb, mut ga, mut gb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&p, &y) in powers.iter().zip(etas) {
            let u = (b * p).sqrt();
            let da = u.sin().powi(2);
            // d model / d b = a * sin(2u) * p / (2u), with the u -> 0 limit a*p
            let db = if u < 1e-12 {
                a * p
            } else {
                a * (2.0 * u).sin() * p / (2.0 * u)
            };
            let r = y - model(a, b, p);
            jaa += da * da;
            jab += da * db;
            jbb += db * db;
            ga += da * r;
            gb += db * r;
        }
        let mut accepted = false;
        for _ in 0..40 {
            let maa = jaa * (1.0 + lambda);
            let mbb = jbb * (1.0 + lambda);
            let det = maa * mbb - jab * jab;
            if det.abs() < 1e-300 {
                lambda *= 10.0;
                continue;
            }
            let step_a = (ga * mbb - jab * gb) / det;
            let step_b = (maa * gb - jab * ga) / det;
            let (na, nb) = (a + step_a, b + step_b);
            if na <= 0.0 || nb <= 0.0 {
                lambda *= 10.0;
                continue;
            }
            let new_sse = sum_squared_residuals(na, nb, powers, etas);
            if new_sse <= sse {
                let rel = (step_a / na).abs().max((step_b / nb).abs());
                a = na;
                b = nb;
                sse = new_sse;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if rel < RELATIVE_STEP_TOLERANCE {
                    return StartResult {
                        a,
                        b,
                        sse,
                        iterations: iteration,
                        converged: true,
                    };
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // damping saturated: the iterate no longer improves
            return StartResult {
                a,
                b,
                sse,
                iterations: iteration,
                converged: true,
            };
        }
    }
    StartResult {
        a,
        b,
        sse,
        iterations: MAX_ITERATIONS,
        converged: false,
    }
}

/// Fit (a, b) to the curve by damped least squares with multi-start over b.
/// Deterministic: identical input yields identical output.
pub fn fit_efficiency_curve(curve: &EfficiencyCurve) -> Result<EfficiencyFit, FitError> {
    let samples = curve.samples();
    if samples.len() < MIN_SAMPLES {
        return Err(FitError::TooFewSamples(samples.len()));
    }
    let powers: Vec<f64> = samples.iter().map(|s| s.pump_power_mw).collect();
    let etas: Vec<f64> = samples.iter().map(|s| s.efficiency).collect();
    let eta_max = etas.iter().fold(0.0f64, |m, &y| m.max(y));
    if eta_max <= 0.0 {
        return Err(FitError::DegenerateData);
    }

    let a0 = eta_max.clamp(1e-3, 1.0);
    let mut best_converged: Option<StartResult> = None;
    let mut best_any: Option<StartResult> = None;
    for &b0 in &B_STARTS {
        let result = run_start(a0, b0, &powers, &etas);
        if best_any.map_or(true, |r| result.sse < r.sse) {
            best_any = Some(result);
        }
        if result.converged && best_converged.map_or(true, |r| result.sse < r.sse) {
            best_converged = Some(result);
        }
    }
    let to_fit = |r: &StartResult| EfficiencyFit {
        a: r.a,
        b_per_mw: r.b,
        rms_residual: (r.sse / samples.len() as f64).sqrt(),
        iterations: r.iterations,
    };
    match best_converged {
        Some(r) => Ok(to_fit(&r)),
        None => Err(FitError::NotConverged {
            best: to_fit(&best_any.expect("at least one start ran")),
        }),
    }
}
