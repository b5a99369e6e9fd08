//! Calibration fitting: ingest a measured power-sweep table and recover the
//! efficiency-law constants per pump channel.

use crate::config::FitScenario;
use crate::{fmt_f64, CliError, RunContext};
use csqfc_core::spectral::{fit_efficiency_curve, parse_calibration_table, FitError};

pub fn run(scenario: &FitScenario, context: &mut RunContext) -> Result<(), CliError> {
    let table = context.read_data(&scenario.calibration_file)?;
    let curves = parse_calibration_table(&table).map_err(|e| CliError::Config(e.to_string()))?;
    if curves.is_empty() {
        return Err(CliError::Config("calibration table holds no samples".into()));
    }

    let mut results = String::from(
        "pump_channel,n_samples,a,b_per_mw,rms_residual,optimal_power_mw,iterations\n",
    );
    for (channel, curve) in &curves {
        let fit = fit_efficiency_curve(curve).map_err(|e| match e {
            FitError::NotConverged { .. } => CliError::Infeasible(format!("channel {channel}: {e}")),
            other => CliError::Config(format!("channel {channel}: {other}")),
        })?;
        let p_star = std::f64::consts::FRAC_PI_2.powi(2) / fit.b_per_mw;
        results.push_str(&format!(
            "{channel},{},{},{},{},{},{}\n",
            curve.len(),
            fmt_f64(fit.a),
            fmt_f64(fit.b_per_mw),
            fmt_f64(fit.rms_residual),
            fmt_f64(p_star),
            fit.iterations
        ));
    }
    context.out.write("fit_results.csv", &results)?;
    Ok(())
}
