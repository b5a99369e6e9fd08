//! Efficiency-vs-pump-power sweep over the calibrated channels.

use crate::config::EfficiencySweepScenario;
use crate::{fmt_f64, CliError, RunContext};
use csqfc_core::spectral::EfficiencyLaw;

pub fn run(scenario: &EfficiencySweepScenario, context: &mut RunContext) -> Result<(), CliError> {
    if scenario.channels.is_empty() {
        return Err(CliError::Config("efficiency-sweep needs at least one channel".into()));
    }
    if !(scenario.power_step_mw > 0.0) || scenario.power_max_mw < scenario.power_min_mw {
        return Err(CliError::Config(format!(
            "bad power grid: min {} max {} step {}",
            scenario.power_min_mw, scenario.power_max_mw, scenario.power_step_mw
        )));
    }
    let mut laws = Vec::new();
    for spec in &scenario.channels {
        let law = EfficiencyLaw::new(spec.a, spec.b_per_mw)
            .map_err(|e| CliError::Config(e.to_string()))?;
        laws.push((spec.index, law));
    }

    let mut curve = String::from("pump_channel,pump_power_mw,efficiency\n");
    for (index, law) in &laws {
        let mut step = 0u64;
        loop {
            let power = scenario.power_min_mw + step as f64 * scenario.power_step_mw;
            if power > scenario.power_max_mw + 1e-9 {
                break;
            }
            let eta = law
                .efficiency(power)
                .map_err(|e| CliError::Config(e.to_string()))?;
            curve.push_str(&format!("{index},{},{}\n", fmt_f64(power), fmt_f64(eta)));
            step += 1;
        }
    }
    context.out.write("efficiency_sweep.csv", &curve)?;

    let mut summary =
        String::from("pump_channel,a,b_per_mw,optimal_power_mw,peak_efficiency\n");
    for (index, law) in &laws {
        let p_star = law.optimal_power_mw();
        let peak = law.efficiency(p_star).expect("optimal power is nonnegative");
        summary.push_str(&format!(
            "{index},{},{},{},{}\n",
            fmt_f64(law.a),
            fmt_f64(law.b_per_mw),
            fmt_f64(p_star),
            fmt_f64(peak)
        ));
    }
    context.out.write("efficiency_summary.csv", &summary)?;
    Ok(())
}
