//! Round assignment for a demand set, with the switching-feasibility report
//! and the duty-factor rate estimate.

use crate::config::ScheduleScenario;
use crate::{fmt_f64, CliError, RunContext};
use csqfc_core::scheduler::{
    effective_rate, feasibility_report, parse_link_requests, schedule_with_midpoints,
    validate_schedule, ScheduleError,
};
use csqfc_core::spectral::Frequency;

fn schedule_err(err: ScheduleError) -> CliError {
    match err {
        ScheduleError::Infeasible { .. } | ScheduleError::Invalid { .. } => {
            CliError::Infeasible(err.to_string())
        }
        other => CliError::Config(other.to_string()),
    }
}

pub fn run(scenario: &ScheduleScenario, context: &mut RunContext) -> Result<(), CliError> {
    let requests = parse_link_requests(&context.read_data(&scenario.requests_file)?)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let plan = scenario.channel_plan.build()?;
    let constraint = scenario.rate.build()?;
    let signal = Frequency::from_ghz(scenario.signal_ghz)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let pump_configs: Vec<_> = scenario
        .pump_channels
        .iter()
        .map(|spec| spec.build())
        .collect::<Result<_, _>>()?;

    let rounds = schedule_with_midpoints(&requests, &plan, &constraint, scenario.midpoints)
        .map_err(schedule_err)?;
    validate_schedule(&rounds, &requests, &plan, signal).map_err(schedule_err)?;
    let report = feasibility_report(&rounds, &pump_configs, &constraint).map_err(schedule_err)?;
    let rate = effective_rate(&constraint, scenario.success_probability).map_err(schedule_err)?;

    let mut table = String::from("round,party,pump_channel,midpoint,converted_channel\n");
    for assignment in &rounds {
        for pairing in &assignment.pairings {
            for (party, pump) in [
                (&pairing.party_a, pairing.pump_channel_a),
                (&pairing.party_b, pairing.pump_channel_b),
            ] {
                table.push_str(&format!(
                    "{},{party},{pump},{},{}\n",
                    assignment.round, pairing.midpoint, pairing.converted_channel
                ));
            }
        }
    }
    context.out.write("schedule.csv", &table)?;

    let total_pairings: usize = rounds.iter().map(|r| r.pairings.len()).sum();
    let mut summary = String::from(
        "total_rounds,total_pairings,duty_factor,effective_rate_per_s,violations\n",
    );
    summary.push_str(&format!(
        "{},{total_pairings},{},{},{}\n",
        report.total_rounds,
        fmt_f64(constraint.duty_factor()),
        fmt_f64(rate),
        report.violations.len()
    ));
    context.out.write("schedule_summary.csv", &summary)?;

    let mut violations = String::from("party,from_round,to_round,separation_us,required_us\n");
    for violation in &report.violations {
        violations.push_str(&format!(
            "{},{},{},{},{}\n",
            violation.party,
            violation.from_round,
            violation.to_round,
            fmt_f64(violation.separation_us),
            fmt_f64(violation.required_us)
        ));
    }
    context.out.write("violations.csv", &violations)?;

    let mut utilization = String::from("channel,pairings\n");
    for (channel, count) in &report.channel_utilization {
        utilization.push_str(&format!("{channel},{count}\n"));
    }
    context.out.write("channel_utilization.csv", &utilization)?;
    Ok(())
}
