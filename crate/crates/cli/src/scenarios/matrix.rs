//! Pump-channel sweep: cross-correlation in every output channel for every
//! pump, with the diagonal histograms that feed it.

use super::{coincidence::histogram_csv, stats_err};
use crate::config::MatrixScenario;
use crate::{fmt_f64, CliError, RunContext};
use csqfc_core::stats::{
    accumulate_histogram, estimate_cross_correlation_with, pump_run_seed, simulate_run,
    CellEstimate, DetectorId, StatsError,
};

pub fn run(scenario: &MatrixScenario, context: &mut RunContext) -> Result<(), CliError> {
    let config = scenario.experiment.build()?;
    let seed = context.require_seed()?;
    let settings = scenario.experiment.histogram.settings();

    let pump_channels: Vec<u32> = if scenario.pump_channels.is_empty() {
        (1..=config.pump_plan.count()).collect()
    } else {
        scenario.pump_channels.clone()
    };
    let output_channels: Vec<u32> = (1..=config.output_plan.count()).collect();

    let mut matrix = String::from(
        "pump_channel,output_channel,g,std_err,defined,window_counts\n",
    );
    let mut summary = String::from(
        "pump_channel,diagonal_output,diagonal_g,diagonal_std_err,max_offdiagonal_g,undefined_offdiagonals\n",
    );
    let mut histogram_files = Vec::new();

    for &pump in &pump_channels {
        let run_seed = pump_run_seed(seed, pump);
        let events = simulate_run(&config, &[pump], run_seed).map_err(stats_err)?;
        let diagonal_output = config.output_channel_for(pump).map_err(stats_err)?;

        let mut diagonal: Option<(f64, f64)> = None;
        let mut max_offdiagonal: Option<f64> = None;
        let mut undefined_offdiagonals = 0u32;
        for &output in &output_channels {
            let histogram = accumulate_histogram(
                &events,
                DetectorId::Herald,
                DetectorId::Output(output),
                settings.bin_width_ps,
                settings.span_ps,
            )
            .map_err(stats_err)?;
            let cell = match estimate_cross_correlation_with(
                &histogram,
                settings.window_ps,
                settings.plateau_factor,
            ) {
                Ok(estimate) => CellEstimate::Estimate {
                    g: estimate.g,
                    std_err: estimate.std_err,
                },
                Err(StatsError::ZeroAccidentals { window_counts }) => {
                    CellEstimate::Undefined { window_counts }
                }
                Err(other) => return Err(stats_err(other)),
            };
            match cell {
                CellEstimate::Estimate { g, std_err } => {
                    matrix.push_str(&format!(
                        "{pump},{output},{},{},1,\n",
                        fmt_f64(g),
                        fmt_f64(std_err)
                    ));
                    if output == diagonal_output {
                        diagonal = Some((g, std_err));
                    } else {
                        max_offdiagonal =
                            Some(max_offdiagonal.map_or(g, |m: f64| m.max(g)));
                    }
                }
                CellEstimate::Undefined { window_counts } => {
                    matrix.push_str(&format!("{pump},{output},,,0,{window_counts}\n"));
                    if output != diagonal_output {
                        undefined_offdiagonals += 1;
                    }
                }
            }
            if output == diagonal_output && scenario.export_diagonal_histograms {
                let estimate = estimate_cross_correlation_with(
                    &histogram,
                    settings.window_ps,
                    settings.plateau_factor,
                );
                let accidental = estimate.map(|e| e.accidental_per_bin).unwrap_or(0.0);
                let name = format!("histogram_pump{pump}.csv");
                context
                    .out
                    .write(&name, &histogram_csv(&histogram, accidental))?;
                histogram_files.push(name);
            }
        }
        let (dg, dse) = diagonal
            .map(|(g, se)| (fmt_f64(g), fmt_f64(se)))
            .unwrap_or_default();
        summary.push_str(&format!(
            "{pump},{diagonal_output},{dg},{dse},{},{undefined_offdiagonals}\n",
            max_offdiagonal.map(fmt_f64).unwrap_or_default()
        ));
    }

    context.out.write("matrix.csv", &matrix)?;
    context.out.write("matrix_summary.csv", &summary)?;
    Ok(())
}
