//! One heralded conversion run: event stream, coincidence histogram, and the
//! estimated cross-correlation against its analytic prediction.

use super::stats_err;
use crate::config::CoincidenceScenario;
use crate::{fmt_f64, CliError, RunContext};
use csqfc_core::stats::{
    accumulate_histogram, analytic_g, estimate_cross_correlation_with, simulate_run,
    CoincidenceHistogram, DetectorId, EventStream,
};

pub(crate) fn histogram_csv(histogram: &CoincidenceHistogram, accidental_per_bin: f64) -> String {
    let mut body = String::from("delay_ps,counts,g_normalized\n");
    for (bin, &counts) in histogram.counts.iter().enumerate() {
        let normalized = if accidental_per_bin > 0.0 {
            fmt_f64(counts as f64 / accidental_per_bin)
        } else {
            String::new()
        };
        body.push_str(&format!(
            "{},{counts},{normalized}\n",
            fmt_f64(histogram.bin_center_ps(bin))
        ));
    }
    body
}

pub(crate) fn events_csv(events: &EventStream) -> String {
    let mut body = String::from("detector_id,time_ps\n");
    for event in events.events() {
        body.push_str(&format!("{},{}\n", event.detector.export_id(), event.time_ps));
    }
    body
}

pub fn run(scenario: &CoincidenceScenario, context: &mut RunContext) -> Result<(), CliError> {
    let config = scenario.experiment.build()?;
    let seed = context.require_seed()?;
    let settings = scenario.experiment.histogram.settings();

    let events = simulate_run(&config, &scenario.active_pumps, seed).map_err(stats_err)?;
    let pump = scenario.active_pumps[0]; // guard passed: exactly one
    let output = config.output_channel_for(pump).map_err(stats_err)?;

    let histogram = accumulate_histogram(
        &events,
        DetectorId::Herald,
        DetectorId::Output(output),
        settings.bin_width_ps,
        settings.span_ps,
    )
    .map_err(stats_err)?;
    let estimate =
        estimate_cross_correlation_with(&histogram, settings.window_ps, settings.plateau_factor)
            .map_err(stats_err)?;

    let (herald_arm, channel_arm) = config.arm_models(pump).map_err(stats_err)?;
    let predicted = analytic_g(
        config.source.mean_pairs_per_window,
        herald_arm,
        channel_arm,
    )
    .map_err(stats_err)?;

    if scenario.export_events {
        context.out.write("events.csv", &events_csv(&events))?;
    }
    context.out.write(
        "histogram.csv",
        &histogram_csv(&histogram, estimate.accidental_per_bin),
    )?;

    let mut summary = String::from(
        "pump_channel,output_channel,g,std_err,analytic_g,window_counts,accidental_per_window,herald_singles,channel_singles,n_windows\n",
    );
    summary.push_str(&format!(
        "{pump},{output},{},{},{},{},{},{},{},{}\n",
        fmt_f64(estimate.g),
        fmt_f64(estimate.std_err),
        fmt_f64(predicted),
        estimate.window_counts,
        fmt_f64(estimate.accidental_per_window),
        histogram.herald_singles,
        histogram.channel_singles,
        events.n_windows()
    ));
    context.out.write("coincidence_summary.csv", &summary)?;
    Ok(())
}
