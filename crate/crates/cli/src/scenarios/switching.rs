//! Pump switching traces: rendered waveforms per switching interval, the
//! converted-efficiency traces they drive, measured 10-90% edges, and
//! plateau flatness under the EDFA transient.

use crate::config::SwitchingScenario;
use crate::{fmt_f64, CliError, RunContext};
use csqfc_core::pump::{
    instantaneous_efficiency, measure_rise_fall, parse_switch_schedule, render_waveform,
    smoothstep_10_90_fraction, EdfaTransient, PumpChannelConfig, PumpWaveform, SwitchSchedule,
};
use csqfc_core::spectral::ConversionDevice;

fn interval_label(value: f64) -> String {
    if value >= 1.0 && value == value.trunc() {
        format!("{}us", value as i64)
    } else {
        format!("{}us", fmt_f64(value).replace('.', "p"))
    }
}

struct SegmentStats {
    above90_fraction: f64,
    min_plateau_eta_over_a: f64,
}

/// Per-channel plateau statistics from the schedule's on-segments.
fn segment_stats(
    flat: &PumpWaveform,
    driven: &PumpWaveform,
    schedule: &SwitchSchedule,
    config: &PumpChannelConfig,
    device: &ConversionDevice,
) -> Result<SegmentStats, CliError> {
    let run_err = |e: csqfc_core::pump::PumpError| CliError::Infeasible(e.to_string());
    let edge_us = config.shutter_rise_fall_us / smoothstep_10_90_fraction();
    let law = device
        .law(config.channel_index)
        .map_err(|e| CliError::Config(e.to_string()))?;

    let events = schedule.events();
    let mut on_time = 0.0;
    let mut segments = 0u32;
    let mut min_eta_ratio = f64::INFINITY;
    for (i, event) in events.iter().enumerate() {
        if event.target_channel != config.channel_index {
            continue;
        }
        let end = events
            .get(i + 1)
            .map_or(schedule.horizon_us(), |e| e.time_us);
        segments += 1;
        on_time += end - event.time_us;
        // plateau: from the completed edge to the next switch
        let mut t = event.time_us + edge_us;
        while t < end {
            let eta = instantaneous_efficiency(driven, config.channel_index, device, t)
                .map_err(run_err)?;
            min_eta_ratio = min_eta_ratio.min(eta / law.a);
            t += flat.dt_us();
        }
    }
    if segments == 0 {
        return Err(CliError::Infeasible(format!(
            "channel {} never selected by the schedule",
            config.channel_index
        )));
    }

    let steady = flat.steady_power_mw(config.channel_index).map_err(run_err)?;
    let column = flat.column(config.channel_index).map_err(run_err)?;
    let above90 = column.iter().filter(|&&p| p >= 0.9 * steady).count() as f64 * flat.dt_us();
    Ok(SegmentStats {
        above90_fraction: above90 / on_time,
        min_plateau_eta_over_a: min_eta_ratio,
    })
}

fn waveform_csv(waveform: &PumpWaveform) -> String {
    let mut header = String::from("t_us");
    for channel in waveform.channels() {
        header.push_str(&format!(",p_ch{channel}_mw"));
    }
    header.push('\n');
    let columns: Vec<&[f64]> = waveform
        .channels()
        .iter()
        .map(|&c| waveform.column(c).expect("own channel"))
        .collect();
    let mut body = header;
    for i in 0..waveform.n_samples() {
        body.push_str(&fmt_f64(i as f64 * waveform.dt_us()));
        for column in &columns {
            body.push(',');
            body.push_str(&fmt_f64(column[i]));
        }
        body.push('\n');
    }
    body
}

fn converted_csv(waveform: &PumpWaveform, device: &ConversionDevice) -> Result<String, CliError> {
    let mut header = String::from("t_us");
    for channel in waveform.channels() {
        header.push_str(&format!(",eta_ch{channel}"));
    }
    header.push('\n');
    let mut body = header;
    for i in 0..waveform.n_samples() {
        let t = i as f64 * waveform.dt_us();
        body.push_str(&fmt_f64(t));
        for &channel in waveform.channels() {
            let eta = instantaneous_efficiency(waveform, channel, device, t)
                .map_err(|e| CliError::Config(e.to_string()))?;
            body.push(',');
            body.push_str(&fmt_f64(eta));
        }
        body.push('\n');
    }
    Ok(body)
}

pub fn run(scenario: &SwitchingScenario, context: &mut RunContext) -> Result<(), CliError> {
    let configs: Vec<PumpChannelConfig> = scenario
        .pump_channels
        .iter()
        .map(|spec| spec.build())
        .collect::<Result<_, _>>()?;
    if configs.is_empty() {
        return Err(CliError::Config("switching needs at least one pump channel".into()));
    }
    let device = scenario.device.build()?;
    for config in &configs {
        device
            .law(config.channel_index)
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let finest = configs
        .iter()
        .map(|c| c.shutter_rise_fall_us)
        .fold(f64::INFINITY, f64::min);
    let dt_us = scenario.dt_us.unwrap_or(finest / 50.0);
    let edfa = EdfaTransient {
        overshoot: scenario.edfa.overshoot,
        decay_us: scenario.edfa.decay_us,
    };

    // (label, schedule) per rendered trace
    let mut cases: Vec<(String, f64, SwitchSchedule)> = Vec::new();
    if let Some(file) = &scenario.schedule_file {
        let horizon = scenario.horizon_us.ok_or_else(|| {
            CliError::Config("schedule_file requires horizon_us".into())
        })?;
        let schedule = parse_switch_schedule(&context.read_data(file)?, horizon)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let gap = schedule.min_gap_us().unwrap_or(horizon);
        cases.push(("custom".into(), gap, schedule));
    }
    for &interval in &scenario.intervals_us {
        if !(interval > 0.0) {
            return Err(CliError::Config(format!("bad switching interval {interval}")));
        }
        let channels: Vec<u32> = configs.iter().map(|c| c.channel_index).collect();
        let horizon = interval * scenario.periods as f64;
        let schedule = SwitchSchedule::alternating(&channels, interval, horizon)
            .map_err(|e| CliError::Config(e.to_string()))?;
        cases.push((interval_label(interval), interval, schedule));
    }
    if cases.is_empty() {
        return Err(CliError::Config(
            "switching needs intervals_us or a schedule_file".into(),
        ));
    }

    let mut summary = String::from(
        "case,interval_us,channel,rise_us,fall_us,above90_fraction,min_plateau_eta_over_a\n",
    );
    for (label, interval, schedule) in &cases {
        let driven = render_waveform(&configs, schedule, dt_us, &edfa)
            .map_err(|e| CliError::Config(e.to_string()))?;
        // edge timing is measured with the transient disabled
        let flat = render_waveform(&configs, schedule, dt_us, &EdfaTransient::disabled())
            .map_err(|e| CliError::Config(e.to_string()))?;

        context
            .out
            .write(&format!("waveform_{label}.csv"), &waveform_csv(&driven))?;
        context
            .out
            .write(&format!("converted_{label}.csv"), &converted_csv(&driven, &device)?)?;

        for config in &configs {
            let (rise, fall) = measure_rise_fall(&flat, config.channel_index)
                .map_err(|e| CliError::Infeasible(e.to_string()))?;
            let stats = segment_stats(&flat, &driven, schedule, config, &device)?;
            summary.push_str(&format!(
                "{label},{},{},{},{},{},{}\n",
                fmt_f64(*interval),
                config.channel_index,
                fmt_f64(rise),
                fmt_f64(fall),
                fmt_f64(stats.above90_fraction),
                fmt_f64(stats.min_plateau_eta_over_a)
            ));
        }
    }
    context.out.write("switching_summary.csv", &summary)?;
    Ok(())
}
