//! Envelope-efficiency scan across a pump band: channel count and usability
//! against the threshold.

use crate::config::BandwidthScanScenario;
use crate::{fmt_f64, CliError, RunContext};
use csqfc_core::spectral::{selectable_channel_count, Frequency};

pub fn run(scenario: &BandwidthScanScenario, context: &mut RunContext) -> Result<(), CliError> {
    let config_err = |e: csqfc_core::spectral::SpectralError| CliError::Config(e.to_string());
    let device = scenario.device.build()?;
    let low = Frequency::from_ghz(scenario.band_low_ghz).map_err(config_err)?;
    let high = Frequency::from_ghz(scenario.band_high_ghz).map_err(config_err)?;
    let count = selectable_channel_count(low, high, scenario.spacing_ghz).map_err(config_err)?;

    let mut rows = String::from("channel,pump_ghz,envelope_efficiency,usable\n");
    let mut all_usable = count > 0;
    for index in 0..count {
        let pump_ghz = scenario.band_low_ghz + index as i64 * scenario.spacing_ghz;
        let pump = Frequency::from_ghz(pump_ghz).map_err(config_err)?;
        let envelope = device.envelope_efficiency(pump).map_err(config_err)?;
        let usable = envelope >= scenario.threshold;
        all_usable &= usable;
        rows.push_str(&format!(
            "{},{pump_ghz},{},{}\n",
            index + 1,
            fmt_f64(envelope),
            u8::from(usable)
        ));
    }
    context.out.write("bandwidth_scan.csv", &rows)?;

    let model_band = device.usable_band(scenario.threshold).map_err(config_err)?;
    let (model_low, model_high) = match model_band {
        Some((lo, hi)) => (lo.ghz().to_string(), hi.ghz().to_string()),
        None => (String::new(), String::new()),
    };
    let mut summary = String::from(
        "selectable_channels,band_low_ghz,band_high_ghz,spacing_ghz,threshold,all_usable,model_band_low_ghz,model_band_high_ghz\n",
    );
    summary.push_str(&format!(
        "{count},{},{},{},{},{},{model_low},{model_high}\n",
        scenario.band_low_ghz,
        scenario.band_high_ghz,
        scenario.spacing_ghz,
        fmt_f64(scenario.threshold),
        u8::from(all_usable)
    ));
    context.out.write("bandwidth_summary.csv", &summary)?;
    Ok(())
}
