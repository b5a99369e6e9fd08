//! Shared fixtures for the benchmarks; see `benches/hot_paths.rs`.

use csqfc_core::spectral::{ChannelPlan, ConversionDevice, EfficiencyLaw, Frequency, GridDirection};
use csqfc_core::stats::{CrosstalkMatrix, DetectorParams, LossPlacement, SimulationConfig, SourceParams};
use std::collections::BTreeMap;

/// Seven-channel heralded-conversion setup, sized by window count.
pub fn seven_channel_simulation(windows: u64) -> SimulationConfig {
    let mut calibration = BTreeMap::new();
    for channel in 1..=7 {
        calibration.insert(channel, EfficiencyLaw::new(0.39, 0.013).unwrap());
    }
    let source = SourceParams::default();
    let period_ps = source.window_period_ps().unwrap();
    SimulationConfig {
        source,
        herald_detector: DetectorParams::default(),
        channel_detector: DetectorParams::default(),
        device: ConversionDevice::new(
            40.0,
            Frequency::from_ghz(189_200).unwrap(),
            2e-5,
            calibration,
        )
        .unwrap(),
        signal_frequency: Frequency::from_ghz(384_233).unwrap(),
        pump_plan: ChannelPlan::new(
            Frequency::from_ghz(189_383).unwrap(),
            25,
            7,
            GridDirection::Ascending,
        )
        .unwrap(),
        output_plan: ChannelPlan::new(
            Frequency::from_ghz(194_850).unwrap(),
            25,
            7,
            GridDirection::Descending,
        )
        .unwrap(),
        pump_power_mw: None,
        crosstalk: CrosstalkMatrix::identity(7),
        noise_rate_hz: 1e5,
        duration_s: windows as f64 * period_ps as f64 * 1e-12,
        loss_placement: LossPlacement::BeforeConversion,
        parallel: false,
    }
}
