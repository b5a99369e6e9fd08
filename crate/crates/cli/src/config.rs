//! TOML config schemas for each scenario kind and their conversion into the
//! core domain types. Validation failures surface as config errors (exit 2).

use crate::{CliError, ScenarioKind};
use csqfc_core::pump::PumpChannelConfig;
use csqfc_core::scheduler::RateConstraint;
use csqfc_core::spectral::{ChannelPlan, ConversionDevice, EfficiencyLaw, Frequency, GridDirection};
use csqfc_core::stats::{
    CrosstalkMatrix, DetectorParams, HistogramSettings, LossPlacement, SimulationConfig,
    SourceParams,
};
use serde::Deserialize;
use std::collections::BTreeMap;

fn config_err(err: impl std::fmt::Display) -> CliError {
    CliError::Config(err.to_string())
}

/// One fitted efficiency law attached to a pump channel index.
#[derive(Debug, Clone, Deserialize)]
pub struct LawSpec {
    pub index: u32,
    pub a: f64,
    pub b_per_mw: f64,
}

/// Converter description: `length_mm, pm_pump_ghz, beta_rad_per_mm_ghz,
/// channels[{index, a, b_per_mw}]`.
#[derive(Debug, Clone, Deserialize)]
pub struct DeviceSpec {
    pub length_mm: f64,
    pub pm_pump_ghz: i64,
    pub beta_rad_per_mm_ghz: f64,
    #[serde(default)]
    pub channels: Vec<LawSpec>,
}

impl DeviceSpec {
    pub fn build(&self) -> Result<ConversionDevice, CliError> {
        let mut calibration = BTreeMap::new();
        for law in &self.channels {
            if calibration
                .insert(law.index, EfficiencyLaw::new(law.a, law.b_per_mw).map_err(config_err)?)
                .is_some()
            {
                return Err(CliError::Config(format!(
                    "duplicate device calibration for channel {}",
                    law.index
                )));
            }
        }
        ConversionDevice::new(
            self.length_mm,
            Frequency::from_ghz(self.pm_pump_ghz).map_err(config_err)?,
            self.beta_rad_per_mm_ghz,
            calibration,
        )
        .map_err(config_err)
    }
}

fn default_direction() -> GridDirection {
    GridDirection::Ascending
}

/// Fixed-spacing channel grid.
#[derive(Debug, Clone, Deserialize)]
pub struct PlanSpec {
    pub base_ghz: i64,
    pub spacing_ghz: i64,
    pub count: u32,
    #[serde(default = "default_direction")]
    pub direction: GridDirection,
}

impl PlanSpec {
    pub fn build(&self) -> Result<ChannelPlan, CliError> {
        ChannelPlan::new(
            Frequency::from_ghz(self.base_ghz).map_err(config_err)?,
            self.spacing_ghz,
            self.count,
            self.direction,
        )
        .map_err(config_err)
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct PumpChannelSpec {
    pub channel_index: u32,
    pub frequency_ghz: i64,
    pub steady_power_mw: f64,
    pub shutter_rise_fall_us: f64,
}

impl PumpChannelSpec {
    pub fn build(&self) -> Result<PumpChannelConfig, CliError> {
        let config = PumpChannelConfig {
            channel_index: self.channel_index,
            frequency: Frequency::from_ghz(self.frequency_ghz).map_err(config_err)?,
            steady_power_mw: self.steady_power_mw,
            shutter_rise_fall_us: self.shutter_rise_fall_us,
        };
        config.validate().map_err(config_err)?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct EfficiencySweepScenario {
    pub channels: Vec<LawSpec>,
    pub power_min_mw: f64,
    pub power_max_mw: f64,
    pub power_step_mw: f64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct BandwidthScanScenario {
    pub device: DeviceSpec,
    pub band_low_ghz: i64,
    pub band_high_ghz: i64,
    pub spacing_ghz: i64,
    /// Minimum envelope efficiency for a channel to count as usable.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    0.40
}

#[derive(Debug, Clone, Deserialize)]
pub struct EdfaSpec {
    pub overshoot: f64,
    pub decay_us: f64,
}

impl Default for EdfaSpec {
    fn default() -> Self {
        EdfaSpec {
            overshoot: 0.5,
            decay_us: 1.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct SwitchingScenario {
    pub pump_channels: Vec<PumpChannelSpec>,
    pub device: DeviceSpec,
    /// Render one waveform per switching interval.
    #[serde(default)]
    pub intervals_us: Vec<f64>,
    /// Rounds of the full channel cycle per rendered waveform.
    #[serde(default = "default_periods")]
    pub periods: u32,
    /// Sample step; defaults to the finest rise/fall divided by 50.
    pub dt_us: Option<f64>,
    #[serde(default)]
    pub edfa: EdfaSpec,
    /// Explicit schedule file (`time_us,target_channel`) instead of
    /// generated alternation; requires `horizon_us`.
    pub schedule_file: Option<String>,
    pub horizon_us: Option<f64>,
}

fn default_periods() -> u32 {
    4
}

#[derive(Debug, Clone, Deserialize)]
pub struct SourceSpec {
    pub mean_pairs_per_window: f64,
    #[serde(default = "default_unit")]
    pub herald_efficiency: f64,
    #[serde(default = "default_unit")]
    pub signal_path_efficiency: f64,
    #[serde(default = "default_window_period")]
    pub window_period_ps: i64,
}

fn default_unit() -> f64 {
    1.0
}

fn default_window_period() -> i64 {
    csqfc_core::stats::DEFAULT_WINDOW_PERIOD_PS
}

impl SourceSpec {
    pub fn build(&self) -> Result<SourceParams, CliError> {
        if self.window_period_ps < 1 {
            return Err(CliError::Config(format!(
                "window_period_ps must be >= 1, got {}",
                self.window_period_ps
            )));
        }
        let params = SourceParams {
            mean_pairs_per_window: self.mean_pairs_per_window,
            herald_efficiency: self.herald_efficiency,
            signal_path_efficiency: self.signal_path_efficiency,
            window_rate_hz: 1e12 / self.window_period_ps as f64,
        };
        params.validate().map_err(config_err)?;
        Ok(params)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CrosstalkSpec {
    Identity,
    NeighborLeak { fraction: f64 },
    Explicit { rows: Vec<Vec<f64>> },
}

impl Default for CrosstalkSpec {
    fn default() -> Self {
        CrosstalkSpec::Identity
    }
}

impl CrosstalkSpec {
    pub fn build(&self, size: usize) -> Result<CrosstalkMatrix, CliError> {
        match self {
            CrosstalkSpec::Identity => Ok(CrosstalkMatrix::identity(size)),
            CrosstalkSpec::NeighborLeak { fraction } => {
                CrosstalkMatrix::with_neighbor_leak(size, *fraction).map_err(config_err)
            }
            CrosstalkSpec::Explicit { rows } => {
                CrosstalkMatrix::new(rows.clone()).map_err(config_err)
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct HistogramSpec {
    #[serde(default = "default_bin")]
    pub bin_width_ps: i64,
    #[serde(default = "default_span")]
    pub span_ps: i64,
    #[serde(default = "default_window")]
    pub window_ps: i64,
    #[serde(default = "default_plateau")]
    pub plateau_factor: f64,
}

fn default_bin() -> i64 {
    34
}
fn default_span() -> i64 {
    5_000
}
fn default_window() -> i64 {
    476
}
fn default_plateau() -> f64 {
    csqfc_core::stats::DEFAULT_PLATEAU_FACTOR
}

impl Default for HistogramSpec {
    fn default() -> Self {
        HistogramSpec {
            bin_width_ps: default_bin(),
            span_ps: default_span(),
            window_ps: default_window(),
            plateau_factor: default_plateau(),
        }
    }
}

impl HistogramSpec {
    pub fn settings(&self) -> HistogramSettings {
        HistogramSettings {
            bin_width_ps: self.bin_width_ps,
            span_ps: self.span_ps,
            window_ps: self.window_ps,
            plateau_factor: self.plateau_factor,
        }
    }
}

/// Shared body of the stochastic scenarios (coincidence and matrix).
#[derive(Debug, Clone, Deserialize)]
pub struct ExperimentSpec {
    pub seed: Option<u64>,
    pub windows: u64,
    pub source: SourceSpec,
    #[serde(default)]
    pub herald_detector: DetectorParams,
    #[serde(default)]
    pub channel_detector: DetectorParams,
    pub device: DeviceSpec,
    pub signal_ghz: i64,
    pub pump_plan: PlanSpec,
    pub output_plan: PlanSpec,
    pub pump_power_mw: Option<f64>,
    #[serde(default)]
    pub crosstalk: CrosstalkSpec,
    #[serde(default)]
    pub noise_rate_hz: f64,
    #[serde(default)]
    pub loss_placement: LossPlacement,
    #[serde(default)]
    pub parallel: bool,
    #[serde(default)]
    pub histogram: HistogramSpec,
}

impl ExperimentSpec {
    pub fn build(&self) -> Result<SimulationConfig, CliError> {
        let source = self.source.build()?;
        if self.windows == 0 {
            return Err(CliError::Config("windows must be >= 1".into()));
        }
        let duration_s = self.windows as f64 * self.source.window_period_ps as f64 * 1e-12;
        let output_plan = self.output_plan.build()?;
        let config = SimulationConfig {
            source,
            herald_detector: self.herald_detector,
            channel_detector: self.channel_detector,
            device: self.device.build()?,
            signal_frequency: Frequency::from_ghz(self.signal_ghz).map_err(config_err)?,
            pump_plan: self.pump_plan.build()?,
            output_plan: output_plan.clone(),
            pump_power_mw: self.pump_power_mw,
            crosstalk: self.crosstalk.build(output_plan.count() as usize)?,
            noise_rate_hz: self.noise_rate_hz,
            duration_s,
            loss_placement: self.loss_placement,
            parallel: self.parallel,
        };
        config.validate().map_err(config_err)?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct CoincidenceScenario {
    #[serde(flatten)]
    pub experiment: ExperimentSpec,
    pub active_pumps: Vec<u32>,
    #[serde(default)]
    pub export_events: bool,
}

#[derive(Debug, Clone, Deserialize)]
pub struct MatrixScenario {
    #[serde(flatten)]
    pub experiment: ExperimentSpec,
    /// Pump channels to sweep; defaults to the whole pump plan.
    #[serde(default)]
    pub pump_channels: Vec<u32>,
    #[serde(default = "default_true")]
    pub export_diagonal_histograms: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
pub struct RateSpec {
    pub tau_s_us: f64,
    pub tau_c_us: f64,
    pub round_period_us: f64,
}

impl RateSpec {
    pub fn build(&self) -> Result<RateConstraint, CliError> {
        let constraint = RateConstraint {
            tau_s_us: self.tau_s_us,
            tau_c_us: self.tau_c_us,
            round_period_us: self.round_period_us,
        };
        constraint.validate().map_err(config_err)?;
        Ok(constraint)
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct ScheduleScenario {
    pub requests_file: String,
    pub signal_ghz: i64,
    pub channel_plan: PlanSpec,
    pub rate: RateSpec,
    #[serde(default = "default_unit")]
    pub success_probability: f64,
    #[serde(default = "default_midpoints")]
    pub midpoints: u32,
    pub pump_channels: Vec<PumpChannelSpec>,
}

fn default_midpoints() -> u32 {
    1
}

#[derive(Debug, Clone, Deserialize)]
pub struct FitScenario {
    pub calibration_file: String,
}

/// Top-level scenario config with the `kind` discriminator.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScenarioConfig {
    EfficiencySweep(EfficiencySweepScenario),
    BandwidthScan(BandwidthScanScenario),
    Switching(SwitchingScenario),
    Coincidence(CoincidenceScenario),
    Matrix(MatrixScenario),
    Schedule(ScheduleScenario),
    Fit(FitScenario),
}

impl ScenarioConfig {
    pub fn kind(&self) -> ScenarioKind {
        match self {
            ScenarioConfig::EfficiencySweep(_) => ScenarioKind::EfficiencySweep,
            ScenarioConfig::BandwidthScan(_) => ScenarioKind::BandwidthScan,
            ScenarioConfig::Switching(_) => ScenarioKind::Switching,
            ScenarioConfig::Coincidence(_) => ScenarioKind::Coincidence,
            ScenarioConfig::Matrix(_) => ScenarioKind::Matrix,
            ScenarioConfig::Schedule(_) => ScenarioKind::Schedule,
            ScenarioConfig::Fit(_) => ScenarioKind::Fit,
        }
    }

    /// Seed carried inside the config file, when the scenario has one.
    pub fn config_seed(&self) -> Option<u64> {
        match self {
            ScenarioConfig::Coincidence(s) => s.experiment.seed,
            ScenarioConfig::Matrix(s) => s.experiment.seed,
            _ => None,
        }
    }
}
