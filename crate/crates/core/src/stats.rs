//! Seeded Monte Carlo of channel-selective conversion of a heralded photon:
//! thermal pair source, conversion with per-channel efficiency, DeMux
//! crosstalk, flat noise, time-tagged detection, coincidence histograms, and
//! cross-correlation estimation with a closed-form oracle.

use crate::spectral::{ChannelPlan, ConversionDevice, Frequency, SpectralError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

mod analytic;
mod histogram;
mod simulate;

pub use analytic::{analytic_g, ArmModel};
pub use histogram::{
    accumulate_histogram, estimate_cross_correlation, estimate_cross_correlation_with,
    CoincidenceHistogram, GEstimate, DEFAULT_PLATEAU_FACTOR,
};
pub use simulate::{
    cross_corr_matrix, pump_run_seed, simulate_run, CellEstimate, CrossCorrMatrix,
    HistogramSettings, SweepConfig,
};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("mean pairs per window must be positive, got {0}")]
    MuOutOfRange(f64),
    #[error("{what} must lie in [0, 1], got {value}")]
    EfficiencyOutOfRange { what: &'static str, value: f64 },
    #[error("window rate must be positive and resolve to >= 1 ps, got {0} Hz")]
    BadWindowRate(f64),
    #[error("dark/noise rate must be nonnegative, got {0} Hz")]
    NegativeRate(f64),
    #[error("jitter must be nonnegative, got {0} ps")]
    NegativeJitter(f64),
    #[error("run duration must be positive, got {0} s")]
    NonPositiveDuration(f64),
    #[error("crosstalk matrix must be square with size {expected}, got {got}")]
    CrosstalkShape { expected: usize, got: usize },
    #[error("crosstalk column {column} invalid: {message}")]
    CrosstalkColumn { column: usize, message: String },
    #[error("conversion round refused: active pumps {0:?} violate the one-pump rule")]
    PumpGuardViolation(Vec<u32>),
    #[error("pump channel {pump_channel}: converted frequency {converted_ghz} GHz is not on the output plan")]
    EnergyMismatch { pump_channel: u32, converted_ghz: i64 },
    #[error("histogram bin width and span must be positive (bin {bin_width_ps} ps, span {span_ps} ps)")]
    BadHistogramParams { bin_width_ps: i64, span_ps: i64 },
    #[error("estimation window must be positive and fit the histogram span, got {0} ps")]
    BadWindow(i64),
    #[error("only {got} off-peak bins available, need at least {need} for the accidental estimate")]
    TooFewPlateauBins { got: usize, need: usize },
    #[error("zero accidentals in the plateau; g is undefined (window counts {window_counts} give only a lower bound)")]
    ZeroAccidentals { window_counts: u64 },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Heralded pair source: thermal pair-number statistics per emission window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceParams {
    /// Mean pair number per window; g = 1 + 1/mu for the bare source.
    pub mean_pairs_per_window: f64,
    pub herald_efficiency: f64,
    pub signal_path_efficiency: f64,
    /// Pair-emission windows per second. The default window tiles time at
    /// the coincidence-window width so plateau normalization is unbiased.
    pub window_rate_hz: f64,
}

/// Default pair-emission window period in ps, equal to the default
/// cross-correlation window.
pub const DEFAULT_WINDOW_PERIOD_PS: i64 = 476;

impl Default for SourceParams {
    fn default() -> Self {
        SourceParams {
            mean_pairs_per_window: 0.0581,
            herald_efficiency: 1.0,
            signal_path_efficiency: 1.0,
            window_rate_hz: 1e12 / DEFAULT_WINDOW_PERIOD_PS as f64,
        }
    }
}

impl SourceParams {
    pub fn validate(&self) -> Result<(), StatsError> {
        if !(self.mean_pairs_per_window > 0.0) {
            return Err(StatsError::MuOutOfRange(self.mean_pairs_per_window));
        }
        for (what, value) in [
            ("herald_efficiency", self.herald_efficiency),
            ("signal_path_efficiency", self.signal_path_efficiency),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(StatsError::EfficiencyOutOfRange { what, value });
            }
        }
        if self.window_period_ps().is_none() {
            return Err(StatsError::BadWindowRate(self.window_rate_hz));
        }
        Ok(())
    }

    /// Window period rounded to integer picoseconds.
    pub fn window_period_ps(&self) -> Option<i64> {
        if !(self.window_rate_hz > 0.0) {
            return None;
        }
        let period = (1e12 / self.window_rate_hz).round();
        (period >= 1.0 && period <= 1e15).then_some(period as i64)
    }
}

/// Single-photon detector: efficiency, dark counts, Gaussian timing jitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    pub efficiency: f64,
    pub dark_rate_hz: f64,
    pub jitter_ps: f64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        DetectorParams {
            efficiency: 0.7,
            dark_rate_hz: 100.0,
            jitter_ps: 30.0,
        }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<(), StatsError> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(StatsError::EfficiencyOutOfRange {
                what: "detector efficiency",
                value: self.efficiency,
            });
        }
        if self.dark_rate_hz < 0.0 {
            return Err(StatsError::NegativeRate(self.dark_rate_hz));
        }
        if self.jitter_ps < 0.0 {
            return Err(StatsError::NegativeJitter(self.jitter_ps));
        }
        Ok(())
    }
}

/// DeMux routing: `leak[output][source]` is the probability that a photon in
/// `source` registers at `output`. Column residuals are loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosstalkMatrix {
    leak: Vec<Vec<f64>>,
}

impl CrosstalkMatrix {
    pub fn new(leak: Vec<Vec<f64>>) -> Result<Self, StatsError> {
        let n = leak.len();
        if leak.iter().any(|row| row.len() != n) {
            let got = leak.iter().map(Vec::len).max().unwrap_or(0);
            return Err(StatsError::CrosstalkShape { expected: n, got });
        }
        for column in 0..n {
            let mut sum = 0.0;
            for row in &leak {
                let p = row[column];
                if !(0.0..=1.0).contains(&p) {
                    return Err(StatsError::CrosstalkColumn {
                        column,
                        message: format!("entry {p} outside [0, 1]"),
                    });
                }
                sum += p;
            }
            if sum > 1.0 + 1e-9 {
                return Err(StatsError::CrosstalkColumn {
                    column,
                    message: format!("column sums to {sum} > 1"),
                });
            }
            let diagonal = leak[column][column];
            if leak.iter().enumerate().any(|(r, row)| r != column && row[column] > diagonal) {
                return Err(StatsError::CrosstalkColumn {
                    column,
                    message: "off-diagonal leak exceeds the diagonal".into(),
                });
            }
        }
        Ok(CrosstalkMatrix { leak })
    }

    /// Perfect DeMux: every photon lands in its own channel.
    pub fn identity(n: usize) -> Self {
        let leak = (0..n)
            .map(|r| (0..n).map(|c| if r == c { 1.0 } else { 0.0 }).collect())
            .collect();
        CrosstalkMatrix { leak }
    }

    /// Leak a fraction of each channel into its nearest neighbors.
    pub fn with_neighbor_leak(n: usize, fraction: f64) -> Result<Self, StatsError> {
        let mut leak = vec![vec![0.0; n]; n];
        for column in 0..n {
            let mut off = 0.0;
            if column > 0 {
                leak[column - 1][column] = fraction;
                off += fraction;
            }
            if column + 1 < n {
                leak[column + 1][column] = fraction;
                off += fraction;
            }
            leak[column][column] = 1.0 - off;
        }
        CrosstalkMatrix::new(leak)
    }

    pub fn size(&self) -> usize {
        self.leak.len()
    }

    pub fn leak(&self, output: usize, source: usize) -> f64 {
        self.leak[output][source]
    }

    /// Route a photon in `source` (0-based) using a uniform draw in [0, 1).
    /// Returns the 0-based output, or `None` when the photon is lost.
    pub fn route(&self, source: usize, draw: f64) -> Option<usize> {
        let mut cumulative = 0.0;
        for (output, row) in self.leak.iter().enumerate() {
            cumulative += row[source];
            if draw < cumulative {
                return Some(output);
            }
        }
        None
    }
}

/// Where the fitted-peak transmission loss is drawn in the Monte Carlo; the
/// two placements are observationally identical for the estimators here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossPlacement {
    #[default]
    BeforeConversion,
    AfterConversion,
}

/// Identifies a detection channel in the event stream. The herald detector
/// exports as id 0 and output channel j as id j.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DetectorId {
    Herald,
    Output(u32),
}

impl DetectorId {
    pub fn export_id(&self) -> u32 {
        match self {
            DetectorId::Herald => 0,
            DetectorId::Output(j) => *j,
        }
    }
}

/// One time-tagged detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub detector: DetectorId,
    pub time_ps: i64,
}

/// Time-sorted detections from one run.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    events: Vec<Event>,
    duration_ps: i64,
    window_period_ps: i64,
    n_windows: u64,
}

impl EventStream {
    pub(crate) fn new(
        mut events: Vec<Event>,
        duration_ps: i64,
        window_period_ps: i64,
        n_windows: u64,
    ) -> Self {
        events.sort_by_key(|e| (e.time_ps, e.detector.export_id()));
        EventStream {
            events,
            duration_ps,
            window_period_ps,
            n_windows,
        }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn duration_ps(&self) -> i64 {
        self.duration_ps
    }

    pub fn duration_s(&self) -> f64 {
        self.duration_ps as f64 * 1e-12
    }

    pub fn window_period_ps(&self) -> i64 {
        self.window_period_ps
    }

    pub fn n_windows(&self) -> u64 {
        self.n_windows
    }

    pub fn singles(&self, detector: DetectorId) -> u64 {
        self.events.iter().filter(|e| e.detector == detector).count() as u64
    }

    pub fn times(&self, detector: DetectorId) -> Vec<i64> {
        self.events
            .iter()
            .filter(|e| e.detector == detector)
            .map(|e| e.time_ps)
            .collect()
    }
}

/// Full description of one conversion run of the heralded-photon experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub source: SourceParams,
    pub herald_detector: DetectorParams,
    pub channel_detector: DetectorParams,
    pub device: ConversionDevice,
    pub signal_frequency: Frequency,
    pub pump_plan: ChannelPlan,
    pub output_plan: ChannelPlan,
    /// Pump power during the run; `None` selects each channel's optimum.
    pub pump_power_mw: Option<f64>,
    pub crosstalk: CrosstalkMatrix,
    /// Flat noise rate per output channel (Raman floor), on top of dark counts.
    pub noise_rate_hz: f64,
    pub duration_s: f64,
    pub loss_placement: LossPlacement,
    /// Evaluate emission windows in parallel; results are bit-identical to
    /// the sequential path.
    pub parallel: bool,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), StatsError> {
        self.source.validate()?;
        self.herald_detector.validate()?;
        self.channel_detector.validate()?;
        if self.noise_rate_hz < 0.0 {
            return Err(StatsError::NegativeRate(self.noise_rate_hz));
        }
        if !(self.duration_s > 0.0) {
            return Err(StatsError::NonPositiveDuration(self.duration_s));
        }
        if self.crosstalk.size() != self.output_plan.count() as usize {
            return Err(StatsError::CrosstalkShape {
                expected: self.output_plan.count() as usize,
                got: self.crosstalk.size(),
            });
        }
        Ok(())
    }

    /// Output channel that energy conservation assigns to `pump_channel`.
    pub fn output_channel_for(&self, pump_channel: u32) -> Result<u32, StatsError> {
        let pump = self.pump_plan.frequency(pump_channel)?;
        let converted = crate::spectral::converted_frequency(self.signal_frequency, pump)?;
        self.output_plan
            .channel_of(converted)
            .ok_or(StatsError::EnergyMismatch {
                pump_channel,
                converted_ghz: converted.ghz(),
            })
    }

    /// Conversion efficiency at the run's pump power for `pump_channel`.
    pub fn conversion_efficiency_for(&self, pump_channel: u32) -> Result<f64, StatsError> {
        let law = self.device.law(pump_channel)?;
        let power = self.pump_power_mw.unwrap_or_else(|| law.optimal_power_mw());
        Ok(law.efficiency(power)?)
    }

    pub fn n_windows(&self) -> u64 {
        let rate = self.source.window_rate_hz;
        (self.duration_s * rate).round().max(0.0) as u64
    }

    /// Closed-form arm models for the energy-matched output channel,
    /// feeding [`analytic_g`].
    pub fn arm_models(&self, pump_channel: u32) -> Result<(ArmModel, ArmModel), StatsError> {
        let period_s = self.source.window_period_ps().ok_or(StatsError::BadWindowRate(
            self.source.window_rate_hz,
        ))? as f64
            * 1e-12;
        let output = self.output_channel_for(pump_channel)?;
        let eta = self.conversion_efficiency_for(pump_channel)?;
        let herald = ArmModel {
            efficiency: self.source.herald_efficiency * self.herald_detector.efficiency,
            noise_per_window: self.herald_detector.dark_rate_hz * period_s,
        };
        let diagonal_leak = self
            .crosstalk
            .leak(output as usize - 1, output as usize - 1);
        let channel = ArmModel {
            efficiency: self.source.signal_path_efficiency
                * eta
                * diagonal_leak
                * self.channel_detector.efficiency,
            noise_per_window: (self.noise_rate_hz + self.channel_detector.dark_rate_hz) * period_s,
        };
        Ok((herald, channel))
    }
}
