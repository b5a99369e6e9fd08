//! Simulation and analysis toolkit for channel-selective quantum frequency
//! conversion on a DWDM grid.
//!
//! The crate is organized around the stages of a conversion link:
//!
//! - [`spectral`]: grid arithmetic, the pump-power efficiency law, the
//!   phase-matching envelope, and calibration fitting
//! - [`fock`]: the exact two-mode transform of one conversion round
//! - [`pump`]: pump switching waveforms and their timing analysis
//! - [`stats`]: seeded Monte Carlo of heralded-photon conversion runs with
//!   coincidence and cross-correlation estimation
//! - [`scheduler`]: round-based channel assignment for multiparty links
//!
//! Everything is deterministic: stochastic components consume an explicit
//! seed and reproduce bit-identical results, including under parallel
//! execution.

pub mod fock;
pub mod pump;
pub mod scheduler;
pub mod spectral;
pub mod stats;

pub use fock::{
    apply_qfc, conversion_probability, mode_transform_coeffs, simultaneous_pump_guard,
    theta_from_power, PumpGuard, QfcSetting, TwoModeFockState,
};
pub use pump::{
    edfa_transient_factor, instantaneous_efficiency, measure_rise_fall, min_switch_interval,
    render_waveform, EdfaTransient, PumpChannelConfig, PumpWaveform, SwitchEvent, SwitchSchedule,
};
pub use scheduler::{
    effective_rate, feasibility_report, schedule, validate_schedule, FeasibilityReport,
    PartyLinkRequest, RateConstraint, RoundAssignment,
};
pub use spectral::{
    conversion_efficiency, converted_frequency, fit_efficiency_curve, optimal_pump_power,
    selectable_channel_count, ChannelPlan, ConversionDevice, EfficiencyCurve, EfficiencyLaw,
    EfficiencySample, Frequency, GridDirection,
};
pub use stats::{
    accumulate_histogram, analytic_g, cross_corr_matrix, estimate_cross_correlation, simulate_run,
    ArmModel, CoincidenceHistogram, CrossCorrMatrix, CrosstalkMatrix, DetectorId, DetectorParams,
    Event, EventStream, SimulationConfig, SourceParams, SweepConfig,
};
