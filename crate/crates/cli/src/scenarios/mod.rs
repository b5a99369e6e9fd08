//! One runner per scenario kind. Each writes its CSV tables through the
//! context's output writer; the library layer appends the manifest.

use crate::config::ScenarioConfig;
use crate::{CliError, RunContext};
use csqfc_core::stats::StatsError;

mod coincidence;
mod fit;
mod matrix;
mod scan;
mod schedule;
mod sweep;
mod switching;

pub fn dispatch(config: &ScenarioConfig, context: &mut RunContext) -> Result<(), CliError> {
    match config {
        ScenarioConfig::EfficiencySweep(s) => sweep::run(s, context),
        ScenarioConfig::BandwidthScan(s) => scan::run(s, context),
        ScenarioConfig::Switching(s) => switching::run(s, context),
        ScenarioConfig::Coincidence(s) => coincidence::run(s, context),
        ScenarioConfig::Matrix(s) => matrix::run(s, context),
        ScenarioConfig::Schedule(s) => schedule::run(s, context),
        ScenarioConfig::Fit(s) => fit::run(s, context),
    }
}

/// Runtime failures of the Monte Carlo map to infeasibility (exit 3); bad
/// parameters are config errors (exit 2).
pub(crate) fn stats_err(err: StatsError) -> CliError {
    match err {
        StatsError::PumpGuardViolation(_)
        | StatsError::ZeroAccidentals { .. }
        | StatsError::TooFewPlateauBins { .. } => CliError::Infeasible(err.to_string()),
        other => CliError::Config(other.to_string()),
    }
}
