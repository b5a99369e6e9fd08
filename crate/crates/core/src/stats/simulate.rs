//! Seeded, optionally trial-parallel Monte Carlo of one conversion run, and
//! the pump-sweep cross-correlation matrix built on top of it.
//!
//! Every emission window draws from its own counter-derived RNG stream, so
//! aggregation order cannot influence the result: parallel and sequential
//! execution produce bit-identical event streams for the same seed.

use super::histogram::{accumulate_histogram, estimate_cross_correlation_with};
use super::{
    DetectorId, Event, EventStream, SimulationConfig, StatsError, DEFAULT_PLATEAU_FACTOR,
};
use crate::fock::simultaneous_pump_guard;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const STREAM_WINDOWS: u64 = 1;
const STREAM_NOISE: u64 = 2;
const STREAM_PUMP: u64 = 3;
const WINDOW_CHUNK: u64 = 1 << 14;
const MAX_PAIRS_PER_WINDOW: u32 = 64;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based stream splitting: (master, stream, index) -> 64-bit seed.
fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(stream)) ^ splitmix64(index))
}

fn rng_for(master: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream, index))
}

/// Seed used for the run of `pump_channel` inside a sweep with master seed
/// `master_seed`; running [`simulate_run`] with it reproduces the sweep's
/// per-pump stream exactly.
pub fn pump_run_seed(master_seed: u64, pump_channel: u32) -> u64 {
    derive_seed(master_seed, STREAM_PUMP, pump_channel as u64)
}

struct RunContext<'a> {
    config: &'a SimulationConfig,
    seed: u64,
    ln_q: f64,
    herald_click_p: f64,
    path_p: f64,
    eta: f64,
    channel_click_p: f64,
    herald_jitter: Option<Normal<f64>>,
    channel_jitter: Option<Normal<f64>>,
    /// 0-based energy-matched output channel.
    true_output: usize,
    period_ps: i64,
}

fn jitter_ps(normal: &Option<Normal<f64>>, rng: &mut ChaCha8Rng) -> i64 {
    match normal {
        Some(n) => n.sample(rng).round() as i64,
        None => 0,
    }
}

fn sample_thermal(ln_q: f64, rng: &mut ChaCha8Rng) -> u32 {
    // P(N >= k) = q^k with q = mu / (1 + mu)
    let u: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
    let n = u.ln() / ln_q;
    if n >= MAX_PAIRS_PER_WINDOW as f64 {
        MAX_PAIRS_PER_WINDOW
    } else {
        n as u32
    }
}

fn simulate_window(ctx: &RunContext<'_>, window: u64, events: &mut Vec<Event>) {
    let mut rng = rng_for(ctx.seed, STREAM_WINDOWS, window);
    let pairs = sample_thermal(ctx.ln_q, &mut rng);
    if pairs == 0 {
        return;
    }
    let t_base = window as i64 * ctx.period_ps;
    let mut herald_clicked = false;
    let mut clicked_outputs: Vec<usize> = Vec::new();
    for _ in 0..pairs {
        // herald arm: the detector cannot resolve photon number, so at most
        // one click per window
        let herald_detected = rng.random::<f64>() < ctx.herald_click_p;
        if herald_detected && !herald_clicked {
            herald_clicked = true;
            events.push(Event {
                detector: DetectorId::Herald,
                time_ps: t_base + jitter_ps(&ctx.herald_jitter, &mut rng),
            });
        }

        // signal arm: transmission, conversion, DeMux routing, detection
        let survives = |rng: &mut ChaCha8Rng, p: f64| rng.random::<f64>() < p;
        let alive = match ctx.config.loss_placement {
            super::LossPlacement::BeforeConversion => {
                survives(&mut rng, ctx.path_p) && survives(&mut rng, ctx.eta)
            }
            super::LossPlacement::AfterConversion => {
                survives(&mut rng, ctx.eta) && survives(&mut rng, ctx.path_p)
            }
        };
        if !alive {
            continue;
        }
        let draw = rng.random::<f64>();
        let Some(output) = ctx.config.crosstalk.route(ctx.true_output, draw) else {
            continue;
        };
        if rng.random::<f64>() < ctx.channel_click_p && !clicked_outputs.contains(&output) {
            clicked_outputs.push(output);
            events.push(Event {
                detector: DetectorId::Output(output as u32 + 1),
                time_ps: t_base + jitter_ps(&ctx.channel_jitter, &mut rng),
            });
        }
    }
}

fn noise_events(
    seed: u64,
    detector: DetectorId,
    detector_index: u64,
    rate_hz: f64,
    duration_s: f64,
    duration_ps: i64,
) -> Vec<Event> {
    let lambda = rate_hz * duration_s;
    if lambda <= 0.0 {
        return Vec::new();
    }
    let mut rng = rng_for(seed, STREAM_NOISE, detector_index);
    let count = Poisson::new(lambda).expect("positive lambda").sample(&mut rng) as u64;
    (0..count)
        .map(|_| Event {
            detector,
            time_ps: rng.random_range(0..duration_ps),
        })
        .collect()
}

/// Run the heralded conversion experiment with the given active pumps.
///
/// Exactly one pump may be active per run; any other set is refused. The
/// result is fully reproducible from `(config, seed)`.
pub fn simulate_run(
    config: &SimulationConfig,
    active_pumps: &[u32],
    seed: u64,
) -> Result<EventStream, StatsError> {
    config.validate()?;
    let guard = simultaneous_pump_guard(active_pumps);
    let pump_channel = match guard {
        crate::fock::PumpGuard::Ok { channel } => channel,
        crate::fock::PumpGuard::Violation { channels } => {
            return Err(StatsError::PumpGuardViolation(channels))
        }
    };

    let period_ps = config
        .source
        .window_period_ps()
        .ok_or(StatsError::BadWindowRate(config.source.window_rate_hz))?;
    let n_windows = config.n_windows();
    if n_windows == 0 {
        return Err(StatsError::NonPositiveDuration(config.duration_s));
    }
    let duration_ps = n_windows as i64 * period_ps;
    let duration_s = duration_ps as f64 * 1e-12;

    let mu = config.source.mean_pairs_per_window;
    let eta = config.conversion_efficiency_for(pump_channel)?;
    let true_output = config.output_channel_for(pump_channel)? as usize - 1;
    let make_jitter = |sigma: f64| {
        (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("validated jitter"))
    };
    let ctx = RunContext {
        config,
        seed,
        ln_q: (mu / (1.0 + mu)).ln(),
        herald_click_p: config.source.herald_efficiency * config.herald_detector.efficiency,
        path_p: config.source.signal_path_efficiency,
        eta,
        channel_click_p: config.channel_detector.efficiency,
        herald_jitter: make_jitter(config.herald_detector.jitter_ps),
        channel_jitter: make_jitter(config.channel_detector.jitter_ps),
        true_output,
        period_ps,
    };

    // fixed-size window chunks; the chunk list (not the thread schedule)
    // defines the aggregation order
    let n_chunks = n_windows.div_ceil(WINDOW_CHUNK);
    let chunk_events = |chunk: u64| {
        let start = chunk * WINDOW_CHUNK;
        let stop = (start + WINDOW_CHUNK).min(n_windows);
        let mut events = Vec::new();
        for window in start..stop {
            simulate_window(&ctx, window, &mut events);
        }
        events
    };
    let mut events: Vec<Event> = if config.parallel {
        (0..n_chunks)
            .into_par_iter()
            .map(chunk_events)
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    } else {
        (0..n_chunks).flat_map(chunk_events).collect()
    };

    // uniform-in-time noise: Raman floor plus dark counts per output channel,
    // dark counts on the herald
    events.extend(noise_events(
        seed,
        DetectorId::Herald,
        0,
        config.herald_detector.dark_rate_hz,
        duration_s,
        duration_ps,
    ));
    for output in 1..=config.output_plan.count() {
        events.extend(noise_events(
            seed,
            DetectorId::Output(output),
            output as u64,
            config.noise_rate_hz + config.channel_detector.dark_rate_hz,
            duration_s,
            duration_ps,
        ));
    }

    Ok(EventStream::new(events, duration_ps, period_ps, n_windows))
}

/// Histogram and estimation settings for the pump sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramSettings {
    pub bin_width_ps: i64,
    pub span_ps: i64,
    pub window_ps: i64,
    pub plateau_factor: f64,
}

impl Default for HistogramSettings {
    fn default() -> Self {
        HistogramSettings {
            bin_width_ps: 34,
            span_ps: 5_000,
            window_ps: 476,
            plateau_factor: DEFAULT_PLATEAU_FACTOR,
        }
    }
}

/// Pump-sweep scenario: one simulation per listed pump channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub simulation: SimulationConfig,
    pub pump_channels: Vec<u32>,
    pub histogram: HistogramSettings,
}

/// One matrix cell: either an estimate or a counts-only lower bound when the
/// plateau carried no accidentals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CellEstimate {
    Estimate { g: f64, std_err: f64 },
    Undefined { window_counts: u64 },
}

/// Cross-correlation per (pump channel, output channel).
#[derive(Debug, Clone, PartialEq)]
pub struct CrossCorrMatrix {
    pub pump_channels: Vec<u32>,
    pub output_channels: Vec<u32>,
    cells: Vec<Vec<CellEstimate>>,
}

impl CrossCorrMatrix {
    pub fn cell(&self, pump_index: usize, output_index: usize) -> CellEstimate {
        self.cells[pump_index][output_index]
    }

    pub fn rows(&self) -> &[Vec<CellEstimate>] {
        &self.cells
    }
}

/// Sweep every configured pump channel and estimate g in every output
/// channel. Each pump gets its own counter-derived seed stream.
pub fn cross_corr_matrix(sweep: &SweepConfig, seed: u64) -> Result<CrossCorrMatrix, StatsError> {
    let output_channels: Vec<u32> = (1..=sweep.simulation.output_plan.count()).collect();
    let mut cells = Vec::with_capacity(sweep.pump_channels.len());
    for &pump in &sweep.pump_channels {
        let run_seed = pump_run_seed(seed, pump);
        let events = simulate_run(&sweep.simulation, &[pump], run_seed)?;
        let mut row = Vec::with_capacity(output_channels.len());
        for &output in &output_channels {
            let histogram = accumulate_histogram(
                &events,
                DetectorId::Herald,
                DetectorId::Output(output),
                sweep.histogram.bin_width_ps,
                sweep.histogram.span_ps,
            )?;
            let cell = match estimate_cross_correlation_with(
                &histogram,
                sweep.histogram.window_ps,
                sweep.histogram.plateau_factor,
            ) {
                Ok(estimate) => CellEstimate::Estimate {
                    g: estimate.g,
                    std_err: estimate.std_err,
                },
                Err(StatsError::ZeroAccidentals { window_counts }) => {
                    CellEstimate::Undefined { window_counts }
                }
                Err(other) => return Err(other),
            };
            row.push(cell);
        }
        cells.push(row);
    }
    Ok(CrossCorrMatrix {
        pump_channels: sweep.pump_channels.clone(),
        output_channels,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{ChannelPlan, ConversionDevice, EfficiencyLaw, Frequency, GridDirection};
    use crate::stats::{
        analytic_g, estimate_cross_correlation, ArmModel, CrosstalkMatrix, DetectorParams,
        LossPlacement, SourceParams,
    };

    /// The seven-pump configuration with a 384233 GHz signal: pump channels
    /// ascend from 189383 GHz while output channels descend from 194850 GHz.
    fn seven_channel_config(n_windows: u64) -> SimulationConfig {
        let mut calibration = std::collections::BTreeMap::new();
        for channel in 1..=7 {
            calibration.insert(channel, EfficiencyLaw::new(0.39, 0.013).unwrap());
        }
        let device = ConversionDevice::new(
            40.0,
            Frequency::from_ghz(189_200).unwrap(),
            2e-5,
            calibration,
        )
        .unwrap();
        let source = SourceParams::default();
        let period_ps = source.window_period_ps().unwrap();
        SimulationConfig {
            source,
            herald_detector: DetectorParams {
                efficiency: 1.0,
                dark_rate_hz: 0.0,
                jitter_ps: 30.0,
            },
            channel_detector: DetectorParams {
                efficiency: 1.0,
                dark_rate_hz: 0.0,
                jitter_ps: 30.0,
            },
            device,
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
            noise_rate_hz: 0.0,
            duration_s: n_windows as f64 * period_ps as f64 * 1e-12,
            loss_placement: LossPlacement::BeforeConversion,
            parallel: false,
        }
    }

    fn lossless(mut config: SimulationConfig) -> SimulationConfig {
        config.source.herald_efficiency = 1.0;
        config.source.signal_path_efficiency = 1.0;
        // unit conversion so the bare-source oracle applies
        let mut calibration = std::collections::BTreeMap::new();
        for channel in 1..=7 {
            calibration.insert(channel, EfficiencyLaw::new(1.0, 0.013).unwrap());
        }
        config.device = ConversionDevice::new(
            40.0,
            Frequency::from_ghz(189_200).unwrap(),
            2e-5,
            calibration,
        )
        .unwrap();
        config
    }

    #[test]
    fn identical_seeds_reproduce_the_stream_bit_exactly() {
        let config = seven_channel_config(20_000);
        let a = simulate_run(&config, &[4], 99).unwrap();
        let b = simulate_run(&config, &[4], 99).unwrap();
        assert_eq!(a, b);
        let c = simulate_run(&config, &[4], 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn parallel_execution_matches_sequential_bit_exactly() {
        let mut config = seven_channel_config(60_000);
        let sequential = simulate_run(&config, &[2], 7).unwrap();
        config.parallel = true;
        let parallel = simulate_run(&config, &[2], 7).unwrap();
        assert_eq!(sequential, parallel);
    }

    #[test]
    fn guard_refuses_multi_pump_rounds() {
        let config = seven_channel_config(100);
        assert!(matches!(
            simulate_run(&config, &[1, 2], 1),
            Err(StatsError::PumpGuardViolation(_))
        ));
        assert!(matches!(
            simulate_run(&config, &[], 1),
            Err(StatsError::PumpGuardViolation(_))
        ));
    }

    #[test]
    fn vacuum_source_yields_an_empty_stream() {
        let mut config = seven_channel_config(10_000);
        config.source.mean_pairs_per_window = 1e-9;
        let events = simulate_run(&config, &[1], 5).unwrap();
        assert!(events.events().is_empty());
        let histogram = accumulate_histogram(
            &events,
            DetectorId::Herald,
            DetectorId::Output(1),
            34,
            5_000,
        )
        .unwrap();
        assert!(estimate_cross_correlation(&histogram, 476).is_err());
    }

    #[test]
    fn diagonal_g_matches_the_thermal_oracle() {
        let config = lossless(seven_channel_config(200_000));
        let pump = 3u32;
        let output = config.output_channel_for(pump).unwrap();
        assert_eq!(output, 3);
        let events = simulate_run(&config, &[pump], 21).unwrap();
        let histogram = accumulate_histogram(
            &events,
            DetectorId::Herald,
            DetectorId::Output(output),
            34,
            5_000,
        )
        .unwrap();
        let estimate = estimate_cross_correlation(&histogram, 476).unwrap();
        let expected = 1.0 + 1.0 / config.source.mean_pairs_per_window;
        assert!(
            (estimate.g - expected).abs() < 3.0 * estimate.std_err,
            "g = {} +- {}, expected {expected}",
            estimate.g,
            estimate.std_err
        );
    }

    #[test]
    fn monte_carlo_agrees_with_the_analytic_oracle_across_mu() {
        // mu grid and two noise settings, all within 3 combined errors
        for &mu in &[0.02, 0.1, 0.3, 0.6, 1.0] {
            for &noise_hz in &[0.0, 2e6] {
                let mut config = lossless(seven_channel_config(120_000));
                config.source.mean_pairs_per_window = mu;
                config.source.herald_efficiency = 0.8;
                config.channel_detector.efficiency = 0.6;
                config.noise_rate_hz = noise_hz;
                let pump = 2u32;
                let events = simulate_run(&config, &[pump], 1234).unwrap();
                let histogram = accumulate_histogram(
                    &events,
                    DetectorId::Herald,
                    DetectorId::Output(config.output_channel_for(pump).unwrap()),
                    34,
                    5_000,
                )
                .unwrap();
                let estimate = estimate_cross_correlation(&histogram, 476).unwrap();
                let (herald_arm, channel_arm) = config.arm_models(pump).unwrap();
                let expected = analytic_g(mu, herald_arm, channel_arm).unwrap();
                assert!(
                    (estimate.g - expected).abs() < 3.0 * estimate.std_err.max(1e-3),
                    "mu={mu} noise={noise_hz}: g = {} +- {}, expected {expected}",
                    estimate.g,
                    estimate.std_err
                );
            }
        }
    }

    #[test]
    fn photons_stay_in_the_energy_matched_channel_without_crosstalk() {
        let config = seven_channel_config(50_000);
        for pump in [1u32, 4, 7] {
            let expected_output = config.output_channel_for(pump).unwrap();
            assert_eq!(expected_output, pump); // descending output plan
            let events = simulate_run(&config, &[pump], 77).unwrap();
            for output in 1..=7 {
                let singles = events.singles(DetectorId::Output(output));
                if output == expected_output {
                    assert!(singles > 0);
                } else {
                    assert_eq!(singles, 0, "pump {pump} leaked into output {output}");
                }
            }
        }
    }

    #[test]
    fn neighbor_crosstalk_raises_neighbor_g() {
        let mut config = lossless(seven_channel_config(150_000));
        config.crosstalk = CrosstalkMatrix::with_neighbor_leak(7, 0.1).unwrap();
        let sweep = SweepConfig {
            simulation: config,
            pump_channels: vec![4],
            histogram: HistogramSettings::default(),
        };
        let matrix = cross_corr_matrix(&sweep, 31).unwrap();
        for neighbor in [2usize, 4] {
            match matrix.cell(0, neighbor) {
                CellEstimate::Estimate { g, .. } => {
                    assert!(g > 2.0, "neighbor g = {g}")
                }
                CellEstimate::Undefined { .. } => panic!("neighbor channel saw no accidentals"),
            }
        }
    }

    #[test]
    fn loss_placement_is_observationally_irrelevant() {
        let mut config = lossless(seven_channel_config(150_000));
        config.source.signal_path_efficiency = 0.5;
        let run = |placement, seed| {
            let mut c = config.clone();
            c.loss_placement = placement;
            let events = simulate_run(&c, &[3], seed).unwrap();
            let histogram = accumulate_histogram(
                &events,
                DetectorId::Herald,
                DetectorId::Output(3),
                34,
                5_000,
            )
            .unwrap();
            estimate_cross_correlation(&histogram, 476).unwrap()
        };
        let before = run(LossPlacement::BeforeConversion, 41);
        let after = run(LossPlacement::AfterConversion, 42);
        let combined = (before.std_err.powi(2) + after.std_err.powi(2)).sqrt();
        assert!(
            (before.g - after.g).abs() < 3.0 * combined,
            "before {} +- {}, after {} +- {}",
            before.g,
            before.std_err,
            after.g,
            after.std_err
        );
    }

    #[test]
    fn singles_counters_match_raw_event_counts() {
        let config = seven_channel_config(30_000);
        let events = simulate_run(&config, &[5], 3).unwrap();
        let histogram = accumulate_histogram(
            &events,
            DetectorId::Herald,
            DetectorId::Output(5),
            34,
            5_000,
        )
        .unwrap();
        assert_eq!(histogram.herald_singles, events.singles(DetectorId::Herald));
        assert_eq!(
            histogram.channel_singles,
            events.singles(DetectorId::Output(5))
        );
        assert!(histogram.total_counts() <= histogram.herald_singles * histogram.channel_singles);
    }

    #[test]
    fn matrix_diagonal_dominates_without_crosstalk() {
        let config = lossless(seven_channel_config(60_000));
        let sweep = SweepConfig {
            simulation: config,
            pump_channels: (1..=7).collect(),
            histogram: HistogramSettings::default(),
        };
        let matrix = cross_corr_matrix(&sweep, 17).unwrap();
        for (i, _) in matrix.pump_channels.iter().enumerate() {
            match matrix.cell(i, i) {
                CellEstimate::Estimate { g, .. } => assert!(g > 2.0, "diagonal g = {g}"),
                CellEstimate::Undefined { .. } => panic!("diagonal cell undefined"),
            }
            for j in 0..matrix.output_channels.len() {
                if i != j {
                    match matrix.cell(i, j) {
                        // no photons and no noise: off-diagonals must be
                        // flagged, not fabricated
                        CellEstimate::Undefined { window_counts } => {
                            assert_eq!(window_counts, 0)
                        }
                        CellEstimate::Estimate { g, .. } => {
                            panic!("off-diagonal ({i}, {j}) estimated g = {g}")
                        }
                    }
                }
            }
        }
    }
}
