//! Time-domain model of the pump preparation chain: switching schedules,
//! 10-90% edge shaping through the shutters, the EDFA turn-on transient, and
//! the instantaneous conversion efficiency that the pump waveform drives.

use crate::spectral::{conversion_efficiency, ConversionDevice, Frequency, SpectralError};
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PumpError {
    #[error("steady power must lie in (0, 500] mW, got {0}")]
    SteadyPowerOutOfRange(f64),
    #[error("shutter rise/fall must be positive, got {0} us")]
    NonPositiveRiseFall(f64),
    #[error("schedule event times must be strictly increasing within the horizon")]
    UnorderedEvents,
    #[error("schedule references unknown pump channel {0}")]
    UnknownChannel(u32),
    #[error("duplicate pump channel {0} in configuration")]
    DuplicateChannel(u32),
    #[error("sample step {dt_us} us too coarse; need <= {max_us} us to resolve the edges")]
    DtTooCoarse { dt_us: f64, max_us: f64 },
    #[error("EDFA decay time must be positive, got {0} us")]
    NonPositiveDecay(f64),
    #[error("waveform has no column for channel {0}")]
    ChannelNotInWaveform(u32),
    #[error("no complete 10-90% edge found for channel {0}")]
    NoCompleteEdge(u32),
    #[error("time {t_us} us outside the waveform horizon {horizon_us} us")]
    OutsideHorizon { t_us: f64, horizon_us: f64 },
    #[error("no pump channels configured")]
    NoChannels,
    #[error("waveform columns and sample lengths disagree")]
    ShapeMismatch,
    #[error("schedule line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// One pump laser behind its shutter, as seen after the EDFA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpChannelConfig {
    pub channel_index: u32,
    pub frequency: Frequency,
    pub steady_power_mw: f64,
    pub shutter_rise_fall_us: f64,
}

/// EDFA ceiling after amplification.
pub const MAX_STEADY_POWER_MW: f64 = 500.0;

impl PumpChannelConfig {
    pub fn validate(&self) -> Result<(), PumpError> {
        if !(self.steady_power_mw > 0.0 && self.steady_power_mw <= MAX_STEADY_POWER_MW) {
            return Err(PumpError::SteadyPowerOutOfRange(self.steady_power_mw));
        }
        if self.shutter_rise_fall_us <= 0.0 {
            return Err(PumpError::NonPositiveRiseFall(self.shutter_rise_fall_us));
        }
        Ok(())
    }
}

/// Single-exponential overshoot released by the EDFA when a channel turns on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdfaTransient {
    pub overshoot: f64,
    pub decay_us: f64,
}

impl Default for EdfaTransient {
    fn default() -> Self {
        EdfaTransient {
            overshoot: 0.5,
            decay_us: 1.0,
        }
    }
}

impl EdfaTransient {
    pub fn disabled() -> Self {
        EdfaTransient {
            overshoot: 0.0,
            decay_us: 1.0,
        }
    }
}

/// 1 + overshoot * exp(-t / decay); approaches 1 at steady state.
pub fn edfa_transient_factor(
    t_since_on_us: f64,
    overshoot: f64,
    decay_us: f64,
) -> Result<f64, PumpError> {
    if decay_us <= 0.0 {
        return Err(PumpError::NonPositiveDecay(decay_us));
    }
    let t = t_since_on_us.max(0.0);
    Ok(1.0 + overshoot * (-t / decay_us).exp())
}

/// A timed sequence of pump-channel selections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchSchedule {
    events: Vec<SwitchEvent>,
    horizon_us: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchEvent {
    pub time_us: f64,
    pub target_channel: u32,
}

impl SwitchSchedule {
    pub fn new(events: Vec<SwitchEvent>, horizon_us: f64) -> Result<Self, PumpError> {
        if horizon_us <= 0.0 {
            return Err(PumpError::UnorderedEvents);
        }
        for pair in events.windows(2) {
            if pair[1].time_us <= pair[0].time_us {
                return Err(PumpError::UnorderedEvents);
            }
        }
        if events
            .iter()
            .any(|e| e.time_us < 0.0 || e.time_us >= horizon_us)
        {
            return Err(PumpError::UnorderedEvents);
        }
        Ok(SwitchSchedule { events, horizon_us })
    }

    /// Round-robin over `channels` every `interval_us` from t = 0.
    pub fn alternating(
        channels: &[u32],
        interval_us: f64,
        horizon_us: f64,
    ) -> Result<Self, PumpError> {
        let mut events = Vec::new();
        let mut t = 0.0;
        let mut i = 0usize;
        while t < horizon_us {
            events.push(SwitchEvent {
                time_us: t,
                target_channel: channels[i % channels.len()],
            });
            i += 1;
            t = interval_us * i as f64;
        }
        SwitchSchedule::new(events, horizon_us)
    }

    pub fn events(&self) -> &[SwitchEvent] {
        &self.events
    }

    pub fn horizon_us(&self) -> f64 {
        self.horizon_us
    }

    /// Smallest time between consecutive selections, compared against the
    /// shutter rise/fall when judging schedule feasibility.
    pub fn min_gap_us(&self) -> Option<f64> {
        self.events
            .windows(2)
            .map(|p| p[1].time_us - p[0].time_us)
            .min_by(f64::total_cmp)
    }
}

/// Parse schedule rows `time_us,target_channel`, `#` comments allowed.
pub fn parse_switch_schedule(text: &str, horizon_us: f64) -> Result<SwitchSchedule, PumpError> {
    let mut events = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let (time, target) = match (fields.next(), fields.next(), fields.next()) {
            (Some(t), Some(c), None) => (t, c),
            _ => {
                return Err(PumpError::Parse {
                    line: lineno + 1,
                    message: "expected `time_us,target_channel`".into(),
                })
            }
        };
        let time_us: f64 = time.parse().map_err(|_| PumpError::Parse {
            line: lineno + 1,
            message: format!("invalid time_us: {time:?}"),
        })?;
        let target_channel: u32 = target.parse().map_err(|_| PumpError::Parse {
            line: lineno + 1,
            message: format!("invalid target_channel: {target:?}"),
        })?;
        events.push(SwitchEvent {
            time_us,
            target_channel,
        });
    }
    SwitchSchedule::new(events, horizon_us)
}

/// Sampled per-channel pump power on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PumpWaveform {
    dt_us: f64,
    channels: Vec<u32>,
    steady_mw: Vec<f64>,
    samples: Vec<Vec<f64>>,
}

impl PumpWaveform {
    /// Assemble a waveform from raw columns (mostly useful in tests and for
    /// ingesting externally recorded traces).
    pub fn from_samples(
        dt_us: f64,
        channels: Vec<u32>,
        steady_mw: Vec<f64>,
        samples: Vec<Vec<f64>>,
    ) -> Result<Self, PumpError> {
        if channels.len() != samples.len() || channels.len() != steady_mw.len() {
            return Err(PumpError::ShapeMismatch);
        }
        let len = samples.first().map_or(0, Vec::len);
        if samples.iter().any(|col| col.len() != len) {
            return Err(PumpError::ShapeMismatch);
        }
        Ok(PumpWaveform {
            dt_us,
            channels,
            steady_mw,
            samples,
        })
    }

    pub fn dt_us(&self) -> f64 {
        self.dt_us
    }

    pub fn n_samples(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn horizon_us(&self) -> f64 {
        self.n_samples().saturating_sub(1) as f64 * self.dt_us
    }

    pub fn channels(&self) -> &[u32] {
        &self.channels
    }

    fn column_index(&self, channel: u32) -> Result<usize, PumpError> {
        self.channels
            .iter()
            .position(|&c| c == channel)
            .ok_or(PumpError::ChannelNotInWaveform(channel))
    }

    pub fn column(&self, channel: u32) -> Result<&[f64], PumpError> {
        Ok(&self.samples[self.column_index(channel)?])
    }

    pub fn steady_power_mw(&self, channel: u32) -> Result<f64, PumpError> {
        Ok(self.steady_mw[self.column_index(channel)?])
    }

    /// Linearly interpolated power of `channel` at time `t_us`.
    pub fn power_at(&self, channel: u32, t_us: f64) -> Result<f64, PumpError> {
        let col = self.column(channel)?;
        let horizon = self.horizon_us();
        if col.is_empty() || t_us < 0.0 || t_us > horizon {
            return Err(PumpError::OutsideHorizon {
                t_us,
                horizon_us: horizon,
            });
        }
        let pos = t_us / self.dt_us;
        let i = (pos.floor() as usize).min(col.len() - 1);
        if i + 1 >= col.len() {
            return Ok(col[i]);
        }
        let frac = pos - i as f64;
        Ok(col[i] * (1.0 - frac) + col[i + 1] * frac)
    }

    /// Channels whose power exceeds `fraction` of their steady level at `t_us`.
    pub fn active_channels_at(&self, t_us: f64, fraction: f64) -> Result<Vec<u32>, PumpError> {
        let mut active = Vec::new();
        for (&channel, &steady) in self.channels.iter().zip(&self.steady_mw) {
            if self.power_at(channel, t_us)? > fraction * steady {
                active.push(channel);
            }
        }
        Ok(active)
    }
}

fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * (3.0 - 2.0 * u)
}

/// Fraction of a smoothstep edge spent between the 10% and 90% crossings.
/// The full edge duration is rise_fall / this.
pub fn smoothstep_10_90_fraction() -> f64 {
    static FRACTION: OnceLock<f64> = OnceLock::new();
    *FRACTION.get_or_init(|| {
        let mut lo = 0.0f64;
        let mut hi = 0.5f64;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if smoothstep(mid) < 0.1 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        1.0 - 2.0 * lo
    })
}

#[derive(Debug, Clone, Copy)]
struct EdgeSegment {
    start_us: f64,
    from: f64,
    to: f64,
    last_on_us: f64,
}

/// Render the per-channel pump powers driven by a switching schedule.
///
/// Each channel follows a smoothstep edge (scaled so the 10-90% crossing
/// matches its configured duration) toward the steady power when selected and
/// toward zero when deselected, multiplied by the EDFA transient factor.
pub fn render_waveform(
    configs: &[PumpChannelConfig],
    schedule: &SwitchSchedule,
    dt_us: f64,
    edfa: &EdfaTransient,
) -> Result<PumpWaveform, PumpError> {
    if configs.is_empty() {
        return Err(PumpError::NoChannels);
    }
    for config in configs {
        config.validate()?;
    }
    if edfa.decay_us <= 0.0 {
        return Err(PumpError::NonPositiveDecay(edfa.decay_us));
    }
    let mut seen = Vec::new();
    for config in configs {
        if seen.contains(&config.channel_index) {
            return Err(PumpError::DuplicateChannel(config.channel_index));
        }
        seen.push(config.channel_index);
    }
    let finest = configs
        .iter()
        .map(|c| c.shutter_rise_fall_us)
        .fold(f64::INFINITY, f64::min);
    if dt_us <= 0.0 || dt_us > finest / 10.0 {
        return Err(PumpError::DtTooCoarse {
            dt_us,
            max_us: finest / 10.0,
        });
    }
    for event in schedule.events() {
        if !seen.contains(&event.target_channel) {
            return Err(PumpError::UnknownChannel(event.target_channel));
        }
    }

    let edge_scale = smoothstep_10_90_fraction();
    // per-channel piecewise edges; the `from` value honors interrupted edges
    let mut segments: Vec<Vec<EdgeSegment>> = configs
        .iter()
        .map(|_| {
            vec![EdgeSegment {
                start_us: 0.0,
                from: 0.0,
                to: 0.0,
                last_on_us: f64::NEG_INFINITY,
            }]
        })
        .collect();
    let fraction_at = |segs: &[EdgeSegment], edge_us: f64, t: f64| -> f64 {
        let seg = segs
            .iter()
            .rev()
            .find(|s| s.start_us <= t)
            .expect("initial segment covers t = 0");
        let u = (t - seg.start_us) / edge_us;
        seg.from + (seg.to - seg.from) * smoothstep(u)
    };
    for event in schedule.events() {
        for (config, segs) in configs.iter().zip(segments.iter_mut()) {
            let edge_us = config.shutter_rise_fall_us / edge_scale;
            let selected = config.channel_index == event.target_channel;
            let from = fraction_at(segs, edge_us, event.time_us);
            let to = if selected { 1.0 } else { 0.0 };
            let last_on_us = if selected {
                event.time_us
            } else {
                segs.last().expect("nonempty").last_on_us
            };
            segs.push(EdgeSegment {
                start_us: event.time_us,
                from,
                to,
                last_on_us,
            });
        }
    }

    let n_samples = (schedule.horizon_us() / dt_us).floor() as usize + 1;
    let mut samples = Vec::with_capacity(configs.len());
    let mut steady = Vec::with_capacity(configs.len());
    for (config, segs) in configs.iter().zip(&segments) {
        let edge_us = config.shutter_rise_fall_us / edge_scale;
        let mut column = Vec::with_capacity(n_samples);
        let mut seg_idx = 0usize;
        for i in 0..n_samples {
            let t = i as f64 * dt_us;
            while seg_idx + 1 < segs.len() && segs[seg_idx + 1].start_us <= t {
                seg_idx += 1;
            }
            let seg = segs[seg_idx];
            let u = (t - seg.start_us) / edge_us;
            let fraction = seg.from + (seg.to - seg.from) * smoothstep(u);
            let transient = if seg.last_on_us.is_finite() {
                1.0 + edfa.overshoot * (-(t - seg.last_on_us) / edfa.decay_us).exp()
            } else {
                1.0
            };
            column.push(config.steady_power_mw * fraction * transient);
        }
        samples.push(column);
        steady.push(config.steady_power_mw);
    }
    PumpWaveform::from_samples(
        dt_us,
        configs.iter().map(|c| c.channel_index).collect(),
        steady,
        samples,
    )
}

fn crossing_time(t0: f64, dt: f64, v0: f64, v1: f64, threshold: f64) -> f64 {
    t0 + dt * (threshold - v0) / (v1 - v0)
}

/// 10->90% rise and 90->10% fall times of the first complete edges, linearly
/// interpolated between samples.
pub fn measure_rise_fall(waveform: &PumpWaveform, channel: u32) -> Result<(f64, f64), PumpError> {
    let column = waveform.column(channel)?;
    let steady = waveform.steady_power_mw(channel)?;
    let (low, high) = (0.1 * steady, 0.9 * steady);
    let dt = waveform.dt_us();

    let mut rise: Option<f64> = None;
    let mut fall: Option<f64> = None;
    let mut low_up: Option<f64> = None;
    let mut high_down: Option<f64> = None;
    for i in 0..column.len().saturating_sub(1) {
        let (v0, v1) = (column[i], column[i + 1]);
        let t0 = i as f64 * dt;
        if v0 < low && v1 >= low {
            low_up = Some(crossing_time(t0, dt, v0, v1, low));
        }
        if rise.is_none() && v0 < high && v1 >= high {
            if let Some(start) = low_up {
                rise = Some(crossing_time(t0, dt, v0, v1, high) - start);
            }
        }
        if v0 >= high && v1 < high {
            high_down = Some(crossing_time(t0, dt, v0, v1, high));
        }
        if fall.is_none() && v0 >= low && v1 < low {
            if let Some(start) = high_down {
                fall = Some(crossing_time(t0, dt, v0, v1, low) - start);
            }
        }
        if rise.is_some() && fall.is_some() {
            break;
        }
    }
    match (rise, fall) {
        (Some(r), Some(f)) => Ok((r, f)),
        _ => Err(PumpError::NoCompleteEdge(channel)),
    }
}

/// Conversion efficiency driven by the channel's pump power at time `t_us`.
pub fn instantaneous_efficiency(
    waveform: &PumpWaveform,
    channel: u32,
    device: &ConversionDevice,
    t_us: f64,
) -> Result<f64, PumpError> {
    let law = device.law(channel)?;
    let power = waveform.power_at(channel, t_us)?;
    Ok(conversion_efficiency(law.a, law.b_per_mw, power)?)
}

/// Smallest schedule gap for which plateaus still reach >= 90% of steady
/// power: the slowest shutter's rise/fall time.
pub fn min_switch_interval(configs: &[PumpChannelConfig]) -> Result<f64, PumpError> {
    if configs.is_empty() {
        return Err(PumpError::NoChannels);
    }
    Ok(configs
        .iter()
        .map(|c| c.shutter_rise_fall_us)
        .fold(0.0, f64::max))
}
