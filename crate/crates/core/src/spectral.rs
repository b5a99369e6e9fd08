//! DWDM grid bookkeeping, the pump-power conversion-efficiency law, and the
//! phase-matching envelope of the converter.
//!
//! All grid arithmetic is exact in integer GHz; continuous values appear only
//! inside the efficiency and envelope formulas.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

mod fit;
pub use fit::{fit_efficiency_curve, EfficiencyFit, FitError};

/// Absolute optical frequencies are tracked in integer GHz.
pub type Ghz = i64;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("frequency must be positive, got {0} GHz")]
    NonPositiveFrequency(Ghz),
    #[error("channel spacing must be positive, got {0} GHz")]
    NonPositiveSpacing(Ghz),
    #[error("channel count must be at least 1")]
    EmptyPlan,
    #[error("channel index {index} outside plan range 1..={count}")]
    ChannelOutOfRange { index: u32, count: u32 },
    #[error("signal frequency {signal} GHz does not exceed pump frequency {pump} GHz")]
    NonPositiveDifference { signal: Ghz, pump: Ghz },
    #[error("peak efficiency must lie in (0, 1], got {0}")]
    PeakEfficiencyOutOfRange(f64),
    #[error("efficiency-law coefficient b must be positive, got {0} mW^-1")]
    NonPositiveLawCoefficient(f64),
    #[error("pump power must be nonnegative, got {0} mW")]
    NegativePumpPower(f64),
    #[error("device length must be positive, got {0} mm")]
    NonPositiveLength(f64),
    #[error("device has no channel calibration")]
    NoCalibration,
    #[error("device has no calibration for pump channel {0}")]
    UnknownChannel(u32),
    #[error("efficiency samples must have strictly increasing pump powers")]
    NonMonotonicPowers,
    #[error("efficiency sample out of range: power {power} mW, efficiency {efficiency}")]
    SampleOutOfRange { power: f64, efficiency: f64 },
    #[error("calibration table line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Absolute optical frequency on the integer-GHz grid.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Frequency(Ghz);

impl Frequency {
    pub fn from_ghz(ghz: Ghz) -> Result<Self, SpectralError> {
        if ghz <= 0 {
            return Err(SpectralError::NonPositiveFrequency(ghz));
        }
        Ok(Frequency(ghz))
    }

    pub fn ghz(self) -> Ghz {
        self.0
    }

    pub fn thz(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    /// Signed offset `self - other` in GHz.
    pub fn offset_ghz(self, other: Frequency) -> Ghz {
        self.0 - other.0
    }
}

impl std::fmt::Display for Frequency {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} GHz", self.0)
    }
}

/// Whether channel frequency grows or shrinks with the channel index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridDirection {
    Ascending,
    Descending,
}

impl GridDirection {
    fn sign(self) -> Ghz {
        match self {
            GridDirection::Ascending => 1,
            GridDirection::Descending => -1,
        }
    }
}

/// A fixed-spacing DWDM channel grid. Channel indices run from 1 to `count`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelPlan {
    base_frequency: Frequency,
    spacing_ghz: Ghz,
    count: u32,
    direction: GridDirection,
}

impl ChannelPlan {
    pub fn new(
        base_frequency: Frequency,
        spacing_ghz: Ghz,
        count: u32,
        direction: GridDirection,
    ) -> Result<Self, SpectralError> {
        if spacing_ghz <= 0 {
            return Err(SpectralError::NonPositiveSpacing(spacing_ghz));
        }
        if count == 0 {
            return Err(SpectralError::EmptyPlan);
        }
        let plan = ChannelPlan {
            base_frequency,
            spacing_ghz,
            count,
            direction,
        };
        // every channel frequency must stay positive (distinctness is
        // automatic for nonzero spacing)
        let last = base_frequency.ghz() + direction.sign() * (count as Ghz - 1) * spacing_ghz;
        if last <= 0 {
            return Err(SpectralError::NonPositiveFrequency(last));
        }
        Ok(plan)
    }

    pub fn base_frequency(&self) -> Frequency {
        self.base_frequency
    }

    pub fn spacing_ghz(&self) -> Ghz {
        self.spacing_ghz
    }

    pub fn count(&self) -> u32 {
        self.count
    }

    pub fn direction(&self) -> GridDirection {
        self.direction
    }

    /// Exact center frequency of channel `index` (1-based).
    pub fn frequency(&self, index: u32) -> Result<Frequency, SpectralError> {
        if index < 1 || index > self.count {
            return Err(SpectralError::ChannelOutOfRange {
                index,
                count: self.count,
            });
        }
        let ghz = self.base_frequency.ghz()
            + self.direction.sign() * (index as Ghz - 1) * self.spacing_ghz;
        Ok(Frequency(ghz))
    }

    /// Inverse of [`ChannelPlan::frequency`]: the channel whose center is
    /// exactly `frequency`, if any.
    pub fn channel_of(&self, frequency: Frequency) -> Option<u32> {
        let delta = self.direction.sign() * frequency.offset_ghz(self.base_frequency);
        if delta < 0 || delta % self.spacing_ghz != 0 {
            return None;
        }
        let index = delta / self.spacing_ghz + 1;
        (index >= 1 && index <= self.count as Ghz).then_some(index as u32)
    }

    /// Channel indices paired with their center frequencies.
    pub fn channels(&self) -> impl Iterator<Item = (u32, Frequency)> + '_ {
        (1..=self.count).map(|i| (i, self.frequency(i).expect("index in range")))
    }
}

/// Difference frequency produced by the converter: `signal - pump`, exact.
pub fn converted_frequency(
    signal: Frequency,
    pump: Frequency,
) -> Result<Frequency, SpectralError> {
    let diff = signal.ghz() - pump.ghz();
    if diff <= 0 {
        return Err(SpectralError::NonPositiveDifference {
            signal: signal.ghz(),
            pump: pump.ghz(),
        });
    }
    Ok(Frequency(diff))
}

/// The fitted pump-power law eta(P) = a * sin^2(sqrt(b * P)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyLaw {
    pub a: f64,
    pub b_per_mw: f64,
}

impl EfficiencyLaw {
    pub fn new(a: f64, b_per_mw: f64) -> Result<Self, SpectralError> {
        if !(a > 0.0 && a <= 1.0) {
            return Err(SpectralError::PeakEfficiencyOutOfRange(a));
        }
        if b_per_mw <= 0.0 {
            return Err(SpectralError::NonPositiveLawCoefficient(b_per_mw));
        }
        Ok(EfficiencyLaw { a, b_per_mw })
    }

    pub fn efficiency(&self, pump_power_mw: f64) -> Result<f64, SpectralError> {
        conversion_efficiency(self.a, self.b_per_mw, pump_power_mw)
    }

    /// Pump power of the first efficiency maximum, (pi/2)^2 / b.
    pub fn optimal_power_mw(&self) -> f64 {
        FRAC_PI_2 * FRAC_PI_2 / self.b_per_mw
    }
}

/// eta = a * sin^2(sqrt(b * P)); zero at P = 0, first maximum a at (pi/2)^2 / b.
pub fn conversion_efficiency(a: f64, b_per_mw: f64, pump_power_mw: f64) -> Result<f64, SpectralError> {
    if pump_power_mw < 0.0 {
        return Err(SpectralError::NegativePumpPower(pump_power_mw));
    }
    let u = (b_per_mw * pump_power_mw).sqrt();
    Ok(a * u.sin().powi(2))
}

/// Argmax of the efficiency law, (pi/2)^2 / b.
pub fn optimal_pump_power(b_per_mw: f64) -> Result<f64, SpectralError> {
    if b_per_mw <= 0.0 {
        return Err(SpectralError::NonPositiveLawCoefficient(b_per_mw));
    }
    Ok(FRAC_PI_2 * FRAC_PI_2 / b_per_mw)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-9 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// PPLN-like converter: waveguide length, phase-matched pump frequency,
/// linearized dispersion slope, and per-pump-channel efficiency constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversionDevice {
    length_mm: f64,
    pm_pump_frequency: Frequency,
    beta_rad_per_mm_ghz: f64,
    calibration: BTreeMap<u32, EfficiencyLaw>,
}

impl ConversionDevice {
    pub fn new(
        length_mm: f64,
        pm_pump_frequency: Frequency,
        beta_rad_per_mm_ghz: f64,
        calibration: BTreeMap<u32, EfficiencyLaw>,
    ) -> Result<Self, SpectralError> {
        if length_mm <= 0.0 {
            return Err(SpectralError::NonPositiveLength(length_mm));
        }
        Ok(ConversionDevice {
            length_mm,
            pm_pump_frequency,
            beta_rad_per_mm_ghz,
            calibration,
        })
    }

    pub fn length_mm(&self) -> f64 {
        self.length_mm
    }

    pub fn pm_pump_frequency(&self) -> Frequency {
        self.pm_pump_frequency
    }

    pub fn beta_rad_per_mm_ghz(&self) -> f64 {
        self.beta_rad_per_mm_ghz
    }

    pub fn law(&self, pump_channel: u32) -> Result<&EfficiencyLaw, SpectralError> {
        self.calibration
            .get(&pump_channel)
            .ok_or(SpectralError::UnknownChannel(pump_channel))
    }

    pub fn calibration(&self) -> &BTreeMap<u32, EfficiencyLaw> {
        &self.calibration
    }

    /// Linearized phase mismatch in rad/mm: beta * (pump - pm_pump).
    pub fn phase_mismatch(&self, pump: Frequency) -> f64 {
        self.beta_rad_per_mm_ghz * pump.offset_ghz(self.pm_pump_frequency) as f64
    }

    /// Largest fitted peak efficiency across the calibrated channels.
    pub fn envelope_peak(&self) -> Result<f64, SpectralError> {
        self.calibration
            .values()
            .map(|law| law.a)
            .fold(None, |acc: Option<f64>, a| Some(acc.map_or(a, |m| m.max(a))))
            .ok_or(SpectralError::NoCalibration)
    }

    /// Maximum conversion efficiency available at `pump`:
    /// peak * sinc^2(dk * L / 2).
    pub fn envelope_efficiency(&self, pump: Frequency) -> Result<f64, SpectralError> {
        let peak = self.envelope_peak()?;
        let x = self.phase_mismatch(pump) * self.length_mm / 2.0;
        Ok(peak * sinc(x).powi(2))
    }

    /// Pump band over which the envelope stays at or above `threshold`,
    /// rounded inward to integer GHz. `None` when even the peak falls short.
    pub fn usable_band(&self, threshold: f64) -> Result<Option<(Frequency, Frequency)>, SpectralError> {
        let peak = self.envelope_peak()?;
        if threshold > peak {
            return Ok(None);
        }
        if self.beta_rad_per_mm_ghz == 0.0 {
            // dispersionless model: unbounded band; report nothing rather
            // than an arbitrary cutoff
            return Ok(None);
        }
        let target = threshold / peak;
        // sinc^2 decreases monotonically on [0, pi]
        let mut lo = 0.0f64;
        let mut hi = std::f64::consts::PI;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if sinc(mid).powi(2) >= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let half_ghz = (2.0 * lo / (self.beta_rad_per_mm_ghz.abs() * self.length_mm)).floor() as Ghz;
        let pm = self.pm_pump_frequency.ghz();
        let low = (pm - half_ghz).max(1);
        Ok(Some((Frequency(low), Frequency(pm + half_ghz))))
    }
}

/// Number of selectable channels in `[band_low, band_high)` at `spacing`.
pub fn selectable_channel_count(
    band_low: Frequency,
    band_high: Frequency,
    spacing_ghz: Ghz,
) -> Result<u32, SpectralError> {
    if spacing_ghz <= 0 {
        return Err(SpectralError::NonPositiveSpacing(spacing_ghz));
    }
    let width = band_high.ghz() - band_low.ghz();
    if width <= 0 {
        return Ok(0);
    }
    Ok((width / spacing_ghz) as u32)
}

/// One measured point of a pump-power sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencySample {
    pub pump_power_mw: f64,
    pub efficiency: f64,
    pub std_err: f64,
}

/// A measured efficiency-vs-power curve for one pump channel.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyCurve {
    samples: Vec<EfficiencySample>,
}

impl EfficiencyCurve {
    pub fn new(samples: Vec<EfficiencySample>) -> Result<Self, SpectralError> {
        for pair in samples.windows(2) {
            if pair[1].pump_power_mw <= pair[0].pump_power_mw {
                return Err(SpectralError::NonMonotonicPowers);
            }
        }
        for s in &samples {
            if s.pump_power_mw < 0.0 || !(0.0..=1.0).contains(&s.efficiency) || s.std_err < 0.0 {
                return Err(SpectralError::SampleOutOfRange {
                    power: s.pump_power_mw,
                    efficiency: s.efficiency,
                });
            }
        }
        Ok(EfficiencyCurve { samples })
    }

    pub fn samples(&self) -> &[EfficiencySample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Parse a calibration table: comma-separated rows
/// `pump_channel, pump_power_mw, efficiency, std_err`, `#` comments.
/// Rows may arrive unordered; each channel's samples are sorted by power.
pub fn parse_calibration_table(
    text: &str,
) -> Result<BTreeMap<u32, EfficiencyCurve>, SpectralError> {
    let mut grouped: BTreeMap<u32, Vec<EfficiencySample>> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(SpectralError::Parse {
                line: lineno + 1,
                message: format!("expected 4 comma-separated fields, got {}", fields.len()),
            });
        }
        let parse_f64 = |s: &str, what: &str| {
            s.parse::<f64>().map_err(|_| SpectralError::Parse {
                line: lineno + 1,
                message: format!("invalid {what}: {s:?}"),
            })
        };
        let channel: u32 = fields[0].parse().map_err(|_| SpectralError::Parse {
            line: lineno + 1,
            message: format!("invalid pump_channel: {:?}", fields[0]),
        })?;
        let sample = EfficiencySample {
            pump_power_mw: parse_f64(fields[1], "pump_power_mw")?,
            efficiency: parse_f64(fields[2], "efficiency")?,
            std_err: parse_f64(fields[3], "std_err")?,
        };
        grouped.entry(channel).or_default().push(sample);
    }
    let mut curves = BTreeMap::new();
    for (channel, mut samples) in grouped {
        samples.sort_by(|a, b| a.pump_power_mw.total_cmp(&b.pump_power_mw));
        curves.insert(channel, EfficiencyCurve::new(samples)?);
    }
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn demo_plan() -> ChannelPlan {
        ChannelPlan::new(
            Frequency::from_ghz(189_383).unwrap(),
            25,
            7,
            GridDirection::Ascending,
        )
        .unwrap()
    }

    #[test]
    fn channel_frequencies_on_the_pump_grid() {
        let plan = demo_plan();
        assert_eq!(plan.frequency(1).unwrap().ghz(), 189_383);
        assert_eq!(plan.frequency(7).unwrap().ghz(), 189_533);
    }

    #[test]
    fn single_channel_plan_is_identity() {
        let plan = ChannelPlan::new(
            Frequency::from_ghz(194_850).unwrap(),
            25,
            1,
            GridDirection::Descending,
        )
        .unwrap();
        assert_eq!(plan.frequency(1).unwrap().ghz(), 194_850);
    }

    #[test]
    fn channel_index_out_of_range() {
        let plan = demo_plan();
        assert_eq!(
            plan.frequency(8),
            Err(SpectralError::ChannelOutOfRange { index: 8, count: 7 })
        );
        assert_eq!(
            plan.frequency(0),
            Err(SpectralError::ChannelOutOfRange { index: 0, count: 7 })
        );
    }

    #[test]
    fn frequency_round_trips_with_channel_of() {
        let plan = demo_plan();
        for (i, f) in plan.channels() {
            assert_eq!(plan.channel_of(f), Some(i));
        }
        assert_eq!(plan.channel_of(Frequency::from_ghz(189_384).unwrap()), None);
        assert_eq!(plan.channel_of(Frequency::from_ghz(189_558).unwrap()), None);
    }

    #[test]
    fn converted_frequency_conserves_energy_at_band_endpoints() {
        let signal = Frequency::from_ghz(384_233).unwrap();
        let low_pump = Frequency::from_ghz(189_383).unwrap();
        let high_pump = Frequency::from_ghz(189_533).unwrap();
        assert_eq!(converted_frequency(signal, low_pump).unwrap().ghz(), 194_850);
        assert_eq!(converted_frequency(signal, high_pump).unwrap().ghz(), 194_700);
    }

    #[test]
    fn degenerate_split_and_domain_error() {
        let f = Frequency::from_ghz(200_000).unwrap();
        let two_f = Frequency::from_ghz(400_000).unwrap();
        assert_eq!(converted_frequency(two_f, f).unwrap(), f);
        assert!(converted_frequency(f, f).is_err());
        assert!(converted_frequency(f, two_f).is_err());
    }

    fn device(beta: f64, laws: &[(u32, f64, f64)]) -> ConversionDevice {
        let cal = laws
            .iter()
            .map(|&(ch, a, b)| (ch, EfficiencyLaw::new(a, b).unwrap()))
            .collect();
        ConversionDevice::new(40.0, Frequency::from_ghz(189_200).unwrap(), beta, cal).unwrap()
    }

    #[test]
    fn phase_mismatch_is_linear_and_odd() {
        let dev = device(1e-5, &[(1, 0.39, 0.013)]);
        assert_eq!(dev.phase_mismatch(Frequency::from_ghz(189_200).unwrap()), 0.0);
        let plus = dev.phase_mismatch(Frequency::from_ghz(189_700).unwrap());
        let minus = dev.phase_mismatch(Frequency::from_ghz(188_700).unwrap());
        assert_abs_diff_eq!(plus, 5e-3, epsilon = 1e-15);
        assert_abs_diff_eq!(plus, -minus, epsilon = 1e-15);
    }

    #[test]
    fn envelope_peaks_at_phase_matched_pump() {
        let dev = device(1e-5, &[(1, 0.39, 0.013), (2, 0.38, 0.010)]);
        let at_pm = dev
            .envelope_efficiency(Frequency::from_ghz(189_200).unwrap())
            .unwrap();
        assert_abs_diff_eq!(at_pm, 0.39, epsilon = 1e-15);
    }

    #[test]
    fn envelope_vanishes_at_first_sinc_null() {
        // dk * L / 2 = pi  <=>  offset = 2 pi / (beta L)
        let dev = device(1e-5, &[(1, 0.39, 0.013)]);
        let offset = (2.0 * std::f64::consts::PI / (1e-5 * 40.0)).round() as Ghz;
        let pump = Frequency::from_ghz(189_200 + offset).unwrap();
        assert!(dev.envelope_efficiency(pump).unwrap() < 1e-8);
    }

    #[test]
    fn calibrated_envelope_covers_the_band_edges() {
        // calibration used by the bandwidth scan: peak 0.45, beta 2e-5
        let cal = [(1u32, 0.45, 0.012)];
        let mut dev = device(2e-5, &cal);
        dev.pm_pump_frequency = Frequency::from_ghz(189_450).unwrap();
        for off in [-1_250, 1_250] {
            let pump = Frequency::from_ghz(189_450 + off).unwrap();
            assert!(dev.envelope_efficiency(pump).unwrap() >= 0.40);
        }
    }

    #[test]
    fn envelope_is_even_about_the_phase_matched_pump() {
        let dev = device(2e-5, &[(1, 0.45, 0.012)]);
        let pm = dev.pm_pump_frequency().ghz();
        for off in [1, 10, 100, 777, 2_000] {
            let up = dev
                .envelope_efficiency(Frequency::from_ghz(pm + off).unwrap())
                .unwrap();
            let down = dev
                .envelope_efficiency(Frequency::from_ghz(pm - off).unwrap())
                .unwrap();
            assert_abs_diff_eq!(up, down, epsilon = 1e-15);
            assert!(up <= dev.envelope_peak().unwrap());
        }
    }

    #[test]
    fn efficiency_law_examples() {
        assert_eq!(conversion_efficiency(0.38, 0.010, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            conversion_efficiency(0.38, 0.010, 246.74).unwrap(),
            0.38,
            epsilon = 1e-8
        );
        assert_abs_diff_eq!(
            conversion_efficiency(0.39, 0.013, 189.80).unwrap(),
            0.39,
            epsilon = 1e-8
        );
        assert!(conversion_efficiency(0.38, 0.010, -1.0).is_err());
    }

    #[test]
    fn optimal_pump_powers() {
        assert_abs_diff_eq!(optimal_pump_power(0.010).unwrap(), 246.740110, epsilon = 1e-6);
        assert_abs_diff_eq!(optimal_pump_power(0.013).unwrap(), 189.800085, epsilon = 1e-6);
        assert_abs_diff_eq!(optimal_pump_power(0.012).unwrap(), 205.616758, epsilon = 1e-6);
        assert!(optimal_pump_power(0.0).is_err());
        assert!(optimal_pump_power(-0.1).is_err());
    }

    #[test]
    fn efficiency_slope_vanishes_at_the_optimum() {
        for &(a, b) in &[(0.38, 0.010), (0.39, 0.013), (0.37, 0.012)] {
            let p_star = optimal_pump_power(b).unwrap();
            let h = 1e-3 * p_star;
            let up = conversion_efficiency(a, b, p_star + h).unwrap();
            let down = conversion_efficiency(a, b, p_star - h).unwrap();
            let slope = (up - down) / (2.0 * h);
            assert!((slope * p_star / a).abs() < 1e-5);
            assert_abs_diff_eq!(conversion_efficiency(a, b, p_star).unwrap(), a, epsilon = 1e-12);
        }
    }

    #[test]
    fn channel_count_over_the_usable_band() {
        let low = Frequency::from_ghz(188_200).unwrap();
        let high = Frequency::from_ghz(190_700).unwrap();
        assert_eq!(selectable_channel_count(low, high, 25).unwrap(), 100);

        let low = Frequency::from_ghz(189_383).unwrap();
        let high = Frequency::from_ghz(189_558).unwrap();
        assert_eq!(selectable_channel_count(low, high, 25).unwrap(), 7);

        assert_eq!(selectable_channel_count(high, high, 25).unwrap(), 0);
        assert_eq!(selectable_channel_count(high, low, 25).unwrap(), 0);
        assert!(selectable_channel_count(low, high, 0).is_err());
    }

    #[test]
    fn usable_band_matches_threshold_scan() {
        let dev = device(2e-5, &[(1, 0.45, 0.012)]);
        let (lo, hi) = dev.usable_band(0.40).unwrap().unwrap();
        // edges are inside, one step beyond is outside
        assert!(dev.envelope_efficiency(lo).unwrap() >= 0.40);
        assert!(dev.envelope_efficiency(hi).unwrap() >= 0.40);
        let below = Frequency::from_ghz(lo.ghz() - 1).unwrap();
        let above = Frequency::from_ghz(hi.ghz() + 1).unwrap();
        assert!(dev.envelope_efficiency(below).unwrap() < 0.40);
        assert!(dev.envelope_efficiency(above).unwrap() < 0.40);
        // threshold above the peak: no usable band at all
        assert_eq!(dev.usable_band(0.50).unwrap(), None);
    }

    #[test]
    fn calibration_table_parses_and_validates() {
        let text = "# channel, power, eta, err\n\
                    1, 50.0, 0.17, 0.01\n\
                    1, 100.0, 0.30, 0.01\n\
                    2, 80.0, 0.25, 0.02 # inline comment\n";
        let curves = parse_calibration_table(text).unwrap();
        assert_eq!(curves.len(), 2);
        assert_eq!(curves[&1].len(), 2);
        assert_eq!(curves[&2].len(), 1);

        assert!(parse_calibration_table("1, 50.0, 0.17\n").is_err());
        assert!(parse_calibration_table("1, 50.0, 1.7, 0.01\n").is_err());
        // duplicate powers within one channel collapse to an error
        assert!(parse_calibration_table("1, 50, 0.1, 0.0\n1, 50, 0.2, 0.0\n").is_err());
    }
}
