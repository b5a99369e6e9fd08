//! Coincidence histograms between herald and channel detections, and the
//! plateau-normalized cross-correlation estimate.

use super::{DetectorId, EventStream, StatsError};

/// Plateau bins sit beyond this multiple of the window half-width.
pub const DEFAULT_PLATEAU_FACTOR: f64 = 5.0;

const MIN_PLATEAU_BINS: usize = 10;

/// Binned delays between channel detections and every herald within the span,
/// plus the singles counters feeding the accidental normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceHistogram {
    pub bin_width_ps: i64,
    /// Delay of the left edge of bin 0; bins are right-open.
    pub span_ps: i64,
    pub counts: Vec<u64>,
    pub accumulation_s: f64,
    pub herald_singles: u64,
    pub channel_singles: u64,
}

impl CoincidenceHistogram {
    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    /// Left edge of bin `index` in ps of delay.
    pub fn bin_left_edge_ps(&self, index: usize) -> i64 {
        -self.span_ps + index as i64 * self.bin_width_ps
    }

    /// Center of bin `index` in ps of delay.
    pub fn bin_center_ps(&self, index: usize) -> f64 {
        self.bin_left_edge_ps(index) as f64 + self.bin_width_ps as f64 / 2.0
    }

    pub fn total_counts(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn window_bins(&self, window_ps: i64) -> Result<(usize, usize), StatsError> {
        let bins = window_ps / self.bin_width_ps;
        if window_ps <= 0 || bins < 1 || bins as usize > self.n_bins() {
            return Err(StatsError::BadWindow(window_ps));
        }
        let center = self.n_bins() / 2;
        let lo = center - (bins as usize) / 2;
        Ok((lo, lo + bins as usize))
    }

    /// Indices of the off-peak plateau bins for a given window width.
    pub fn plateau_bins(&self, window_ps: i64, plateau_factor: f64) -> Vec<usize> {
        let cut = plateau_factor * window_ps as f64 / 2.0;
        (0..self.n_bins())
            .filter(|&b| {
                let left = self.bin_left_edge_ps(b) as f64;
                let right = left + self.bin_width_ps as f64;
                right <= -cut || left >= cut
            })
            .collect()
    }
}

/// Histogram of (channel time - herald time) for every herald within
/// `span_ps` of each channel detection.
pub fn accumulate_histogram(
    events: &EventStream,
    herald: DetectorId,
    channel: DetectorId,
    bin_width_ps: i64,
    span_ps: i64,
) -> Result<CoincidenceHistogram, StatsError> {
    if bin_width_ps <= 0 || span_ps <= 0 || span_ps < bin_width_ps {
        return Err(StatsError::BadHistogramParams {
            bin_width_ps,
            span_ps,
        });
    }
    let half_bins = span_ps / bin_width_ps;
    let span_eff = half_bins * bin_width_ps;
    let n_bins = (2 * half_bins) as usize;

    let mut herald_times = events.times(herald);
    let mut channel_times = events.times(channel);
    // the stream sorts on construction; guard against hand-built inputs
    if !herald_times.windows(2).all(|p| p[0] <= p[1]) {
        herald_times.sort_unstable();
    }
    if !channel_times.windows(2).all(|p| p[0] <= p[1]) {
        channel_times.sort_unstable();
    }

    let mut counts = vec![0u64; n_bins];
    for &t_c in &channel_times {
        // heralds with delay d = t_c - t_h in [-span_eff, span_eff)
        let start = herald_times.partition_point(|&h| h <= t_c - span_eff);
        let stop = herald_times.partition_point(|&h| h <= t_c + span_eff);
        for &t_h in &herald_times[start..stop] {
            let delay = t_c - t_h;
            if delay >= span_eff {
                continue;
            }
            counts[((delay + span_eff) / bin_width_ps) as usize] += 1;
        }
    }
    Ok(CoincidenceHistogram {
        bin_width_ps,
        span_ps: span_eff,
        counts,
        accumulation_s: events.duration_s(),
        herald_singles: herald_times.len() as u64,
        channel_singles: channel_times.len() as u64,
    })
}

/// Cross-correlation estimate with its statistical error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GEstimate {
    pub g: f64,
    pub std_err: f64,
    pub window_counts: u64,
    /// Accidental coincidences expected in the window, from the plateau.
    pub accidental_per_window: f64,
    /// Accidental level per histogram bin.
    pub accidental_per_bin: f64,
}

/// g with the default plateau rule (all bins beyond 5x the window half-width).
pub fn estimate_cross_correlation(
    histogram: &CoincidenceHistogram,
    window_ps: i64,
) -> Result<GEstimate, StatsError> {
    estimate_cross_correlation_with(histogram, window_ps, DEFAULT_PLATEAU_FACTOR)
}

/// g = (counts in the centered window) / (plateau accidental level scaled to
/// the window width); the error combines Poisson noise of both counts.
pub fn estimate_cross_correlation_with(
    histogram: &CoincidenceHistogram,
    window_ps: i64,
    plateau_factor: f64,
) -> Result<GEstimate, StatsError> {
    let (lo, hi) = histogram.window_bins(window_ps)?;
    let plateau = histogram.plateau_bins(window_ps, plateau_factor);
    if plateau.len() < MIN_PLATEAU_BINS {
        return Err(StatsError::TooFewPlateauBins {
            got: plateau.len(),
            need: MIN_PLATEAU_BINS,
        });
    }
    let window_counts: u64 = histogram.counts[lo..hi].iter().sum();
    let plateau_counts: u64 = plateau.iter().map(|&b| histogram.counts[b]).sum();
    if plateau_counts == 0 {
        return Err(StatsError::ZeroAccidentals { window_counts });
    }
    let accidental_per_bin = plateau_counts as f64 / plateau.len() as f64;
    let accidental_per_window = accidental_per_bin * (hi - lo) as f64;
    let g = window_counts as f64 / accidental_per_window;
    let variance = window_counts.max(1) as f64 / (accidental_per_window * accidental_per_window)
        + g * g / plateau_counts as f64;
    Ok(GEstimate {
        g,
        std_err: variance.sqrt(),
        window_counts,
        accidental_per_window,
        accidental_per_bin,
    })
}
