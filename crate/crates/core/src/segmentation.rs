//! Bimodal-histogram thresholding of thermal bridges.
//!
//! The two tallest relative maxima of the (smoothed) histogram mark the
//! bridge and the surrounding wall; the threshold `T_m` is the bin centre of
//! the lowest count strictly between them. When several bins share the
//! minimum, the one closest to the taller peak wins.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{GridImage, Pixel};

/// Thresholds obtained on two laboratory thermograms (pillar and beam-pillar
/// joint), in °C. The source thermograms are not available, so these are
/// kept for reference only.
pub const REFERENCE_THRESHOLDS_C: [(&str, f64); 2] = [("pillar", 21.50), ("beam-pillar joint", 20.36)];

pub const DEFAULT_BINS: usize = 256;
pub const DEFAULT_SMOOTHING: usize = 5;

// Raw-count refinement window around the smoothed valley, in bins.
const REFINE_RADIUS: usize = 2;

/// A relative maximum counts as a peak only if it rises at least this
/// fraction of its height above the higher of its two bases (the lowest
/// count between it and the nearest taller bin, or the histogram end, on
/// each side). Sampling noise on top of one mode creates maxima with
/// near-zero prominence; without the filter they outrank the other mode.
pub const MIN_RELATIVE_PROMINENCE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub bin_width: f64,
    pub smoothing_window: usize,
    /// Centred moving average of `counts` (zero outside the range), used for
    /// peak detection.
    pub smoothed: Vec<f64>,
}

impl Histogram {
    /// Build from explicit equal-width bins.
    pub fn from_counts(bin_edges: Vec<f64>, counts: Vec<u64>, smoothing_window: usize) -> Result<Self> {
        check_smoothing(smoothing_window)?;
        if counts.len() < 2 || bin_edges.len() != counts.len() + 1 {
            return Err(Error::invalid(format!(
                "histogram needs >= 2 bins and one more edge than bins ({} edges, {} bins)",
                bin_edges.len(),
                counts.len()
            )));
        }
        let width = (bin_edges[bin_edges.len() - 1] - bin_edges[0]) / counts.len() as f64;
        let uniform = bin_edges
            .windows(2)
            .all(|e| e[1] > e[0] && ((e[1] - e[0]) - width).abs() <= 1e-9 * width.abs().max(1.0));
        if !(width > 0.0) || !uniform {
            return Err(Error::invalid("histogram bin edges must be increasing and equally spaced"));
        }
        let smoothed = moving_average(&counts, smoothing_window);
        Ok(Histogram {
            bin_edges,
            counts,
            bin_width: width,
            smoothing_window,
            smoothed,
        })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn center(&self, bin: usize) -> f64 {
        0.5 * (self.bin_edges[bin] + self.bin_edges[bin + 1])
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.bins()).map(|b| self.center(b)).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

fn check_smoothing(window: usize) -> Result<()> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::invalid(format!("smoothing window must be odd and >= 1, got {window}")));
    }
    Ok(())
}

fn moving_average(counts: &[u64], window: usize) -> Vec<f64> {
    let half = window / 2;
    (0..counts.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(counts.len() - 1);
            counts[lo..=hi].iter().sum::<u64>() as f64 / window as f64
        })
        .collect()
}

pub fn build_histogram(img: &GridImage, bins: usize, smooth: usize) -> Result<Histogram> {
    build_histogram_from_values(img.values(), bins, smooth)
}

/// Equal-width histogram spanning `[min, max]` of `values`.
pub fn build_histogram_from_values(values: &[f64], bins: usize, smooth: usize) -> Result<Histogram> {
    if bins < 2 {
        return Err(Error::invalid(format!("need at least 2 bins, got {bins}")));
    }
    check_smoothing(smooth)?;
    if values.is_empty() {
        return Err(Error::DegenerateHistogram("no samples".into()));
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::DegenerateHistogram(format!("all samples equal {lo}")));
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    for &v in values {
        let idx = (((v - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let edges = (0..=bins)
        .map(|i| if i == bins { hi } else { lo + i as f64 * width })
        .collect();
    Histogram::from_counts(edges, counts, smooth)
}

/// Relative maxima: runs of equal values strictly above both neighbours
/// (zero outside the range). A plateau reports its centre bin.
pub fn relative_maxima(values: &[f64]) -> Vec<usize> {
    let mut peaks = Vec::new();
    let mut start = 0;
    while start < values.len() {
        let mut end = start;
        while end + 1 < values.len() && values[end + 1] == values[start] {
            end += 1;
        }
        let left = if start == 0 { 0.0 } else { values[start - 1] };
        let right = if end + 1 == values.len() { 0.0 } else { values[end + 1] };
        if values[start] > left && values[start] > right {
            peaks.push((start + end) / 2);
        }
        start = end + 1;
    }
    peaks
}

/// Height above the higher base; outside the histogram counts as zero.
pub fn prominence(values: &[f64], peak: usize) -> f64 {
    let h = values[peak];
    let base = |iter: &mut dyn Iterator<Item = usize>| {
        let mut low = h;
        for i in iter {
            if values[i] > h {
                return low;
            }
            low = low.min(values[i]);
        }
        0.0
    };
    let left = base(&mut (0..peak).rev());
    let right = base(&mut (peak + 1..values.len()));
    h - left.max(right)
}

/// Relative maxima passing the [`MIN_RELATIVE_PROMINENCE`] filter.
pub fn significant_maxima(values: &[f64]) -> Vec<usize> {
    relative_maxima(values)
        .into_iter()
        .filter(|&p| prominence(values, p) >= MIN_RELATIVE_PROMINENCE * values[p])
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    /// Temperature (bin centre) of the colder of the two peaks.
    pub t_p1: f64,
    pub t_p2: f64,
    /// Smoothed heights of the peaks at `t_p1` and `t_p2`.
    pub p1: f64,
    pub p2: f64,
    pub t_m: f64,
    pub valley_bin: usize,
    /// Valley found on the smoothed counts, before raw-count refinement.
    pub smoothed_valley: f64,
    pub tie_broken: bool,
    /// Every bin centre that attained the final minimum.
    pub valley_candidates: Vec<f64>,
    /// Relative maxima discarded as too shallow.
    pub rejected_maxima: usize,
}

/// Among `candidates` (indices with equal minimum) pick the one closest to `target`.
fn closest_to(hist: &Histogram, candidates: &[usize], target: usize) -> usize {
    let t = hist.center(target);
    *candidates
        .iter()
        .min_by(|&&a, &&b| {
            (hist.center(a) - t)
                .abs()
                .partial_cmp(&(hist.center(b) - t).abs())
                .unwrap()
        })
        .expect("at least one candidate")
}

fn minima_in(values: &[f64], range: std::ops::Range<usize>) -> Vec<usize> {
    let min = range.clone().map(|i| values[i]).fold(f64::INFINITY, f64::min);
    range.filter(|&i| values[i] == min).collect()
}

pub fn find_threshold(hist: &Histogram) -> Result<ThresholdReport> {
    let all = relative_maxima(&hist.smoothed).len();
    let mut peaks = significant_maxima(&hist.smoothed);
    if peaks.len() < 2 {
        return Err(Error::Unimodal(format!(
            "found {} significant relative maximum ({all} in total) on {} smoothed bins; \
             re-bin or change the smoothing",
            peaks.len(),
            hist.bins()
        )));
    }
    // Tallest first; equal heights keep the lower bin first.
    peaks.sort_by(|&a, &b| hist.smoothed[b].partial_cmp(&hist.smoothed[a]).unwrap().then(a.cmp(&b)));
    let (lo, hi) = (peaks[0].min(peaks[1]), peaks[0].max(peaks[1]));
    // Equal heights: the warmer peak counts as the taller one.
    let taller = if hist.smoothed[lo] > hist.smoothed[hi] { lo } else { hi };

    let coarse = minima_in(&hist.smoothed, lo + 1..hi);
    let smoothed_valley = closest_to(hist, &coarse, taller);

    let window = smoothed_valley.saturating_sub(REFINE_RADIUS).max(lo + 1)
        ..(smoothed_valley + REFINE_RADIUS + 1).min(hi);
    let counts: Vec<f64> = hist.counts.iter().map(|&c| c as f64).collect();
    let fine = minima_in(&counts, window);
    let valley = closest_to(hist, &fine, taller);

    Ok(ThresholdReport {
        t_p1: hist.center(lo),
        t_p2: hist.center(hi),
        p1: hist.smoothed[lo],
        p2: hist.smoothed[hi],
        t_m: hist.center(valley),
        valley_bin: valley,
        smoothed_valley: hist.center(smoothed_valley),
        tie_broken: fine.len() > 1,
        valley_candidates: fine.iter().map(|&b| hist.center(b)).collect(),
        rejected_maxima: all - peaks.len(),
    })
}

/// Binary partition into bridge area `A_B` (true) and external area `A_E`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentationMask {
    rows: usize,
    cols: usize,
    mask: Vec<bool>,
}

impl SegmentationMask {
    pub fn new(rows: usize, cols: usize, mask: Vec<bool>) -> Result<Self> {
        if rows == 0 || cols == 0 || mask.len() != rows * cols {
            return Err(Error::invalid(format!(
                "mask {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                mask.len()
            )));
        }
        Ok(SegmentationMask { rows, cols, mask })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// 0-based access.
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.mask[row * self.cols + col]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.mask
    }

    /// `|A_B|`
    pub fn bridge_area(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// `|A_E|`
    pub fn external_area(&self) -> usize {
        self.mask.len() - self.bridge_area()
    }

    /// Fraction of pixels on which two equally sized masks agree.
    pub fn agreement(&self, other: &SegmentationMask) -> Result<f64> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::invalid(format!(
                "mask sizes differ: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let same = self.mask.iter().zip(&other.mask).filter(|(a, b)| a == b).count();
        Ok(same as f64 / self.mask.len() as f64)
    }
}

/// Cold bridges (the default, inner wall in winter) are `<= T_m`; warm
/// bridges are `>= T_m`.
pub fn segment(img: &GridImage, t_m: f64, bridge_is_cold: bool) -> SegmentationMask {
    let mask = img
        .values()
        .iter()
        .map(|&v| if bridge_is_cold { v <= t_m } else { v >= t_m })
        .collect();
    SegmentationMask {
        rows: img.rows(),
        cols: img.cols(),
        mask,
    }
}

/// Bridge pixels touching the external area or the image border (4-neighbourhood).
pub fn contours(mask: &SegmentationMask) -> Vec<Pixel> {
    let (n, m) = (mask.rows, mask.cols);
    let mut out = Vec::new();
    for r in 0..n {
        for c in 0..m {
            if !mask.get(r, c) {
                continue;
            }
            let edge = r == 0
                || c == 0
                || r + 1 == n
                || c + 1 == m
                || !mask.get(r - 1, c)
                || !mask.get(r + 1, c)
                || !mask.get(r, c - 1)
                || !mask.get(r, c + 1);
            if edge {
                out.push(Pixel::new(r + 1, c + 1));
            }
        }
    }
    out
}
