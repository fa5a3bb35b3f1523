//! Intensity, burstiness and heterogeneity of one windowed series.
//!
//! Conventions that the attributes depend on:
//! * the 95th percentile is the nearest-rank order statistic,
//!   i.e. the `ceil(0.95 n)`-th smallest bin;
//! * CoV uses the population standard deviation of the bins;
//! * ratio metrics (`pmr`, `pmr95`, `cov`) are 0 for an all-zero series;
//! * asymmetry is 0.5 when neither direction carries bytes.

use serde::{Deserialize, Serialize};

use super::series::ByteSeries;
use super::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileMetrics {
    pub mean_throughput_bps: f64,
    pub max_throughput_bps: f64,
    pub pmr: f64,
    pub pmr95: f64,
    pub cov: f64,
    pub host_count: u64,
    pub flow_count: u64,
    /// Share of this direction in the bytes of both directions.
    pub asymmetry: f64,
    /// Filled in by replay preparation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub toggle_count: Option<u32>,
}

/// Window context that cannot be recovered from the byte series alone.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WindowContext {
    pub host_count: u64,
    pub flow_count: u64,
    /// Bytes carried by the opposite direction over the same window.
    pub paired_bytes: u64,
}

/// Nearest-rank percentile of already sorted values; `pct` in (0, 100].
pub fn nearest_rank(sorted: &[u64], pct: u32) -> u64 {
    debug_assert!(!sorted.is_empty() && (1..=100).contains(&pct));
    let n = sorted.len();
    let rank = (pct as usize * n).div_ceil(100).max(1);
    sorted[rank - 1]
}

struct SeriesStats {
    mean_throughput_bps: f64,
    max_throughput_bps: f64,
    pmr: f64,
    pmr95: f64,
    cov: f64,
}

fn series_stats(bins: &[u64], bin_width_ms: u32) -> SeriesStats {
    let n = bins.len() as f64;
    let bin_s = f64::from(bin_width_ms) / 1000.0;
    let sum: u64 = bins.iter().sum();
    let max = bins.iter().copied().max().unwrap_or(0);
    let mean_throughput_bps = 8.0 * sum as f64 / (n * bin_s);
    let max_throughput_bps = 8.0 * max as f64 / bin_s;
    if sum == 0 {
        return SeriesStats {
            mean_throughput_bps,
            max_throughput_bps,
            pmr: 0.0,
            pmr95: 0.0,
            cov: 0.0,
        };
    }
    let mean_bin = sum as f64 / n;
    let mut scratch = bins.to_vec();
    let rank = (95 * scratch.len()).div_ceil(100).max(1);
    let p95 = *scratch.select_nth_unstable(rank - 1).1;
    let var = bins
        .iter()
        .map(|&b| {
            let d = b as f64 - mean_bin;
            d * d
        })
        .sum::<f64>()
        / n;
    SeriesStats {
        mean_throughput_bps,
        max_throughput_bps,
        pmr: max as f64 / mean_bin,
        pmr95: p95 as f64 / mean_bin,
        cov: var.sqrt() / mean_bin,
    }
}

fn asymmetry(own: u64, paired: u64) -> f64 {
    let total = own + paired;
    if total == 0 {
        0.5
    } else {
        own as f64 / total as f64
    }
}

pub fn compute_metrics(series: &ByteSeries, ctx: &WindowContext) -> Result<ProfileMetrics, PipelineError> {
    if series.is_empty() {
        return Err(PipelineError::EmptySeries);
    }
    if series.bin_width_ms == 0 {
        return Err(PipelineError::InvalidParameter("bin width must be positive".into()));
    }
    let s = series_stats(&series.bins, series.bin_width_ms);
    Ok(ProfileMetrics {
        mean_throughput_bps: s.mean_throughput_bps,
        max_throughput_bps: s.max_throughput_bps,
        pmr: s.pmr,
        pmr95: s.pmr95,
        cov: s.cov,
        host_count: ctx.host_count,
        flow_count: ctx.flow_count,
        asymmetry: asymmetry(series.total(), ctx.paired_bytes),
        toggle_count: None,
    })
}

impl ProfileMetrics {
    /// Recomputes the series-derived fields from `bins`, keeping the window
    /// context (host/flow counts, toggle count). Asymmetry is re-derived
    /// from the opposite direction's bytes implied by the stored value.
    pub fn recompute(&self, bins: &[u64], bin_width_ms: u32, previous_total: u64) -> ProfileMetrics {
        let s = series_stats(bins, bin_width_ms);
        let total: u64 = bins.iter().sum();
        let asym = if total == previous_total {
            self.asymmetry
        } else {
            asymmetry(total, self.implied_paired_bytes(previous_total))
        };
        ProfileMetrics {
            mean_throughput_bps: s.mean_throughput_bps,
            max_throughput_bps: s.max_throughput_bps,
            pmr: s.pmr,
            pmr95: s.pmr95,
            cov: s.cov,
            asymmetry: asym,
            ..*self
        }
    }

    fn implied_paired_bytes(&self, own_total: u64) -> u64 {
        if own_total == 0 || self.asymmetry <= 0.0 {
            // Nothing in this direction: the stored share carries no byte count.
            0
        } else {
            (own_total as f64 * (1.0 - self.asymmetry) / self.asymmetry).round() as u64
        }
    }

    /// Series-derived fields agree exactly with a recomputation from `bins`.
    pub fn matches_series(&self, bins: &[u64], bin_width_ms: u32) -> bool {
        let s = series_stats(bins, bin_width_ms);
        s.mean_throughput_bps == self.mean_throughput_bps
            && s.max_throughput_bps == self.max_throughput_bps
            && s.pmr == self.pmr
            && s.pmr95 == self.pmr95
            && s.cov == self.cov
    }
}
