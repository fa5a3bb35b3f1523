use super::metrics::WindowContext;
use super::profile::{CrossTrafficProfile, MAX_WINDOW_S, MIN_WINDOW_S};
use super::tree::PrefixNode;
use super::PipelineError;
use crate::net::Direction;

/// Window durations and stride, both in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSpec {
    pub durations_s: Vec<f64>,
    pub stride_s: f64,
}

/// Converts a duration to a whole number of bins.
fn to_bins(seconds: f64, bin_width_ms: u32, what: &str) -> Result<u32, PipelineError> {
    let bins = seconds * 1000.0 / f64::from(bin_width_ms);
    let rounded = bins.round();
    if !(bins.is_finite() && rounded >= 1.0 && (bins - rounded).abs() < 1e-9) {
        return Err(PipelineError::InvalidParameter(format!(
            "{what} {seconds} s is not a positive multiple of the {bin_width_ms} ms bin width"
        )));
    }
    Ok(rounded as u32)
}

impl WindowSpec {
    pub fn validate(&self, bin_width_ms: u32) -> Result<(), PipelineError> {
        if self.stride_s.is_nan() || self.stride_s <= 0.0 {
            return Err(PipelineError::InvalidParameter("stride must be positive".into()));
        }
        to_bins(self.stride_s, bin_width_ms, "stride")?;
        if self.durations_s.is_empty() {
            return Err(PipelineError::InvalidParameter("no window durations given".into()));
        }
        for &d in &self.durations_s {
            to_bins(d, bin_width_ms, "window duration")?;
        }
        Ok(())
    }
}

fn check_range(duration_s: f64) -> Result<(), PipelineError> {
    if (MIN_WINDOW_S..=MAX_WINDOW_S).contains(&duration_s) {
        Ok(())
    } else {
        Err(PipelineError::InvalidParameter(format!(
            "window duration {duration_s} s outside [{MIN_WINDOW_S}, {MAX_WINDOW_S}] s"
        )))
    }
}

/// Number of windows of `duration` bins that fit `total` bins at `stride`.
pub fn window_count(total: u32, duration: u32, stride: u32) -> u32 {
    if duration > total {
        0
    } else {
        (total - duration) / stride + 1
    }
}

/// Cuts sliding windows from one node, for both directions. Windows start
/// at offsets 0, stride, 2·stride, … from the trace start; a duration
/// longer than the series yields no windows; a feasible duration outside
/// the 1–60 s profile range is rejected.
pub fn extract_windows(
    node: &PrefixNode,
    spec: &WindowSpec,
    source_trace: &str,
) -> Result<Vec<CrossTrafficProfile>, PipelineError> {
    let bin_width_ms = node.up.bin_width_ms;
    spec.validate(bin_width_ms)?;
    let stride = to_bins(spec.stride_s, bin_width_ms, "stride")?;
    let total = node.up.len() as u32;
    let bin_s = f64::from(bin_width_ms) / 1000.0;

    let mut out = Vec::new();
    for direction in Direction::BOTH {
        let series = node.series(direction);
        let paired = node.series(match direction {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        });
        for &duration_s in &spec.durations_s {
            let duration = to_bins(duration_s, bin_width_ms, "window duration")?;
            if duration > total {
                continue;
            }
            check_range(duration_s)?;
            let windows = window_count(total, duration, stride);
            let hosts = node.host_activity(direction).count_windows(windows, duration, stride);
            let flows = node.flow_activity(direction).count_windows(windows, duration, stride);
            for k in 0..windows {
                let start = k * stride;
                let range = start..start + duration;
                let bins = series.bins[range.start as usize..range.end as usize].to_vec();
                let ctx = WindowContext {
                    host_count: hosts[k as usize],
                    flow_count: flows[k as usize],
                    paired_bytes: paired.bins[range.start as usize..range.end as usize]
                        .iter()
                        .sum(),
                };
                out.push(CrossTrafficProfile::new(
                    source_trace,
                    node.prefix,
                    direction,
                    f64::from(start) * bin_s,
                    bin_width_ms,
                    bins,
                    &ctx,
                )?);
            }
        }
    }
    Ok(out)
}

/// Windows of every node in the tree, sorted by id.
pub fn extract_all(
    root: &PrefixNode,
    spec: &WindowSpec,
    source_trace: &str,
) -> Result<Vec<CrossTrafficProfile>, PipelineError> {
    use rayon::prelude::*;
    let nodes: Vec<&PrefixNode> = root.iter().collect();
    let per_node: Vec<Vec<CrossTrafficProfile>> = nodes
        .par_iter()
        .map(|n| extract_windows(n, spec, source_trace))
        .collect::<Result<_, _>>()?;
    let mut out: Vec<CrossTrafficProfile> = per_node.into_iter().flatten().collect();
    out.sort_by(|a, b| a.id.cmp(&b.id));
    out.dedup_by(|a, b| a.id == b.id);
    Ok(out)
}
