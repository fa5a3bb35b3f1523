//! Pre-processing stages 2–4: host time series, prefix-tree aggregation,
//! sliding windows and attribute metrics.

mod metrics;
mod profile;
mod series;
mod tree;
mod window;

use std::net::Ipv4Addr;

pub use self::metrics::{compute_metrics, nearest_rank, ProfileMetrics, WindowContext};
pub use self::profile::{
    content_id, read_jsonl, write_jsonl, CrossTrafficProfile, JsonlError, MAX_WINDOW_S,
    MIN_WINDOW_S,
};
pub use self::series::{to_host_series, to_timeseries, Activity, ByteSeries, HostSeries};
pub use self::tree::{build_prefix_tree, PrefixNode, TREE_LEVELS};
pub use self::window::{extract_all, extract_windows, window_count, WindowSpec};

use crate::ingest::Decomposition;

pub const DEFAULT_BIN_WIDTH_MS: u32 = 100;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("series is empty")]
    EmptySeries,
    #[error("no host series to aggregate")]
    NoHosts,
    #[error("series of host {host} has {found} bins, expected {expected}")]
    MisalignedSeries {
        host: Ipv4Addr,
        expected: usize,
        found: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Parameters of the series → tree → windows transformation.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformParams {
    pub bin_width_ms: u32,
    pub windows: WindowSpec,
}

/// Runs stages 2–4 over a decomposed trace and returns profiles sorted by id.
/// A trace without retained hosts yields no profiles.
pub fn transform(
    decomposition: &Decomposition,
    params: &TransformParams,
    source_trace: &str,
) -> Result<(Option<PrefixNode>, Vec<CrossTrafficProfile>), PipelineError> {
    if params.bin_width_ms == 0 {
        return Err(PipelineError::InvalidParameter("bin width must be positive".into()));
    }
    params.windows.validate(params.bin_width_ms)?;
    let Some(span) = decomposition.span else {
        return Ok((None, Vec::new()));
    };
    if decomposition.groups.is_empty() {
        return Ok((None, Vec::new()));
    }
    let hosts: Vec<HostSeries> = decomposition
        .groups
        .values()
        .map(|g| to_host_series(g, &span, params.bin_width_ms))
        .collect();
    let root = build_prefix_tree(&hosts)?;
    let profiles = extract_all(&root, &params.windows, source_trace)?;
    Ok((Some(root), profiles))
}
