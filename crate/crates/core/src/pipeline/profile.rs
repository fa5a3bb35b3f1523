use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::metrics::{compute_metrics, ProfileMetrics, WindowContext};
use super::series::ByteSeries;
use super::PipelineError;
use crate::net::{Direction, Ipv4Prefix};

pub const MIN_WINDOW_S: f64 = 1.0;
pub const MAX_WINDOW_S: f64 = 60.0;

/// A windowed byte series cut from one prefix-tree node and direction,
/// together with its indexed attributes. Field order matches the JSONL
/// layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossTrafficProfile {
    pub id: String,
    pub source_trace: String,
    pub prefix: Ipv4Prefix,
    pub direction: Direction,
    /// Offset of the window from the trace start.
    pub window_start_s: f64,
    pub window_duration_s: f64,
    pub bin_width_ms: u32,
    /// Raw byte counts per bin.
    pub bins: Vec<u64>,
    pub metrics: ProfileMetrics,
}

/// Hex-encoded, truncated SHA-256 of the profile's identifying content.
pub fn content_id(
    source_trace: &str,
    prefix: &Ipv4Prefix,
    direction: Direction,
    window_start_s: f64,
    window_duration_s: f64,
    bin_width_ms: u32,
    bins: &[u64],
) -> String {
    let mut h = Sha256::new();
    h.update(source_trace.as_bytes());
    h.update([0]);
    h.update(prefix.to_string().as_bytes());
    h.update([0]);
    h.update(direction.as_str().as_bytes());
    h.update([0]);
    h.update(window_start_s.to_bits().to_le_bytes());
    h.update(window_duration_s.to_bits().to_le_bytes());
    h.update(bin_width_ms.to_le_bytes());
    let raw: Vec<u8> = bins.iter().flat_map(|b| b.to_le_bytes()).collect();
    h.update(&raw);
    let digest = h.finalize();
    hex::encode(&digest[..8])
}

impl CrossTrafficProfile {
    pub fn new(
        source_trace: impl Into<String>,
        prefix: Ipv4Prefix,
        direction: Direction,
        window_start_s: f64,
        bin_width_ms: u32,
        bins: Vec<u64>,
        ctx: &WindowContext,
    ) -> Result<Self, PipelineError> {
        let source_trace = source_trace.into();
        let window_duration_s = bins.len() as f64 * f64::from(bin_width_ms) / 1000.0;
        let series = ByteSeries {
            bin_width_ms,
            start_time: window_start_s,
            bins,
        };
        let metrics = compute_metrics(&series, ctx)?;
        let id = content_id(
            &source_trace,
            &prefix,
            direction,
            window_start_s,
            window_duration_s,
            bin_width_ms,
            &series.bins,
        );
        Ok(Self {
            id,
            source_trace,
            prefix,
            direction,
            window_start_s,
            window_duration_s,
            bin_width_ms,
            bins: series.bins,
            metrics,
        })
    }

    /// The window as a series whose start is the offset from the trace start.
    pub fn series(&self) -> ByteSeries {
        ByteSeries {
            bin_width_ms: self.bin_width_ms,
            start_time: self.window_start_s,
            bins: self.bins.clone(),
        }
    }

    pub fn expected_id(&self) -> String {
        content_id(
            &self.source_trace,
            &self.prefix,
            self.direction,
            self.window_start_s,
            self.window_duration_s,
            self.bin_width_ms,
            &self.bins,
        )
    }

    pub fn total_bytes(&self) -> u64 {
        self.bins.iter().sum()
    }

    /// Replaces the bins, recomputing metrics and id.
    pub fn with_bins(&self, bins: Vec<u64>) -> Self {
        let previous_total = self.total_bytes();
        let mut out = Self {
            bins,
            ..self.clone()
        };
        out.metrics = self.metrics.recompute(&out.bins, out.bin_width_ms, previous_total);
        out.id = out.expected_id();
        out
    }

    /// Checks structural invariants of a profile read from outside.
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.bins.is_empty() {
            return Err(PipelineError::EmptySeries);
        }
        if self.bin_width_ms == 0 {
            return Err(PipelineError::InvalidParameter("bin_width_ms must be positive".into()));
        }
        let duration = self.bins.len() as f64 * f64::from(self.bin_width_ms) / 1000.0;
        if (duration - self.window_duration_s).abs() > 1e-9 {
            return Err(PipelineError::InvalidParameter(format!(
                "profile {}: {} bins of {} ms do not span {} s",
                self.id,
                self.bins.len(),
                self.bin_width_ms,
                self.window_duration_s
            )));
        }
        Ok(())
    }
}

/// Writes one JSON object per line.
pub fn write_jsonl<W: Write>(mut w: W, profiles: &[CrossTrafficProfile]) -> std::io::Result<()> {
    for p in profiles {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

#[derive(Debug, thiserror::Error)]
pub enum JsonlError {
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: {source}")]
    Invalid {
        line: usize,
        #[source]
        source: PipelineError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Reads profiles, one per non-empty line. Line numbers start at 1.
pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<CrossTrafficProfile>, JsonlError> {
    let mut out = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let p: CrossTrafficProfile = serde_json::from_str(&line)
            .map_err(|source| JsonlError::Parse { line: idx + 1, source })?;
        p.validate()
            .map_err(|source| JsonlError::Invalid { line: idx + 1, source })?;
        out.push(p);
    }
    Ok(out)
}
