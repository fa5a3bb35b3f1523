use std::collections::BTreeMap;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use super::{HostGroup, HostPacket, IngestConfig, PacketRecord};
use crate::net::Direction;

/// Time extent of a trace. The end is exclusive, so a span built from
/// records always contains its last packet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSpan {
    pub start_s: f64,
    pub duration_ns: u64,
}

impl TraceSpan {
    pub fn new(start_s: f64, duration_s: f64) -> Self {
        Self {
            start_s,
            duration_ns: (duration_s * 1e9).round().max(0.0) as u64,
        }
    }

    pub fn from_records(records: &[PacketRecord]) -> Option<Self> {
        let first = records.iter().map(|r| r.timestamp).reduce(f64::min)?;
        let last = records.iter().map(|r| r.timestamp).reduce(f64::max)?;
        Some(Self {
            start_s: first,
            duration_ns: offset_ns(first, last) + 1,
        })
    }

    pub fn duration_s(&self) -> f64 {
        self.duration_ns as f64 / 1e9
    }

    /// Number of bins of `bin_width_ms` needed to cover the span (at least one).
    pub fn bin_count(&self, bin_width_ms: u32) -> usize {
        let bin_ns = u64::from(bin_width_ms) * 1_000_000;
        self.duration_ns.div_ceil(bin_ns).max(1) as usize
    }

    /// Bin index of an instant, clamped into `[0, bin_count)`.
    pub fn bin_of(&self, timestamp: f64, bin_width_ms: u32) -> usize {
        let bin_ns = u64::from(bin_width_ms) * 1_000_000;
        let idx = (offset_ns(self.start_s, timestamp) / bin_ns) as usize;
        idx.min(self.bin_count(bin_width_ms) - 1)
    }
}

fn offset_ns(start: f64, t: f64) -> u64 {
    ((t - start) * 1e9).round().max(0.0) as u64
}

/// Result of splitting a trace into per-host groups.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Decomposition {
    pub groups: BTreeMap<Ipv4Addr, HostGroup>,
    pub dropped_packets: u64,
    pub dropped_bytes: u64,
    /// Extent of the whole input, dropped packets included.
    pub span: Option<TraceSpan>,
}

impl Decomposition {
    pub fn retained_bytes(&self) -> u64 {
        self.groups.values().map(HostGroup::bytes).sum()
    }
}

impl IngestConfig {
    /// The internal host a packet is attributed to, and its direction, or
    /// `None` when the packet is dropped.
    pub fn classify(&self, r: &PacketRecord) -> Option<(Ipv4Addr, Direction)> {
        match (self.is_internal(r.src_addr), self.is_internal(r.dst_addr)) {
            (true, false) => Some((r.src_addr, Direction::Up)),
            (false, true) => Some((r.dst_addr, Direction::Down)),
            // Intra-network traffic is charged to the sender when kept.
            (true, true) if !self.drop_non_crossing => Some((r.src_addr, Direction::Up)),
            _ => None,
        }
    }
}

/// Groups crossing packets by their internal endpoint.
///
/// Input is expected in time order; out-of-order input is stably sorted
/// first so that every group stays time ordered.
pub fn decompose(records: &[PacketRecord], cfg: &IngestConfig) -> Decomposition {
    let sorted;
    let records = if records
        .windows(2)
        .all(|w| w[0].timestamp <= w[1].timestamp)
    {
        records
    } else {
        let mut v = records.to_vec();
        v.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        sorted = v;
        &sorted
    };

    let mut out = Decomposition {
        span: TraceSpan::from_records(records),
        ..Default::default()
    };
    for r in records {
        match cfg.classify(r) {
            Some((host, direction)) => out
                .groups
                .entry(host)
                .or_insert_with(|| HostGroup::new(host))
                .packets
                .push(HostPacket {
                    timestamp: r.timestamp,
                    direction,
                    wire_bytes: r.wire_bytes,
                    flow_key: r.flow_key(),
                }),
            None => {
                out.dropped_packets += 1;
                out.dropped_bytes += u64::from(r.wire_bytes);
            }
        }
    }
    out
}
