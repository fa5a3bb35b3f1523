use std::collections::BTreeMap;
use std::net::Ipv4Addr;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::ingest::{HostGroup, TraceSpan};
use crate::net::Direction;

/// Byte counts at a fixed bin width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ByteSeries {
    pub bin_width_ms: u32,
    /// Absolute time of the first bin's left edge, in seconds.
    pub start_time: f64,
    pub bins: Vec<u64>,
}

impl ByteSeries {
    pub fn zeros(bin_width_ms: u32, start_time: f64, len: usize) -> Self {
        Self {
            bin_width_ms,
            start_time,
            bins: vec![0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.bins.len() as f64 * f64::from(self.bin_width_ms) / 1000.0
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().sum()
    }

    pub fn is_aligned_with(&self, other: &ByteSeries) -> bool {
        self.bin_width_ms == other.bin_width_ms
            && self.start_time == other.start_time
            && self.bins.len() == other.bins.len()
    }

    /// Elementwise sum. Callers check alignment first.
    pub(crate) fn add_assign(&mut self, other: &ByteSeries) {
        debug_assert!(self.is_aligned_with(other));
        for (a, b) in self.bins.iter_mut().zip(&other.bins) {
            *a += b;
        }
    }

    /// Throughput of each bin in bits per second.
    pub fn throughput_bps(&self) -> Vec<f64> {
        let secs = f64::from(self.bin_width_ms) / 1000.0;
        self.bins.iter().map(|&b| b as f64 * 8.0 / secs).collect()
    }
}

/// For each key, the sorted bin indices in which it carried traffic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Activity<K: Ord> {
    bins: BTreeMap<K, Vec<u32>>,
}

impl<K: Ord> Default for Activity<K> {
    fn default() -> Self {
        Self {
            bins: BTreeMap::new(),
        }
    }
}

impl<K: Ord + Copy> Activity<K> {
    pub fn record(&mut self, key: K, bin: u32) {
        let list = self.bins.entry(key).or_default();
        match list.last() {
            Some(&last) if last == bin => {}
            Some(&last) if last < bin => list.push(bin),
            _ => {
                if let Err(pos) = list.binary_search(&bin) {
                    list.insert(pos, bin);
                }
            }
        }
    }

    pub fn merge(&mut self, other: &Activity<K>) {
        for (key, bins) in &other.bins {
            let mine = self.bins.entry(*key).or_default();
            if mine.is_empty() {
                mine.clone_from(bins);
                continue;
            }
            let mut merged = Vec::with_capacity(mine.len() + bins.len());
            let (mut i, mut j) = (0, 0);
            while i < mine.len() || j < bins.len() {
                let next = match (mine.get(i), bins.get(j)) {
                    (Some(&a), Some(&b)) if a < b => {
                        i += 1;
                        a
                    }
                    (Some(&a), Some(&b)) if b < a => {
                        j += 1;
                        b
                    }
                    (Some(&a), Some(_)) => {
                        i += 1;
                        j += 1;
                        a
                    }
                    (Some(&a), None) => {
                        i += 1;
                        a
                    }
                    (None, Some(&b)) => {
                        j += 1;
                        b
                    }
                    (None, None) => unreachable!(),
                };
                merged.push(next);
            }
            *mine = merged;
        }
    }

    /// Number of keys with at least one active bin inside `window`.
    pub fn count_active(&self, window: Range<u32>) -> u64 {
        self.bins
            .values()
            .filter(|bins| {
                let pos = bins.partition_point(|&b| b < window.start);
                bins.get(pos).is_some_and(|&b| b < window.end)
            })
            .count() as u64
    }

    /// Active key counts for every window `k·stride .. k·stride + duration`,
    /// `k < windows`, in one pass over the recorded bins.
    pub fn count_windows(&self, windows: u32, duration: u32, stride: u32) -> Vec<u64> {
        let mut diff = vec![0i64; windows as usize + 1];
        for bins in self.bins.values() {
            let mut next = 0u32;
            for &b in bins {
                let lo = (b + 1).saturating_sub(duration).div_ceil(stride).max(next);
                let hi = (b / stride).min(windows.saturating_sub(1));
                if windows == 0 || lo > hi {
                    continue;
                }
                diff[lo as usize] += 1;
                diff[hi as usize + 1] -= 1;
                next = hi + 1;
            }
        }
        let mut running = 0i64;
        diff[..windows as usize]
            .iter()
            .map(|d| {
                running += d;
                running as u64
            })
            .collect()
    }

    pub fn keys(&self) -> impl Iterator<Item = &K> {
        self.bins.keys()
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }
}

/// One host's up/down series plus the per-direction flow activity needed
/// for the heterogeneity metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct HostSeries {
    pub host: Ipv4Addr,
    pub up: ByteSeries,
    pub down: ByteSeries,
    pub up_flows: Activity<u64>,
    pub down_flows: Activity<u64>,
}

impl HostSeries {
    pub fn series(&self, direction: Direction) -> &ByteSeries {
        match direction {
            Direction::Up => &self.up,
            Direction::Down => &self.down,
        }
    }

    pub fn flows(&self, direction: Direction) -> &Activity<u64> {
        match direction {
            Direction::Up => &self.up_flows,
            Direction::Down => &self.down_flows,
        }
    }
}

/// Bins a host's packets into up and down series. Bins are anchored at the
/// trace start so every host shares the same bin boundaries.
pub fn to_timeseries(group: &HostGroup, span: &TraceSpan, bin_width_ms: u32) -> (ByteSeries, ByteSeries) {
    let s = to_host_series(group, span, bin_width_ms);
    (s.up, s.down)
}

pub fn to_host_series(group: &HostGroup, span: &TraceSpan, bin_width_ms: u32) -> HostSeries {
    assert!(bin_width_ms > 0, "bin width must be positive");
    let n = span.bin_count(bin_width_ms);
    let mut out = HostSeries {
        host: group.host,
        up: ByteSeries::zeros(bin_width_ms, span.start_s, n),
        down: ByteSeries::zeros(bin_width_ms, span.start_s, n),
        up_flows: Activity::default(),
        down_flows: Activity::default(),
    };
    for p in &group.packets {
        let bin = span.bin_of(p.timestamp, bin_width_ms);
        let (series, flows) = match p.direction {
            Direction::Up => (&mut out.up, &mut out.up_flows),
            Direction::Down => (&mut out.down, &mut out.down_flows),
        };
        series.bins[bin] += u64::from(p.wire_bytes);
        flows.record(p.flow_key, bin as u32);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::HostPacket;

    fn group(packets: &[(f64, Direction, u32)]) -> HostGroup {
        HostGroup {
            host: Ipv4Addr::new(10, 0, 0, 1),
            packets: packets
                .iter()
                .map(|&(timestamp, direction, wire_bytes)| HostPacket {
                    timestamp,
                    direction,
                    wire_bytes,
                    flow_key: 7,
                })
                .collect(),
        }
    }

    #[test]
    fn binning_arithmetic() {
        let g = group(&[(0.05, Direction::Down, 1000), (0.12, Direction::Down, 500)]);
        let (up, down) = to_timeseries(&g, &TraceSpan::new(0.0, 0.2), 100);
        assert_eq!(down.bins, vec![1000, 500]);
        assert_eq!(up.bins, vec![0, 0]);
    }

    #[test]
    fn empty_group_gives_zero_bins() {
        let (up, down) = to_timeseries(&group(&[]), &TraceSpan::new(0.0, 1.0), 100);
        assert_eq!(up.bins, vec![0; 10]);
        assert_eq!(down.bins, vec![0; 10]);
    }

    #[test]
    fn same_bin_sums() {
        let g = group(&[(0.01, Direction::Up, 10), (0.02, Direction::Up, 20)]);
        let (up, _) = to_timeseries(&g, &TraceSpan::new(0.0, 0.1), 100);
        assert_eq!(up.bins, vec![30]);
    }

    #[test]
    fn activity_counts_and_merges() {
        let mut a = Activity::default();
        a.record(1u64, 0);
        a.record(1, 5);
        a.record(2, 3);
        a.record(2, 1);
        assert_eq!(a.count_active(0..1), 1);
        assert_eq!(a.count_active(1..4), 1);
        assert_eq!(a.count_active(0..6), 2);
        assert_eq!(a.count_active(6..9), 0);

        let mut b = Activity::default();
        b.record(1u64, 2);
        b.record(3, 8);
        a.merge(&b);
        assert_eq!(a.len(), 3);
        assert_eq!(a.count_active(2..3), 1);
        assert_eq!(a.count_active(8..9), 1);
    }

    proptest::proptest! {
        #[test]
        fn window_counts_match_per_window_scan(
            entries in proptest::collection::vec((0u64..20, 0u32..120), 0..200),
            duration in 1u32..40,
            stride in 1u32..15,
        ) {
            let mut a = Activity::default();
            for (k, b) in entries {
                a.record(k, b);
            }
            let total = 120;
            let windows = if duration > total { 0 } else { (total - duration) / stride + 1 };
            let fast = a.count_windows(windows, duration, stride);
            let slow: Vec<u64> = (0..windows)
                .map(|k| a.count_active(k * stride..k * stride + duration))
                .collect();
            proptest::prop_assert_eq!(fast, slow);
        }
    }
}
