use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::{AppFlowConfig, BottleneckConfig};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowCounters {
    pub injected_pkts: u64,
    pub injected_bytes: u64,
    pub delivered_pkts: u64,
    pub delivered_bytes: u64,
    pub dropped_pkts: u64,
    pub dropped_bytes: u64,
    /// Queued or propagating when the run ended.
    pub in_flight_pkts: u64,
    pub in_flight_bytes: u64,
}

impl FlowCounters {
    pub(crate) fn inject(&mut self, bytes: u32) {
        self.injected_pkts += 1;
        self.injected_bytes += u64::from(bytes);
    }

    pub(crate) fn deliver(&mut self, bytes: u32) {
        self.delivered_pkts += 1;
        self.delivered_bytes += u64::from(bytes);
    }

    pub(crate) fn drop(&mut self, bytes: u32) {
        self.dropped_pkts += 1;
        self.dropped_bytes += u64::from(bytes);
    }

    pub(crate) fn in_flight(&mut self, bytes: u32) {
        self.in_flight_pkts += 1;
        self.in_flight_bytes += u64::from(bytes);
    }

    /// injected = delivered + dropped + in flight, in packets and bytes.
    pub fn is_conserved(&self) -> bool {
        self.injected_pkts == self.delivered_pkts + self.dropped_pkts + self.in_flight_pkts
            && self.injected_bytes == self.delivered_bytes + self.dropped_bytes + self.in_flight_bytes
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueStats {
    /// Time-weighted mean number of queued packets per bin.
    pub mean_qlen_pkts: Vec<f64>,
    pub drops: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RttSummary {
    pub samples: u64,
    pub min_ms: Option<f64>,
    pub mean_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SenderStats {
    pub losses: u64,
    pub reductions: u64,
    pub timeouts: u64,
    pub final_cwnd_pkts: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub bottleneck: BottleneckConfig,
    pub app: AppFlowConfig,
    pub ctp_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub telemetry_bin_ms: u32,
    /// App payload delivered to the receiver per bin, in bits per second.
    pub throughput_bps: Vec<f64>,
    /// Cross-traffic wire bytes delivered per bin, in bits per second.
    pub cross_throughput_bps: Vec<f64>,
    /// Mean RTT of the ACKs that arrived in each bin; `None` when there were none.
    pub rtt_ms: Vec<Option<f64>>,
    pub queue_stats: QueueStats,
    pub rtt: RttSummary,
    pub app: FlowCounters,
    pub cross: FlowCounters,
    pub sender: SenderStats,
    pub config_echo: ConfigEcho,
}

impl SimTrace {
    pub fn bin_s(&self) -> f64 {
        f64::from(self.telemetry_bin_ms) / 1000.0
    }

    pub fn duration_s(&self) -> f64 {
        self.config_echo.app.duration_s
    }

    /// Mean app throughput over whole bins starting in `[from_s, to_s)`.
    pub fn mean_throughput_bps(&self, from_s: f64, to_s: f64) -> f64 {
        let bin = self.bin_s();
        let lo = (from_s / bin).ceil().max(0.0) as usize;
        let hi = ((to_s / bin).floor() as usize).min(self.throughput_bps.len());
        if hi <= lo {
            return 0.0;
        }
        self.throughput_bps[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
    }

    /// Whole-run mean app throughput.
    pub fn overall_throughput_bps(&self) -> f64 {
        self.mean_throughput_bps(0.0, f64::INFINITY)
    }

    /// `time_s,throughput_bps,rtt_ms,qlen_pkts,drops`; missing RTTs are empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time_s,throughput_bps,rtt_ms,qlen_pkts,drops\n");
        let bin = self.bin_s();
        for i in 0..self.throughput_bps.len() {
            let rtt = self.rtt_ms[i].map(|r| r.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{}",
                i as f64 * bin,
                self.throughput_bps[i],
                rtt,
                self.queue_stats.mean_qlen_pkts[i],
                self.queue_stats.drops[i]
            )
            .expect("writing to a String cannot fail");
        }
        out
    }
}

/// Per-bin accumulators filled while the simulation runs.
#[derive(Debug, Clone)]
pub(crate) struct Telemetry {
    bin_ns: u64,
    end_ns: u64,
    app_payload: Vec<u64>,
    cross_bytes: Vec<u64>,
    rtt_sum: Vec<u128>,
    rtt_count: Vec<u64>,
    queue_area: Vec<u128>,
    drops: Vec<u64>,
    qlen: u64,
    q_since: u64,
    rtt_total: u128,
    rtt_samples: u64,
    rtt_min: Option<u64>,
}

impl Telemetry {
    pub fn new(bin_ms: u32, end_ns: u64) -> Self {
        let bin_ns = u64::from(bin_ms) * 1_000_000;
        let n = end_ns.div_ceil(bin_ns) as usize;
        Self {
            bin_ns,
            end_ns,
            app_payload: vec![0; n],
            cross_bytes: vec![0; n],
            rtt_sum: vec![0; n],
            rtt_count: vec![0; n],
            queue_area: vec![0; n],
            drops: vec![0; n],
            qlen: 0,
            q_since: 0,
            rtt_total: 0,
            rtt_samples: 0,
            rtt_min: None,
        }
    }

    fn bin(&self, t: u64) -> usize {
        (t / self.bin_ns) as usize
    }

    pub fn app_delivered(&mut self, t: u64, payload: u32) {
        let b = self.bin(t);
        self.app_payload[b] += u64::from(payload);
    }

    pub fn cross_delivered(&mut self, t: u64, bytes: u32) {
        let b = self.bin(t);
        self.cross_bytes[b] += u64::from(bytes);
    }

    pub fn rtt(&mut self, t: u64, rtt_ns: u64) {
        let b = self.bin(t);
        self.rtt_sum[b] += u128::from(rtt_ns);
        self.rtt_count[b] += 1;
        self.rtt_total += u128::from(rtt_ns);
        self.rtt_samples += 1;
        self.rtt_min = Some(self.rtt_min.map_or(rtt_ns, |m| m.min(rtt_ns)));
    }

    pub fn drop(&mut self, t: u64) {
        let b = self.bin(t);
        self.drops[b] += 1;
    }

    fn integrate_queue(&mut self, until: u64) {
        let mut t = self.q_since;
        while t < until {
            let b = self.bin(t);
            let edge = ((b as u64 + 1) * self.bin_ns).min(until);
            self.queue_area[b] += u128::from(self.qlen) * u128::from(edge - t);
            t = edge;
        }
        self.q_since = until;
    }

    pub fn queue_len(&mut self, t: u64, len: u64) {
        if len != self.qlen {
            self.integrate_queue(t);
            self.qlen = len;
        }
    }

    pub fn finish(mut self, echo: ConfigEcho, app: FlowCounters, cross: FlowCounters, sender: SenderStats) -> SimTrace {
        self.integrate_queue(self.end_ns);
        let n = self.app_payload.len();
        let bin_len = |i: usize| {
            let start = i as u64 * self.bin_ns;
            (self.end_ns.min(start + self.bin_ns) - start) as f64
        };
        let rate = |bytes: u64, i: usize| bytes as f64 * 8.0 * 1e9 / bin_len(i);
        let ms = |ns: f64| ns / 1e6;
        SimTrace {
            telemetry_bin_ms: (self.bin_ns / 1_000_000) as u32,
            throughput_bps: (0..n).map(|i| rate(self.app_payload[i], i)).collect(),
            cross_throughput_bps: (0..n).map(|i| rate(self.cross_bytes[i], i)).collect(),
            rtt_ms: (0..n)
                .map(|i| {
                    (self.rtt_count[i] > 0)
                        .then(|| ms(self.rtt_sum[i] as f64 / self.rtt_count[i] as f64))
                })
                .collect(),
            queue_stats: QueueStats {
                mean_qlen_pkts: (0..n).map(|i| self.queue_area[i] as f64 / bin_len(i)).collect(),
                drops: self.drops,
            },
            rtt: RttSummary {
                samples: self.rtt_samples,
                min_ms: self.rtt_min.map(|m| ms(m as f64)),
                mean_ms: (self.rtt_samples > 0)
                    .then(|| ms(self.rtt_total as f64 / self.rtt_samples as f64)),
            },
            app,
            cross,
            sender,
            config_echo: echo,
        }
    }
}
