use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SimError;

pub const DEFAULT_MTU: u32 = 1500;
pub const DEFAULT_QUEUE_PKTS: u32 = 1000;
pub const TELEMETRY_BINS_MS: [u32; 3] = [10, 100, 1000];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Aqm {
    Pfifo,
    Codel,
    FqCodel,
}

impl Aqm {
    pub const ALL: [Aqm; 3] = [Aqm::Pfifo, Aqm::Codel, Aqm::FqCodel];

    pub fn as_str(self) -> &'static str {
        match self {
            Aqm::Pfifo => "pfifo",
            Aqm::Codel => "codel",
            Aqm::FqCodel => "fq_codel",
        }
    }
}

impl fmt::Display for Aqm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown AQM `{0}` (expected pfifo, codel or fq_codel)")]
pub struct UnknownAqm(pub String);

impl FromStr for Aqm {
    type Err = UnknownAqm;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "pfifo" => Ok(Aqm::Pfifo),
            "codel" => Ok(Aqm::Codel),
            "fq_codel" | "fqcodel" => Ok(Aqm::FqCodel),
            _ => Err(UnknownAqm(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BottleneckConfig {
    pub shaping_rate_bps: f64,
    /// Full round trip, split evenly between the two directions.
    pub base_latency_ms: f64,
    pub queue_capacity_pkts: u32,
    pub aqm: Aqm,
    pub token_bucket_burst_bytes: u32,
    pub mtu_bytes: u32,
    /// Shape the ACK path with the same token bucket parameters.
    #[serde(default)]
    pub shape_uplink: bool,
}

impl BottleneckConfig {
    pub fn new(shaping_rate_bps: f64, base_latency_ms: f64, aqm: Aqm) -> Self {
        Self {
            shaping_rate_bps,
            base_latency_ms,
            queue_capacity_pkts: DEFAULT_QUEUE_PKTS,
            aqm,
            token_bucket_burst_bytes: 2 * DEFAULT_MTU,
            mtu_bytes: DEFAULT_MTU,
            shape_uplink: false,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |field: &'static str, reason: String| Err(SimError::InvalidConfig { field, reason });
        if !(self.shaping_rate_bps.is_finite() && self.shaping_rate_bps >= 1.0) {
            return bad("shaping_rate_bps", format!("must be at least 1 bps, got {}", self.shaping_rate_bps));
        }
        if !(self.base_latency_ms.is_finite() && self.base_latency_ms >= 0.0) {
            return bad("base_latency_ms", format!("must be non-negative, got {}", self.base_latency_ms));
        }
        if self.queue_capacity_pkts == 0 {
            return bad("queue_capacity_pkts", "must be at least 1".into());
        }
        if self.mtu_bytes <= HEADER_BYTES {
            return bad("mtu_bytes", format!("must exceed the {HEADER_BYTES} byte header"));
        }
        if self.token_bucket_burst_bytes < self.mtu_bytes {
            return bad(
                "token_bucket_burst_bytes",
                format!("{} is below the MTU {}", self.token_bucket_burst_bytes, self.mtu_bytes),
            );
        }
        Ok(())
    }

    pub(crate) fn rate_bps(&self) -> u64 {
        self.shaping_rate_bps.round() as u64
    }

    /// One-way delays (down, up) in ns; they add up to the base latency.
    pub(crate) fn one_way_ns(&self) -> (u64, u64) {
        let total = (self.base_latency_ms * 1e6).round() as u64;
        let down = total / 2;
        (down, total - down)
    }
}

/// TCP/IP header bytes carried by every app packet.
pub const HEADER_BYTES: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AppModel {
    BulkAimd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppFlowConfig {
    pub model: AppModel,
    pub initial_cwnd_pkts: u32,
    pub init_ssthresh_pkts: u32,
    pub duration_s: f64,
    pub seed: u64,
}

impl AppFlowConfig {
    pub fn new(duration_s: f64, seed: u64) -> Self {
        Self {
            model: AppModel::BulkAimd,
            initial_cwnd_pkts: 10,
            init_ssthresh_pkts: 64,
            duration_s,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(SimError::InvalidConfig {
                field: "duration_s",
                reason: format!("must be positive, got {}", self.duration_s),
            });
        }
        if self.initial_cwnd_pkts == 0 {
            return Err(SimError::InvalidConfig {
                field: "initial_cwnd_pkts",
                reason: "must be at least 1".into(),
            });
        }
        if self.init_ssthresh_pkts < 2 {
            return Err(SimError::InvalidConfig {
                field: "init_ssthresh_pkts",
                reason: "must be at least 2".into(),
            });
        }
        Ok(())
    }

    pub(crate) fn duration_ns(&self) -> u64 {
        (self.duration_s * 1e9).round() as u64
    }
}

pub fn validate_telemetry_bin(ms: u32) -> Result<(), SimError> {
    if TELEMETRY_BINS_MS.contains(&ms) {
        Ok(())
    } else {
        Err(SimError::InvalidConfig {
            field: "telemetry_bin_ms",
            reason: format!("{ms} is not one of 10, 100, 1000"),
        })
    }
}
