//! Trace ingestion: capture parsing and per-host decomposition.

mod csv;
mod decompose;
mod pcap;

use std::fs;
use std::net::Ipv4Addr;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::net::{Direction, Ipv4Prefix, Protocol};

pub use self::csv::{encode_packet_csv, parse_packet_csv};
pub use self::decompose::{decompose, Decomposition, TraceSpan};
pub use self::pcap::{encode_pcap, parse_pcap};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("I/O error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed capture at byte offset {offset}: {reason}")]
    Malformed { offset: u64, reason: String },
    #[error("truncated packet record at byte offset {offset}")]
    Truncated { offset: u64 },
    #[error("malformed CSV line {line} (byte offset {offset}): {reason}")]
    MalformedCsv { line: usize, offset: u64, reason: String },
    #[error("invalid ingest configuration: {0}")]
    Config(String),
}

/// One captured IPv4 packet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketRecord {
    /// Capture time in seconds.
    pub timestamp: f64,
    pub src_addr: Ipv4Addr,
    pub dst_addr: Ipv4Addr,
    pub src_port: u16,
    pub dst_port: u16,
    pub protocol: Protocol,
    /// Original frame length on the wire.
    pub wire_bytes: u32,
}

impl PacketRecord {
    pub fn flow_key(&self) -> u64 {
        crate::net::flow_key(
            self.src_addr,
            self.src_port,
            self.dst_addr,
            self.dst_port,
            self.protocol,
        )
    }
}

/// Frames that were seen in the capture but produced no [`PacketRecord`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipCounts {
    pub ipv6: u64,
    /// ARP and every other non-IP ethertype.
    pub non_ip: u64,
    /// IP frames whose captured bytes end before the IPv4 header does.
    pub undecodable: u64,
}

impl SkipCounts {
    pub fn total(&self) -> u64 {
        self.ipv6 + self.non_ip + self.undecodable
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedTrace {
    pub records: Vec<PacketRecord>,
    pub skipped: SkipCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TraceFormat {
    Pcap,
    PacketCsv,
}

impl FromStr for TraceFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "pcap" => Ok(TraceFormat::Pcap),
            "csv" | "packet_csv" => Ok(TraceFormat::PacketCsv),
            _ => Err(format!("unknown trace format `{s}` (expected pcap or csv)")),
        }
    }
}

impl TraceFormat {
    /// Guess from the file extension; anything but `.csv` is treated as PCAP.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => TraceFormat::PacketCsv,
            _ => TraceFormat::Pcap,
        }
    }
}

/// Reads and parses a capture file. Records come back in capture order.
pub fn parse_trace(path: &Path, format: TraceFormat) -> Result<ParsedTrace, IngestError> {
    let bytes = fs::read(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    match format {
        TraceFormat::Pcap => parse_pcap(&bytes),
        TraceFormat::PacketCsv => parse_packet_csv(&bytes),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    pub internal_prefixes: Vec<Ipv4Prefix>,
    /// Drop packets whose endpoints are both internal or both external.
    pub drop_non_crossing: bool,
}

impl IngestConfig {
    pub fn new(internal_prefixes: Vec<Ipv4Prefix>) -> Result<Self, IngestError> {
        let cfg = Self {
            internal_prefixes,
            drop_non_crossing: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.internal_prefixes.is_empty() {
            return Err(IngestError::Config(
                "at least one internal prefix is required".into(),
            ));
        }
        Ok(())
    }

    pub fn is_internal(&self, addr: Ipv4Addr) -> bool {
        self.internal_prefixes.iter().any(|p| p.contains(addr))
    }
}

/// One packet as seen from an internal host.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HostPacket {
    pub timestamp: f64,
    pub direction: Direction,
    pub wire_bytes: u32,
    pub flow_key: u64,
}

/// Bidirectional packets of one internal host, ordered by timestamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HostGroup {
    pub host: Ipv4Addr,
    pub packets: Vec<HostPacket>,
}

impl HostGroup {
    pub fn new(host: Ipv4Addr) -> Self {
        Self {
            host,
            packets: Vec::new(),
        }
    }

    pub fn bytes(&self) -> u64 {
        self.packets.iter().map(|p| u64::from(p.wire_bytes)).sum()
    }
}
