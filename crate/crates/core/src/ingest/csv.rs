//! Plain-text packet format: `timestamp,src,dst,sport,dport,proto,bytes`.
//!
//! Blank lines and lines starting with `#` are ignored, as is a leading
//! header row whose first field is `timestamp`. IPv6 endpoints are counted
//! and skipped.

use std::fmt::Write as _;
use std::net::IpAddr;

use super::{IngestError, PacketRecord, ParsedTrace};
use crate::net::Protocol;

pub fn parse_packet_csv(bytes: &[u8]) -> Result<ParsedTrace, IngestError> {
    let mut out = ParsedTrace::default();
    let mut offset = 0u64;
    for (idx, raw) in bytes.split_inclusive(|&b| b == b'\n').enumerate() {
        let line_no = idx + 1;
        let line_offset = offset;
        offset += raw.len() as u64;

        let err = |reason: String| IngestError::MalformedCsv {
            line: line_no,
            offset: line_offset,
            reason,
        };
        let line = std::str::from_utf8(raw)
            .map_err(|_| err("line is not valid UTF-8".into()))?
            .trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if idx == 0 && fields[0].eq_ignore_ascii_case("timestamp") {
            continue;
        }
        if fields.len() != 7 {
            return Err(err(format!("expected 7 fields, found {}", fields.len())));
        }
        let timestamp: f64 = fields[0]
            .parse()
            .map_err(|_| err(format!("bad timestamp `{}`", fields[0])))?;
        if !timestamp.is_finite() {
            return Err(err("timestamp is not finite".into()));
        }
        let src: IpAddr = fields[1]
            .parse()
            .map_err(|_| err(format!("bad source address `{}`", fields[1])))?;
        let dst: IpAddr = fields[2]
            .parse()
            .map_err(|_| err(format!("bad destination address `{}`", fields[2])))?;
        let src_port: u16 = fields[3]
            .parse()
            .map_err(|_| err(format!("bad source port `{}`", fields[3])))?;
        let dst_port: u16 = fields[4]
            .parse()
            .map_err(|_| err(format!("bad destination port `{}`", fields[4])))?;
        let protocol: Protocol = fields[5].parse().map_err(err)?;
        let wire_bytes: u32 = fields[6]
            .parse()
            .map_err(|_| err(format!("bad byte count `{}`", fields[6])))?;

        let (src_addr, dst_addr) = match (src, dst) {
            (IpAddr::V4(s), IpAddr::V4(d)) => (s, d),
            _ => {
                out.skipped.ipv6 += 1;
                continue;
            }
        };
        let (src_port, dst_port) = match protocol {
            Protocol::Other => (0, 0),
            _ => (src_port, dst_port),
        };
        out.records.push(PacketRecord {
            timestamp,
            src_addr,
            dst_addr,
            src_port,
            dst_port,
            protocol,
            wire_bytes,
        });
    }
    Ok(out)
}

pub fn encode_packet_csv(records: &[PacketRecord]) -> String {
    let mut out = String::from("timestamp,src,dst,sport,dport,proto,bytes\n");
    for r in records {
        let proto = match r.protocol {
            Protocol::Tcp => "TCP",
            Protocol::Udp => "UDP",
            Protocol::Other => "OTHER",
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.timestamp, r.src_addr, r.dst_addr, r.src_port, r.dst_port, proto, r.wire_bytes
        );
    }
    out
}
