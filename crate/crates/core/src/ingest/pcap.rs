//! Classic libpcap reader (and a minimal writer used for fixtures).
//!
//! Both byte orders and both timestamp resolutions (microsecond magic
//! `0xa1b2c3d4`, nanosecond magic `0xa1b23c4d`) are accepted. Supported link
//! types are Ethernet, raw IP and Linux cooked captures (v1 and v2).

use std::net::Ipv4Addr;

use super::{IngestError, PacketRecord, ParsedTrace};
use crate::net::Protocol;

const GLOBAL_HEADER_LEN: usize = 24;
const RECORD_HEADER_LEN: usize = 16;
const MAX_CAPLEN: u32 = 256 * 1024;

const LINKTYPE_ETHERNET: u32 = 1;
const LINKTYPE_RAW: u32 = 101;
const LINKTYPE_LINUX_SLL: u32 = 113;
const LINKTYPE_IPV4: u32 = 228;
const LINKTYPE_LINUX_SLL2: u32 = 276;

const ETHERTYPE_IPV4: u16 = 0x0800;
const ETHERTYPE_IPV6: u16 = 0x86dd;
const ETHERTYPE_VLAN: u16 = 0x8100;
const ETHERTYPE_QINQ: u16 = 0x88a8;

#[derive(Clone, Copy)]
enum Endian {
    Little,
    Big,
}

impl Endian {
    fn u32(self, b: &[u8]) -> u32 {
        let arr = [b[0], b[1], b[2], b[3]];
        match self {
            Endian::Little => u32::from_le_bytes(arr),
            Endian::Big => u32::from_be_bytes(arr),
        }
    }
}

enum Frame {
    Ipv4(Vec<u8>),
    Ipv6,
    NonIp,
}

/// Parses a whole capture held in memory.
pub fn parse_pcap(bytes: &[u8]) -> Result<ParsedTrace, IngestError> {
    if bytes.len() < GLOBAL_HEADER_LEN {
        return Err(IngestError::Malformed {
            offset: bytes.len() as u64,
            reason: format!(
                "file is {} bytes, shorter than the {GLOBAL_HEADER_LEN}-byte global header",
                bytes.len()
            ),
        });
    }
    let (endian, nanos) = match [bytes[0], bytes[1], bytes[2], bytes[3]] {
        [0xd4, 0xc3, 0xb2, 0xa1] => (Endian::Little, false),
        [0xa1, 0xb2, 0xc3, 0xd4] => (Endian::Big, false),
        [0x4d, 0x3c, 0xb2, 0xa1] => (Endian::Little, true),
        [0xa1, 0xb2, 0x3c, 0x4d] => (Endian::Big, true),
        magic => {
            return Err(IngestError::Malformed {
                offset: 0,
                reason: format!("unrecognised magic number {}", hex::encode(magic)),
            })
        }
    };
    let linktype = endian.u32(&bytes[20..24]) & 0x0fff_ffff;
    if !matches!(
        linktype,
        LINKTYPE_ETHERNET | LINKTYPE_RAW | LINKTYPE_LINUX_SLL | LINKTYPE_IPV4 | LINKTYPE_LINUX_SLL2
    ) {
        return Err(IngestError::Malformed {
            offset: 20,
            reason: format!("unsupported link type {linktype}"),
        });
    }

    let mut out = ParsedTrace::default();
    let mut offset = GLOBAL_HEADER_LEN;
    while offset < bytes.len() {
        if bytes.len() - offset < RECORD_HEADER_LEN {
            return Err(IngestError::Truncated {
                offset: offset as u64,
            });
        }
        let hdr = &bytes[offset..offset + RECORD_HEADER_LEN];
        let ts_sec = endian.u32(&hdr[0..4]);
        let ts_frac = endian.u32(&hdr[4..8]);
        let caplen = endian.u32(&hdr[8..12]);
        let origlen = endian.u32(&hdr[12..16]);
        if caplen > MAX_CAPLEN {
            return Err(IngestError::Malformed {
                offset: offset as u64 + 8,
                reason: format!("captured length {caplen} exceeds {MAX_CAPLEN}"),
            });
        }
        let data_start = offset + RECORD_HEADER_LEN;
        let data_end = data_start + caplen as usize;
        if data_end > bytes.len() {
            return Err(IngestError::Truncated {
                offset: offset as u64,
            });
        }
        let divisor = if nanos { 1e9 } else { 1e6 };
        let timestamp = f64::from(ts_sec) + f64::from(ts_frac) / divisor;
        let frame = &bytes[data_start..data_end];
        match link_payload(linktype, frame) {
            Frame::Ipv4(ip) => match decode_ipv4(&ip) {
                Some((src_addr, dst_addr, protocol, src_port, dst_port)) => {
                    out.records.push(PacketRecord {
                        timestamp,
                        src_addr,
                        dst_addr,
                        src_port,
                        dst_port,
                        protocol,
                        wire_bytes: origlen,
                    })
                }
                None => out.skipped.undecodable += 1,
            },
            Frame::Ipv6 => out.skipped.ipv6 += 1,
            Frame::NonIp => out.skipped.non_ip += 1,
        }
        offset = data_end;
    }
    Ok(out)
}

fn classify(ethertype: u16, payload: &[u8]) -> Frame {
    match ethertype {
        ETHERTYPE_IPV4 => Frame::Ipv4(payload.to_vec()),
        ETHERTYPE_IPV6 => Frame::Ipv6,
        _ => Frame::NonIp,
    }
}

fn link_payload(linktype: u32, frame: &[u8]) -> Frame {
    match linktype {
        LINKTYPE_ETHERNET => {
            let mut pos = 12;
            loop {
                if frame.len() < pos + 2 {
                    return Frame::NonIp;
                }
                let ethertype = u16::from_be_bytes([frame[pos], frame[pos + 1]]);
                if matches!(ethertype, ETHERTYPE_VLAN | ETHERTYPE_QINQ) {
                    pos += 4;
                    continue;
                }
                return classify(ethertype, &frame[pos + 2..]);
            }
        }
        LINKTYPE_RAW | LINKTYPE_IPV4 => match frame.first().map(|b| b >> 4) {
            Some(4) => Frame::Ipv4(frame.to_vec()),
            Some(6) => Frame::Ipv6,
            _ => Frame::NonIp,
        },
        LINKTYPE_LINUX_SLL if frame.len() >= 16 => {
            classify(u16::from_be_bytes([frame[14], frame[15]]), &frame[16..])
        }
        LINKTYPE_LINUX_SLL2 if frame.len() >= 20 => {
            classify(u16::from_be_bytes([frame[0], frame[1]]), &frame[20..])
        }
        _ => Frame::NonIp,
    }
}

/// Returns (src, dst, protocol, sport, dport). Ports are zero when the
/// transport header was not captured, for non-first fragments and for
/// protocols other than TCP/UDP.
fn decode_ipv4(ip: &[u8]) -> Option<(Ipv4Addr, Ipv4Addr, Protocol, u16, u16)> {
    if ip.len() < 20 || ip[0] >> 4 != 4 {
        return None;
    }
    let ihl = usize::from(ip[0] & 0x0f) * 4;
    if ihl < 20 {
        return None;
    }
    let protocol = Protocol::from_ip_number(ip[9]);
    let src = Ipv4Addr::new(ip[12], ip[13], ip[14], ip[15]);
    let dst = Ipv4Addr::new(ip[16], ip[17], ip[18], ip[19]);
    let frag_offset = u16::from_be_bytes([ip[6], ip[7]]) & 0x1fff;
    let (sport, dport) = match protocol {
        Protocol::Tcp | Protocol::Udp if frag_offset == 0 && ip.len() >= ihl + 4 => (
            u16::from_be_bytes([ip[ihl], ip[ihl + 1]]),
            u16::from_be_bytes([ip[ihl + 2], ip[ihl + 3]]),
        ),
        _ => (0, 0),
    };
    Some((src, dst, protocol, sport, dport))
}

/// Writes records as a little-endian microsecond Ethernet capture. Only
/// the Ethernet, IPv4 and first 8 transport bytes are captured; the record's
/// original length carries `wire_bytes`.
pub fn encode_pcap(records: &[PacketRecord]) -> Vec<u8> {
    let mut out = Vec::with_capacity(GLOBAL_HEADER_LEN + records.len() * 58);
    out.extend_from_slice(&0xa1b2_c3d4u32.to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&4u16.to_le_bytes());
    out.extend_from_slice(&0i32.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&65535u32.to_le_bytes());
    out.extend_from_slice(&LINKTYPE_ETHERNET.to_le_bytes());

    for r in records {
        let mut frame = Vec::with_capacity(42);
        frame.extend_from_slice(&[0x02, 0, 0, 0, 0, 0x01]);
        frame.extend_from_slice(&[0x02, 0, 0, 0, 0, 0x02]);
        frame.extend_from_slice(&ETHERTYPE_IPV4.to_be_bytes());
        let ip_total = r.wire_bytes.saturating_sub(14).min(u32::from(u16::MAX)) as u16;
        let proto = match r.protocol {
            Protocol::Tcp => 6,
            Protocol::Udp => 17,
            Protocol::Other => 47,
        };
        frame.extend_from_slice(&[0x45, 0]);
        frame.extend_from_slice(&ip_total.to_be_bytes());
        frame.extend_from_slice(&[0, 0, 0x40, 0, 64, proto, 0, 0]);
        frame.extend_from_slice(&r.src_addr.octets());
        frame.extend_from_slice(&r.dst_addr.octets());
        frame.extend_from_slice(&r.src_port.to_be_bytes());
        frame.extend_from_slice(&r.dst_port.to_be_bytes());
        frame.extend_from_slice(&[0; 4]);
        frame.truncate(r.wire_bytes as usize);

        let mut sec = r.timestamp.floor();
        let mut usec = ((r.timestamp - sec) * 1e6).round();
        if usec >= 1e6 {
            sec += 1.0;
            usec -= 1e6;
        }
        out.extend_from_slice(&(sec as u32).to_le_bytes());
        out.extend_from_slice(&(usec as u32).to_le_bytes());
        out.extend_from_slice(&(frame.len() as u32).to_le_bytes());
        out.extend_from_slice(&r.wire_bytes.to_le_bytes());
        out.extend_from_slice(&frame);
    }
    out
}
