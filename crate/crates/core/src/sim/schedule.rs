use crate::pipeline::CrossTrafficProfile;

/// Remainders smaller than this are merged into the preceding packet.
pub const MIN_PACKET_BYTES: u64 = 64;

/// One cross-traffic packet, relative to the start of the profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Emission {
    pub time_ns: u64,
    pub bytes: u32,
}

impl Emission {
    pub fn time_s(&self) -> f64 {
        self.time_ns as f64 / 1e9
    }
}

/// Packet sizes for one bin: full MTU packets plus the remainder.
pub fn packetize(bytes: u64, mtu: u32) -> Vec<u32> {
    let mtu = u64::from(mtu);
    let full = bytes / mtu;
    let rem = bytes % mtu;
    let mut sizes = vec![mtu as u32; full as usize];
    if rem > 0 {
        match sizes.last_mut() {
            Some(last) if rem < MIN_PACKET_BYTES => *last += rem as u32,
            _ => sizes.push(rem as u32),
        }
    }
    sizes
}

/// Emissions of one pass over the profile, paced uniformly within each bin.
pub fn replay_schedule(ctp: &CrossTrafficProfile, mtu: u32) -> Vec<Emission> {
    let bin_ns = u64::from(ctp.bin_width_ms) * 1_000_000;
    let mut out = Vec::new();
    for (i, &b) in ctp.bins.iter().enumerate() {
        let sizes = packetize(b, mtu);
        let n = sizes.len() as u64;
        let start = i as u64 * bin_ns;
        out.extend(sizes.into_iter().enumerate().map(|(j, bytes)| Emission {
            time_ns: start + j as u64 * bin_ns / n,
            bytes,
        }));
    }
    out
}

/// Endless replay of a schedule, wrapping around every `period_ns`.
#[derive(Debug, Clone)]
pub(crate) struct LoopedSchedule {
    emissions: Vec<Emission>,
    period_ns: u64,
    pass: u64,
    cursor: usize,
}

impl LoopedSchedule {
    pub fn new(emissions: Vec<Emission>, period_ns: u64) -> Self {
        Self {
            emissions,
            period_ns,
            pass: 0,
            cursor: 0,
        }
    }

    /// Next emission as (absolute time, bytes); `None` for an empty schedule.
    pub fn next(&mut self) -> Option<(u64, u32)> {
        if self.emissions.is_empty() || self.period_ns == 0 {
            return None;
        }
        let e = self.emissions[self.cursor];
        let t = self.pass * self.period_ns + e.time_ns;
        self.cursor += 1;
        if self.cursor == self.emissions.len() {
            self.cursor = 0;
            self.pass += 1;
        }
        Some((t, e.bytes))
    }
}
