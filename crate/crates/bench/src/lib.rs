//! Synthetic inputs shared by the benchmarks.

use std::net::Ipv4Addr;

use crosstraffic::ingest::PacketRecord;
use crosstraffic::net::{Direction, Protocol};
use crosstraffic::pipeline::{CrossTrafficProfile, WindowContext};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `packets` crossing packets between `hosts` internal hosts in 10/8 and
/// random external peers, about 300 per second.
pub fn synthetic_trace(packets: usize, hosts: u32, seed: u64) -> Vec<PacketRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0.0;
    (0..packets)
        .map(|_| {
            t += rng.random_range(0.0..0.006);
            let h = rng.random_range(0..hosts);
            let inside = Ipv4Addr::new(10, (h >> 16) as u8, (h >> 8) as u8, h as u8);
            let outside = Ipv4Addr::new(rng.random_range(11..200), rng.random(), rng.random(), rng.random());
            let (src_addr, dst_addr) = if rng.random_bool(0.7) { (outside, inside) } else { (inside, outside) };
            PacketRecord {
                timestamp: t,
                src_addr,
                dst_addr,
                src_port: rng.random(),
                dst_port: 443,
                protocol: Protocol::Tcp,
                wire_bytes: rng.random_range(40..=1514),
            }
        })
        .collect()
}

/// On/off profile of `bins` 100 ms bins peaking near `peak_bps`.
pub fn bursty_profile(bins: usize, peak_bps: f64, seed: u64) -> CrossTrafficProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let peak = peak_bps / 8.0 / 10.0;
    let series = (0..bins)
        .map(|_| if rng.random_bool(0.4) { (peak * rng.random_range(0.5..1.0)) as u64 } else { 0 })
        .collect();
    CrossTrafficProfile::new("bench", "10.0.0.0/8".parse().unwrap(), Direction::Down, 0.0, 100, series, &WindowContext::default())
        .expect("non-empty series")
}

pub fn random_series(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.random_range(0.0..1e7)).collect()
}
