use std::net::Ipv4Addr;

use crosstraffic::ingest::{decompose, IngestConfig, PacketRecord};
use crosstraffic::net::{Direction, Protocol};
use crosstraffic::pipeline::{read_jsonl, transform, write_jsonl, CrossTrafficProfile, TransformParams, WindowContext, WindowSpec};
use proptest::prelude::*;

fn arb_trace() -> impl Strategy<Value = Vec<PacketRecord>> {
    proptest::collection::vec(
        (0u32..20_000, 0u8..3, 0u8..4, 1u8..6, any::<bool>(), 40u32..1500),
        1..300,
    )
    .prop_map(|rows| {
        let mut v: Vec<PacketRecord> = rows
            .into_iter()
            .map(|(ms, b, c, d, up, bytes)| {
                let host = Ipv4Addr::new(10, b, c, d);
                let ext = Ipv4Addr::new(198, 51, 100, d);
                let (src, dst) = if up { (host, ext) } else { (ext, host) };
                PacketRecord {
                    timestamp: f64::from(ms) / 1000.0,
                    src_addr: src,
                    dst_addr: dst,
                    src_port: 1000 + u16::from(c),
                    dst_port: 443,
                    protocol: Protocol::Tcp,
                    wire_bytes: bytes,
                }
            })
            .collect();
        v.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        v
    })
}

fn params(windows: Vec<f64>, stride: f64) -> TransformParams {
    TransformParams {
        bin_width_ms: 100,
        windows: WindowSpec { durations_s: windows, stride_s: stride },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tree_conserves_bytes(trace in arb_trace()) {
        let cfg = IngestConfig::new(vec!["10.0.0.0/8".parse().unwrap()]).unwrap();
        let d = decompose(&trace, &cfg);
        let (root, _) = transform(&d, &params(vec![1.0], 1.0), "p").unwrap();
        let root = root.unwrap();
        let total: u64 = trace.iter().map(|r| u64::from(r.wire_bytes)).sum();
        let up: u64 = trace.iter().filter(|r| r.src_addr.octets()[0] == 10).map(|r| u64::from(r.wire_bytes)).sum();
        prop_assert_eq!(root.up.total() + root.down.total(), total);
        prop_assert_eq!(root.up.total(), up);
        for node in root.iter().filter(|n| !n.is_leaf()) {
            for dir in Direction::BOTH {
                let mut sum = vec![0u64; node.series(dir).len()];
                for c in node.children.values() {
                    for (s, b) in sum.iter_mut().zip(&c.series(dir).bins) {
                        *s += b;
                    }
                }
                prop_assert_eq!(&sum, &node.series(dir).bins);
            }
        }
    }

    #[test]
    fn window_counts_follow_the_formula(trace in arb_trace(), dur in 1u32..=5, stride in 1u32..=4) {
        let cfg = IngestConfig::new(vec!["10.0.0.0/8".parse().unwrap()]).unwrap();
        let d = decompose(&trace, &cfg);
        let total_bins = d.span.unwrap().bin_count(100) as u32;
        let (root, profiles) = transform(&d, &params(vec![f64::from(dur)], f64::from(stride)), "p").unwrap();
        let nodes = root.unwrap().iter().count();
        let (dur_bins, stride_bins) = (dur * 10, stride * 10);
        let per = if dur_bins > total_bins { 0 } else { (total_bins - dur_bins) / stride_bins + 1 };
        prop_assert_eq!(profiles.len(), nodes * 2 * per as usize);
        prop_assert!(profiles.windows(2).all(|w| w[0].id < w[1].id));
    }

    #[test]
    fn metrics_match_oracle(bins in proptest::collection::vec(0u64..1_000_000, 1..200), paired in 0u64..10_000_000) {
        let ctx = WindowContext { host_count: 3, flow_count: 7, paired_bytes: paired };
        let p = CrossTrafficProfile::new("m", "10.0.0.0/8".parse().unwrap(), Direction::Up, 0.0, 100, bins.clone(), &ctx).unwrap();
        let n = bins.len() as f64;
        let sum: u64 = bins.iter().sum();
        let mean = sum as f64 / n;
        let max = *bins.iter().max().unwrap() as f64;
        prop_assert!((p.metrics.mean_throughput_bps - 8.0 * sum as f64 / (n * 0.1)).abs() <= 1e-9 * p.metrics.mean_throughput_bps.max(1.0));
        prop_assert!((p.metrics.max_throughput_bps - 80.0 * max).abs() <= 1e-9 * max.max(1.0) * 80.0);
        let asym = if sum + paired == 0 { 0.5 } else { sum as f64 / (sum + paired) as f64 };
        prop_assert!((p.metrics.asymmetry - asym).abs() < 1e-12);
        if sum > 0 {
            let mut sorted = bins.clone();
            sorted.sort();
            let rank = ((95 * bins.len()) as f64 / 100.0).ceil() as usize;
            let p95 = sorted[rank.max(1) - 1] as f64;
            let var = bins.iter().map(|&b| (b as f64 - mean).powi(2)).sum::<f64>() / n;
            prop_assert!((p.metrics.pmr - max / mean).abs() <= 1e-9 * (max / mean));
            prop_assert!((p.metrics.pmr95 - p95 / mean).abs() <= 1e-9 * (p95 / mean).max(1e-12));
            prop_assert!((p.metrics.cov - var.sqrt() / mean).abs() <= 1e-9 * (var.sqrt() / mean).max(1e-12));
            prop_assert!(p.metrics.pmr >= p.metrics.pmr95);
        }
    }
}

#[test]
fn jsonl_round_trip_preserves_profiles() {
    let trace: Vec<PacketRecord> = (0..300)
        .map(|i| PacketRecord {
            timestamp: f64::from(i) * 0.01,
            src_addr: Ipv4Addr::new(203, 0, 113, 1),
            dst_addr: Ipv4Addr::new(10, 0, 0, 1 + (i % 3) as u8),
            src_port: 443,
            dst_port: 40_000,
            protocol: Protocol::Tcp,
            wire_bytes: 1000 + i,
        })
        .collect();
    let d = decompose(&trace, &IngestConfig::new(vec!["10.0.0.0/8".parse().unwrap()]).unwrap());
    let (_, profiles) = transform(&d, &params(vec![1.0, 2.0], 1.0), "rt").unwrap();
    assert!(!profiles.is_empty());
    let mut buf = Vec::new();
    write_jsonl(&mut buf, &profiles).unwrap();
    let back = read_jsonl(buf.as_slice()).unwrap();
    assert_eq!(back, profiles);
    assert!(back.iter().all(|p| p.id == p.expected_id() && p.id.len() == 16));
}

#[test]
fn rerun_gives_identical_ids() {
    let trace: Vec<PacketRecord> = (0..50)
        .map(|i| PacketRecord {
            timestamp: f64::from(i) * 0.05,
            src_addr: Ipv4Addr::new(10, 0, 0, 9),
            dst_addr: Ipv4Addr::new(1, 1, 1, 1),
            src_port: 5,
            dst_port: 6,
            protocol: Protocol::Udp,
            wire_bytes: 200,
        })
        .collect();
    let d = decompose(&trace, &IngestConfig::new(vec!["10.0.0.0/8".parse().unwrap()]).unwrap());
    let a = transform(&d, &params(vec![1.0], 1.0), "same").unwrap().1;
    let b = transform(&d, &params(vec![1.0], 1.0), "same").unwrap().1;
    assert_eq!(a, b);
}
