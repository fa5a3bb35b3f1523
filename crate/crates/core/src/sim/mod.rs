//! Discrete-event simulation of one shaped bottleneck carrying a closed-loop
//! bulk flow and open-loop profile replay.

pub mod aqm;
mod config;
mod engine;
mod schedule;
mod shaper;
pub mod tcp;
mod trace;

pub use self::config::{
    validate_telemetry_bin, Aqm, AppFlowConfig, AppModel, BottleneckConfig, UnknownAqm,
    DEFAULT_MTU, DEFAULT_QUEUE_PKTS, HEADER_BYTES, TELEMETRY_BINS_MS,
};
pub use self::schedule::{packetize, replay_schedule, Emission, MIN_PACKET_BYTES};
pub use self::trace::{ConfigEcho, FlowCounters, QueueStats, RttSummary, SenderStats, SimTrace};

use self::engine::Engine;
use crate::pipeline::CrossTrafficProfile;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("cross-traffic profile {id}: {reason}")]
    InvalidProfile { id: String, reason: String },
    #[error("parallelism must be at least 1")]
    InvalidParallelism,
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

/// Everything one simulation needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SimJob {
    pub bottleneck: BottleneckConfig,
    pub app: AppFlowConfig,
    pub ctp: Option<CrossTrafficProfile>,
    pub telemetry_bin_ms: u32,
}

fn check_profile(ctp: &CrossTrafficProfile) -> Result<(), SimError> {
    let reason = if ctp.bins.is_empty() {
        "has no bins"
    } else if ctp.bin_width_ms == 0 {
        "has zero bin width"
    } else {
        return Ok(());
    };
    Err(SimError::InvalidProfile {
        id: ctp.id.clone(),
        reason: reason.into(),
    })
}

/// Runs one simulation. The profile, if any, loops for the whole run.
pub fn simulate(
    bcfg: &BottleneckConfig,
    app: &AppFlowConfig,
    ctp: Option<&CrossTrafficProfile>,
    telemetry_bin_ms: u32,
) -> Result<SimTrace, SimError> {
    bcfg.validate()?;
    app.validate()?;
    validate_telemetry_bin(telemetry_bin_ms)?;
    if let Some(c) = ctp {
        check_profile(c)?;
    }
    let echo = ConfigEcho {
        bottleneck: bcfg.clone(),
        app: app.clone(),
        ctp_id: ctp.map(|c| c.id.clone()),
    };
    Ok(Engine::new(bcfg, app, ctp, telemetry_bin_ms).run(echo))
}

impl SimJob {
    pub fn run(&self) -> Result<SimTrace, SimError> {
        simulate(&self.bottleneck, &self.app, self.ctp.as_ref(), self.telemetry_bin_ms)
    }
}

/// Runs independent simulations on `parallelism` threads. Results are in
/// input order and do not depend on the thread count.
pub fn run_batch(
    jobs: &[SimJob],
    parallelism: usize,
) -> Result<Vec<Result<SimTrace, SimError>>, SimError> {
    use rayon::prelude::*;
    if parallelism == 0 {
        return Err(SimError::InvalidParallelism);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| SimError::Pool(e.to_string()))?;
    Ok(pool.install(|| jobs.par_iter().map(SimJob::run).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::Direction;
    use crate::pipeline::WindowContext;

    fn ctp(bins: Vec<u64>) -> CrossTrafficProfile {
        CrossTrafficProfile::new(
            "sim",
            "10.0.0.0/8".parse().unwrap(),
            Direction::Down,
            0.0,
            100,
            bins,
            &WindowContext::default(),
        )
        .unwrap()
    }

    fn short(aqm: Aqm) -> (BottleneckConfig, AppFlowConfig) {
        (BottleneckConfig::new(1e7, 20.0, aqm), AppFlowConfig::new(3.0, 5))
    }

    #[test]
    fn rejects_bad_inputs() {
        let (b, a) = short(Aqm::Pfifo);
        assert!(simulate(&b, &a, None, 20).is_err());
        let mut c = ctp(vec![1]);
        c.bins.clear();
        assert!(matches!(simulate(&b, &a, Some(&c), 100), Err(SimError::InvalidProfile { .. })));
    }

    #[test]
    fn empty_profile_does_not_interfere() {
        let (b, a) = short(Aqm::FqCodel);
        let alone = simulate(&b, &a, None, 100).unwrap();
        let with = simulate(&b, &a, Some(&ctp(vec![0; 10])), 100).unwrap();
        assert_eq!(with.cross.injected_bytes, 0);
        assert_eq!(with.cross.delivered_bytes, 0);
        assert_eq!(with.throughput_bps, alone.throughput_bps);
        assert_eq!(with.rtt_ms, alone.rtt_ms);
        assert_eq!(with.app, alone.app);
    }

    #[test]
    fn deterministic_for_a_seed() {
        let (b, a) = short(Aqm::Codel);
        let c = ctp(vec![60_000, 0, 120_000, 0, 30_000]);
        let x = simulate(&b, &a, Some(&c), 10).unwrap();
        let y = simulate(&b, &a, Some(&c), 10).unwrap();
        assert_eq!(x, y);
        assert_eq!(serde_json::to_string(&x).unwrap(), serde_json::to_string(&y).unwrap());
    }

    #[test]
    fn counters_are_conserved() {
        for aqm in Aqm::ALL {
            let (mut b, a) = short(aqm);
            b.queue_capacity_pkts = 30;
            let c = ctp(vec![150_000, 0, 0, 90_000]);
            let t = simulate(&b, &a, Some(&c), 100).unwrap();
            assert!(t.app.is_conserved(), "{aqm}: {:?}", t.app);
            assert!(t.cross.is_conserved(), "{aqm}: {:?}", t.cross);
            assert!(t.app.dropped_pkts + t.cross.dropped_pkts > 0, "{aqm}");
            let drops: u64 = t.queue_stats.drops.iter().sum();
            assert_eq!(drops, t.app.dropped_pkts + t.cross.dropped_pkts);
        }
    }

    #[test]
    fn rtt_never_below_base_latency() {
        for latency in [0.0, 7.0, 20.0] {
            let mut b = BottleneckConfig::new(5e6, latency, Aqm::Pfifo);
            b.shape_uplink = true;
            let t = simulate(&b, &AppFlowConfig::new(2.0, 1), Some(&ctp(vec![40_000, 0])), 10).unwrap();
            assert!(t.rtt.samples > 0);
            assert!(t.rtt.min_ms.unwrap() >= latency);
            assert!(t.rtt_ms.iter().flatten().all(|&r| r >= latency));
        }
    }

    #[test]
    fn delivered_bytes_respect_the_token_bucket() {
        let (b, a) = short(Aqm::Pfifo);
        let t = simulate(&b, &a, Some(&ctp(vec![200_000, 0, 0])), 10).unwrap();
        let tau = 0.01;
        let bound = b.shaping_rate_bps * tau + f64::from(b.token_bucket_burst_bytes) * 8.0;
        for (app, cross) in t.throughput_bps.iter().zip(&t.cross_throughput_bps) {
            assert!((app + cross) * tau <= bound + 1e-6);
        }
    }

    #[test]
    fn batch_partial_failure_and_order() {
        let (b, _) = short(Aqm::Pfifo);
        let mut jobs: Vec<SimJob> = (0..4)
            .map(|i| SimJob {
                bottleneck: b.clone(),
                app: AppFlowConfig::new(1.0, i),
                ctp: None,
                telemetry_bin_ms: 100,
            })
            .collect();
        jobs[2].bottleneck.queue_capacity_pkts = 0;
        let out = run_batch(&jobs, 3).unwrap();
        assert_eq!(out.len(), 4);
        assert!(out[2].is_err());
        for i in [0, 1, 3] {
            assert_eq!(out[i].as_ref().unwrap(), &jobs[i].run().unwrap());
        }
        assert!(run_batch(&[], 1).unwrap().is_empty());
        assert_eq!(run_batch(&jobs, 0), Err(SimError::InvalidParallelism));
    }
}
