use std::path::{Path, PathBuf};

use clap::Args;
use crosstraffic::pipeline::CrossTrafficProfile;
use crosstraffic::sim::{simulate, Aqm, AppFlowConfig, BottleneckConfig, DEFAULT_MTU, DEFAULT_QUEUE_PKTS};
use serde::Serialize;

use super::transform::open_existing_store;
use crate::error::{CliError, Result};
use crate::io::{read_profiles, write_atomic, write_json};
use crate::manifest::Recorder;

/// Link and flow parameters shared by `simulate` and `run`.
#[derive(Debug, Clone, Args, Serialize)]
pub struct LinkArgs {
    #[arg(long, default_value_t = DEFAULT_QUEUE_PKTS)]
    pub queue_pkts: u32,
    /// Token bucket depth; twice the MTU when absent.
    #[arg(long)]
    pub burst_bytes: Option<u32>,
    #[arg(long, default_value_t = DEFAULT_MTU)]
    pub mtu: u32,
    /// Shape the ACK path as well.
    #[arg(long)]
    pub shape_uplink: bool,
    #[arg(long, default_value_t = 30.0)]
    pub duration_s: f64,
    /// Telemetry bin: 10, 100 or 1000.
    #[arg(long, default_value_t = 100)]
    pub telemetry_ms: u32,
}

impl LinkArgs {
    pub fn bottleneck(&self, rate_bps: f64, latency_ms: f64, aqm: Aqm) -> BottleneckConfig {
        let mut b = BottleneckConfig::new(rate_bps, latency_ms, aqm);
        b.queue_capacity_pkts = self.queue_pkts;
        b.mtu_bytes = self.mtu;
        b.token_bucket_burst_bytes = self.burst_bytes.unwrap_or(2 * self.mtu);
        b.shape_uplink = self.shape_uplink;
        b
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 1e7)]
    pub rate_bps: f64,
    /// Base round-trip latency.
    #[arg(long, default_value_t = 100.0)]
    pub latency_ms: f64,
    /// pfifo, codel or fq_codel.
    #[arg(long, default_value = "pfifo")]
    pub aqm: Aqm,
    /// Cross-traffic profile: a JSONL file holding one profile, or an id looked up in --store.
    #[arg(long)]
    pub ctp: Option<String>,
    #[arg(long)]
    pub store: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub link: LinkArgs,
    #[arg(long, env = "NETREPLICA_SEED", default_value_t = 0)]
    pub seed: u64,
    /// SimTrace JSON to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional CSV export of the per-bin telemetry.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// Resolves `--ctp` to a profile and the file it came from.
fn resolve_ctp(spec: &str, store: Option<&Path>) -> Result<(CrossTrafficProfile, PathBuf)> {
    let as_path = Path::new(spec);
    if as_path.is_file() {
        let mut profiles = read_profiles(as_path)?;
        if profiles.len() != 1 {
            return Err(CliError::invalid(format!(
                "{spec} holds {} profiles; pass one profile or an id with --store",
                profiles.len()
            )));
        }
        return Ok((profiles.remove(0), as_path.to_path_buf()));
    }
    let Some(store_path) = store else {
        return Err(CliError::invalid(format!(
            "--ctp `{spec}` is not a file; give --store to look it up by id"
        )));
    };
    let store = open_existing_store(store_path)?;
    let p = store
        .get(spec)
        .cloned()
        .ok_or_else(|| CliError::invalid(format!("no profile `{spec}` in {}", store_path.display())))?;
    Ok((p, store_path.to_path_buf()))
}

pub fn execute(args: &SimulateArgs) -> Result<()> {
    let mut rec = Recorder::start("simulate", args)?;
    let ctp = match &args.ctp {
        Some(spec) => {
            let (p, from) = resolve_ctp(spec, args.store.as_deref())?;
            rec.input(&from);
            Some(p)
        }
        None => None,
    };
    let bottleneck = args.link.bottleneck(args.rate_bps, args.latency_ms, args.aqm);
    let app = AppFlowConfig::new(args.link.duration_s, args.seed);
    let trace = simulate(&bottleneck, &app, ctp.as_ref(), args.link.telemetry_ms)?;
    write_json(&args.out, &trace)?;
    let mut outputs: Vec<&Path> = vec![&args.out];
    if let Some(csv) = &args.csv {
        write_atomic(csv, trace.to_csv().as_bytes())?;
        outputs.push(csv);
    }
    rec.finish(&outputs)?;
    log::info!(
        "mean app throughput {:.3} Mbps, mean RTT {}",
        trace.overall_throughput_bps() / 1e6,
        trace.rtt.mean_ms.map_or("n/a".into(), |r| format!("{r:.1} ms"))
    );
    Ok(())
}
