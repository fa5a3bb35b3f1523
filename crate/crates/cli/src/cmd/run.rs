use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use crosstraffic::eval::pairwise_consistency;
use crosstraffic::net::Ipv4Prefix;
use crosstraffic::sim::{run_batch, Aqm, AppFlowConfig, SimJob};
use serde::Serialize;

use super::prep::{SampleArgs, TrimArgs};
use super::select::SelectArgs;
use super::simulate::LinkArgs;
use super::transform::TransformArgs;
use super::{prep, select, transform};
use crate::error::{CliError, Context, Result};
use crate::io::{read_profiles, write_json};
use crate::manifest::Recorder;

#[derive(Debug, Clone, Args, Serialize)]
pub struct RunArgs {
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long = "internal-prefix", required = true)]
    pub internal_prefix: Vec<Ipv4Prefix>,
    #[arg(long, value_delimiter = ',', default_value = "60")]
    pub windows_s: Vec<f64>,
    #[arg(long, default_value_t = 10.0)]
    pub stride_s: f64,
    #[arg(long, default_value_t = 100)]
    pub bin_ms: u32,
    /// Store filter applied before trimming.
    #[arg(long, default_value = "")]
    pub filter: String,
    #[arg(long)]
    pub limit: Option<usize>,
    /// Trim threshold; the lowest shaping rate when absent.
    #[arg(long)]
    pub threshold_bps: Option<f64>,
    #[arg(long, default_value_t = 50)]
    pub per_bucket: usize,
    #[arg(long, default_value_t = 1)]
    pub toggle_min: u32,
    #[arg(long, default_value_t = 100)]
    pub toggle_max: u32,
    #[arg(long, value_delimiter = ',', default_value = "4e6,6e6,8e6,10e6")]
    pub rates_bps: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub latencies_ms: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "pfifo")]
    pub aqms: Vec<Aqm>,
    /// Repetitions per grid point; iteration k runs with seed + k.
    #[arg(long, default_value_t = 1)]
    pub iterations: u32,
    #[command(flatten)]
    #[serde(flatten)]
    pub link: LinkArgs,
    #[arg(long, env = "NETREPLICA_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Serialize)]
struct TraceSummary {
    file: String,
    ctp_id: String,
    rate_bps: f64,
    latency_ms: f64,
    aqm: Aqm,
    iteration: u32,
    mean_throughput_bps: f64,
    mean_rtt_ms: Option<f64>,
    drops: u64,
}

#[derive(Serialize)]
struct GroupConsistency {
    ctp_id: String,
    rate_bps: f64,
    latency_ms: f64,
    aqm: Aqm,
    mean_dtw: f64,
    std_dtw: f64,
}

#[derive(Serialize)]
struct RunReport {
    traces: Vec<TraceSummary>,
    consistency: Vec<GroupConsistency>,
}

/// Grid point without the iteration: (profile index, rate bits, latency bits, AQM).
type GroupKey = (usize, u64, u64, Aqm);

struct GridPoint {
    ctp: usize,
    rate_bps: f64,
    latency_ms: f64,
    aqm: Aqm,
    iteration: u32,
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.context(format!("stage `{name}` failed"))
}

fn trace_name(ctp_id: &str, g: &GridPoint) -> String {
    format!(
        "{ctp_id}_r{}_l{}_{}_i{}.json",
        g.rate_bps, g.latency_ms, g.aqm.as_str(), g.iteration
    )
}

pub fn execute(args: &RunArgs) -> Result<()> {
    if args.rates_bps.is_empty() || args.aqms.is_empty() {
        return Err(CliError::invalid("the grid needs at least one rate and one AQM"));
    }
    if args.iterations == 0 {
        return Err(CliError::invalid("iterations must be at least 1"));
    }
    let jobs = args
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let dir = &args.out_dir;
    std::fs::create_dir_all(dir).context(format!("creating {}", dir.display()))?;

    let profiles = dir.join("profiles.jsonl");
    stage(
        "transform",
        transform::execute(&TransformArgs {
            trace: args.trace.clone(),
            format: None,
            internal_prefix: args.internal_prefix.clone(),
            keep_non_crossing: false,
            bin_ms: args.bin_ms,
            windows_s: args.windows_s.clone(),
            stride_s: args.stride_s,
            out: profiles.clone(),
        }),
    )?;

    let selected = dir.join("selected.jsonl");
    stage(
        "select",
        select::execute(&SelectArgs {
            store: profiles,
            filter: args.filter.clone(),
            limit: args.limit,
            order_by: None,
            out: selected.clone(),
        }),
    )?;

    let min_rate = args.rates_bps.iter().copied().fold(f64::INFINITY, f64::min);
    let trimmed = dir.join("trimmed.jsonl");
    stage(
        "trim",
        prep::trim(&TrimArgs {
            input: selected,
            threshold_bps: args.threshold_bps.unwrap_or(min_rate),
            filter_only: false,
            out: trimmed.clone(),
            reports: Some(dir.join("trim_reports.jsonl")),
        }),
    )?;

    let sample_path = dir.join("sample.jsonl");
    let sampled = stage(
        "sample",
        prep::sample(&SampleArgs {
            input: trimmed,
            per_bucket: args.per_bucket,
            toggle_min: args.toggle_min,
            toggle_max: args.toggle_max,
            on_threshold_bps: 3e6,
            segment_ms: 100,
            seed: args.seed,
            out: sample_path.clone(),
        }),
    )?;
    if sampled == 0 {
        log::warn!("sample is empty; skipping simulate and eval");
        return Ok(());
    }

    stage("simulate", simulate_grid(args, &sample_path, jobs))
}

fn simulate_grid(args: &RunArgs, sample_path: &Path, jobs: usize) -> Result<()> {
    let ctps = read_profiles(sample_path)?;
    let mut grid = Vec::new();
    for ctp in 0..ctps.len() {
        for &rate_bps in &args.rates_bps {
            for &latency_ms in &args.latencies_ms {
                for &aqm in &args.aqms {
                    for iteration in 0..args.iterations {
                        grid.push(GridPoint { ctp, rate_bps, latency_ms, aqm, iteration });
                    }
                }
            }
        }
    }
    let batch: Vec<SimJob> = grid
        .iter()
        .map(|g| SimJob {
            bottleneck: args.link.bottleneck(g.rate_bps, g.latency_ms, g.aqm),
            app: AppFlowConfig::new(args.link.duration_s, args.seed.wrapping_add(u64::from(g.iteration))),
            ctp: Some(ctps[g.ctp].clone()),
            telemetry_bin_ms: args.link.telemetry_ms,
        })
        .collect();
    log::info!("simulating {} grid points on {jobs} threads", batch.len());
    let results = run_batch(&batch, jobs)?;

    let sims = args.out_dir.join("sims");
    let mut summaries = Vec::with_capacity(grid.len());
    let mut groups: BTreeMap<GroupKey, Vec<(String, Vec<f64>)>> = BTreeMap::new();
    let mut failed = 0usize;
    for ((g, job), result) in grid.iter().zip(&batch).zip(results) {
        let ctp = &ctps[g.ctp];
        let trace = match result {
            Ok(t) => t,
            Err(e) => {
                log::error!("{} failed: {e}", trace_name(&ctp.id, g));
                failed += 1;
                continue;
            }
        };
        let name = trace_name(&ctp.id, g);
        let path = sims.join(&name);
        let mut rec = Recorder::start("simulate", &(&job.bottleneck, &job.app, job.telemetry_bin_ms))?;
        rec.input(sample_path);
        write_json(&path, &trace)?;
        rec.finish(&[&path])?;
        summaries.push(TraceSummary {
            file: format!("sims/{name}"),
            ctp_id: ctp.id.clone(),
            rate_bps: g.rate_bps,
            latency_ms: g.latency_ms,
            aqm: g.aqm,
            iteration: g.iteration,
            mean_throughput_bps: trace.overall_throughput_bps(),
            mean_rtt_ms: trace.rtt.mean_ms,
            drops: trace.queue_stats.drops.iter().sum(),
        });
        groups
            .entry((g.ctp, g.rate_bps.to_bits(), g.latency_ms.to_bits(), g.aqm))
            .or_default()
            .push((name, trace.throughput_bps));
    }

    let mut consistency = Vec::new();
    for ((ctp, rate, lat, aqm), runs) in groups {
        if runs.len() < 2 {
            continue;
        }
        let (labels, series): (Vec<String>, Vec<Vec<f64>>) = runs.into_iter().unzip();
        let c = stage("eval", pairwise_consistency(&labels, &series).map_err(Into::into))?;
        consistency.push(GroupConsistency {
            ctp_id: ctps[ctp].id.clone(),
            rate_bps: f64::from_bits(rate),
            latency_ms: f64::from_bits(lat),
            aqm,
            mean_dtw: c.mean,
            std_dtw: c.std,
        });
    }
    let eval_path = args.out_dir.join("eval.json");
    let mut rec = Recorder::start("eval", &args)?;
    rec.input(sample_path);
    write_json(&eval_path, &RunReport { traces: summaries, consistency })?;
    rec.finish(&[&eval_path])?;
    if failed > 0 {
        return Err(CliError::invalid(format!("{failed} of {} simulations failed", grid.len())));
    }
    Ok(())
}
