use std::path::{Path, PathBuf};

use clap::Args;
use crosstraffic::ingest::{decompose, parse_trace, IngestConfig, TraceFormat};
use crosstraffic::net::Ipv4Prefix;
use crosstraffic::pipeline::{transform, TransformParams, WindowSpec, DEFAULT_BIN_WIDTH_MS};
use crosstraffic::store::ProfileStore;
use serde::Serialize;

use crate::error::{CliError, Context, Result};
use crate::io::{read_profiles, write_profiles};
use crate::manifest::Recorder;

#[derive(Debug, Clone, Args, Serialize)]
pub struct TransformArgs {
    /// Packet trace, classic pcap or packet CSV.
    #[arg(long)]
    pub trace: PathBuf,
    /// `pcap` or `csv`; guessed from the file extension when absent.
    #[arg(long)]
    pub format: Option<TraceFormat>,
    /// Internal address space (CIDR); repeat for several prefixes.
    #[arg(long = "internal-prefix", required = true)]
    pub internal_prefix: Vec<Ipv4Prefix>,
    /// Keep packets that do not cross the internal/external boundary.
    #[arg(long)]
    pub keep_non_crossing: bool,
    #[arg(long, default_value_t = DEFAULT_BIN_WIDTH_MS)]
    pub bin_ms: u32,
    /// Window durations in seconds, comma separated or repeated.
    #[arg(long, value_delimiter = ',', default_value = "60")]
    pub windows_s: Vec<f64>,
    #[arg(long, default_value_t = 10.0)]
    pub stride_s: f64,
    /// Profile JSONL to write.
    #[arg(long)]
    pub out: PathBuf,
}

fn source_name(trace: &Path) -> String {
    trace
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| trace.display().to_string())
}

/// Trace → profiles JSONL. Returns the number of profiles written.
pub fn execute(args: &TransformArgs) -> Result<usize> {
    let mut rec = Recorder::start("transform", args)?;
    let format = args.format.unwrap_or_else(|| TraceFormat::from_path(&args.trace));
    let parsed = parse_trace(&args.trace, format)?;
    rec.input(&args.trace);
    if parsed.skipped.total() > 0 {
        log::warn!(
            "{}: skipped {} IPv6, {} non-IP and {} undecodable packets",
            args.trace.display(),
            parsed.skipped.ipv6,
            parsed.skipped.non_ip,
            parsed.skipped.undecodable
        );
    }
    let mut cfg = IngestConfig::new(args.internal_prefix.clone())?;
    cfg.drop_non_crossing = !args.keep_non_crossing;
    let decomposition = decompose(&parsed.records, &cfg);
    let params = TransformParams {
        bin_width_ms: args.bin_ms,
        windows: WindowSpec {
            durations_s: args.windows_s.clone(),
            stride_s: args.stride_s,
        },
    };
    let (_, profiles) = transform(&decomposition, &params, &source_name(&args.trace))?;
    write_profiles(&args.out, &profiles)?;
    rec.finish(&[&args.out])?;
    log::info!(
        "{} packets, {} hosts, {} profiles → {}",
        parsed.records.len(),
        decomposition.groups.len(),
        profiles.len(),
        args.out.display()
    );
    Ok(profiles.len())
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IngestArgs {
    /// Store file (JSONL plus a `.idx` sidecar); created when missing.
    #[arg(long)]
    pub store: PathBuf,
    /// Profile JSONL files to add.
    #[arg(long, num_args = 1.., required = true)]
    pub input: Vec<PathBuf>,
}

/// Adds profiles to a store and rewrites its index.
pub fn ingest(args: &IngestArgs) -> Result<usize> {
    let mut rec = Recorder::start("ingest", args)?;
    let mut store = ProfileStore::open(&args.store)?;
    let mut incoming = Vec::new();
    for path in &args.input {
        incoming.extend(read_profiles(path)?);
        rec.input(path);
    }
    let count = store
        .ingest_profiles(incoming)
        .context(format!("ingesting into {}", args.store.display()))?;
    rec.finish(&[&args.store])?;
    log::info!("{} holds {count} profiles", args.store.display());
    Ok(count)
}

pub(crate) fn open_existing_store(path: &Path) -> Result<ProfileStore> {
    if !path.exists() {
        return Err(CliError::Io(anyhow::anyhow!("store {} does not exist", path.display())));
    }
    Ok(ProfileStore::open(path)?)
}
