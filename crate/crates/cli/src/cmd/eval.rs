use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use crosstraffic::eval::{jensen_distance, mahalanobis_coverage, pairwise_consistency, DEFAULT_JENSEN_BINS, DEFAULT_RIDGE};
use crosstraffic::sim::SimTrace;
use serde::Serialize;

use crate::error::{Context, Result};
use crate::io::{read_matrix, read_series, write_json};
use crate::manifest::Recorder;

#[derive(Debug, Clone, Subcommand, Serialize)]
pub enum EvalCommand {
    /// Pairwise DTW consistency of several series.
    Dtw(DtwArgs),
    /// Jensen distance between two samples.
    Jensen(JensenArgs),
    /// Mahalanobis distance of candidates from a reference set.
    Coverage(CoverageArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DtwArgs {
    /// Headerless CSV series, or SimTrace JSON (its throughput series).
    #[arg(long, num_args = 1.., required = true)]
    pub traces: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct JensenArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, default_value_t = DEFAULT_JENSEN_BINS)]
    pub bins: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CoverageArgs {
    /// Reference points, one per row.
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long)]
    pub candidates: PathBuf,
    /// Report the fraction of candidates beyond each distance.
    #[arg(long, value_delimiter = ',', default_value = "10")]
    pub thresholds: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_RIDGE)]
    pub ridge: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn load_series(path: &Path) -> Result<Vec<f64>> {
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        let raw = std::fs::read(path).context(format!("reading {}", path.display()))?;
        let trace: SimTrace = serde_json::from_slice(&raw).context(format!("parsing {}", path.display()))?;
        Ok(trace.throughput_bps)
    } else {
        read_series(path)
    }
}

#[derive(Serialize)]
struct JensenReport {
    distance: f64,
    bins: usize,
    a_len: usize,
    b_len: usize,
}

fn emit<T: Serialize>(rec: Recorder, out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(path) => {
            write_json(path, value)?;
            rec.finish(&[path])?;
        }
        None => println!("{}", serde_json::to_string_pretty(value)?),
    }
    Ok(())
}

pub fn execute(cmd: &EvalCommand) -> Result<()> {
    match cmd {
        EvalCommand::Dtw(args) => {
            let mut rec = Recorder::start("eval dtw", args)?;
            let mut series = Vec::new();
            for p in &args.traces {
                series.push(load_series(p)?);
                rec.input(p);
            }
            let labels: Vec<String> = args.traces.iter().map(|p| p.display().to_string()).collect();
            let report = pairwise_consistency(&labels, &series)?;
            emit(rec, args.out.as_deref(), &report)
        }
        EvalCommand::Jensen(args) => {
            let mut rec = Recorder::start("eval jensen", args)?;
            let a = load_series(&args.a)?;
            let b = load_series(&args.b)?;
            rec.input(&args.a);
            rec.input(&args.b);
            let report = JensenReport {
                distance: jensen_distance(&a, &b, args.bins)?,
                bins: args.bins,
                a_len: a.len(),
                b_len: b.len(),
            };
            emit(rec, args.out.as_deref(), &report)
        }
        EvalCommand::Coverage(args) => {
            let mut rec = Recorder::start("eval coverage", args)?;
            let reference = read_matrix(&args.reference)?;
            let candidates = read_matrix(&args.candidates)?;
            rec.input(&args.reference);
            rec.input(&args.candidates);
            let report = mahalanobis_coverage(&reference, &candidates, args.ridge, &args.thresholds)?;
            emit(rec, args.out.as_deref(), &report)
        }
    }
}
