use std::path::PathBuf;

use clap::Args;
use crosstraffic::prep::{filter_profiles, stratified_sample, trim_profile, SamplingPlan};
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::io::{read_profiles, write_jsonl_values, write_profiles};
use crate::manifest::Recorder;

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrimArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Peak rate the profiles must fit under.
    #[arg(long)]
    pub threshold_bps: f64,
    /// Drop profiles above the threshold instead of scaling them.
    #[arg(long)]
    pub filter_only: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Trim reports (JSONL); defaults to `<out>.reports.jsonl`.
    #[arg(long)]
    pub reports: Option<PathBuf>,
}

pub fn trim(args: &TrimArgs) -> Result<usize> {
    let mut rec = Recorder::start("trim", args)?;
    let profiles = read_profiles(&args.input)?;
    rec.input(&args.input);
    if args.filter_only {
        let kept = filter_profiles(&profiles, args.threshold_bps)?;
        write_profiles(&args.out, &kept)?;
        rec.finish(&[&args.out])?;
        log::info!("{} of {} profiles fit under {} bps", kept.len(), profiles.len(), args.threshold_bps);
        return Ok(kept.len());
    }
    let mut trimmed = Vec::with_capacity(profiles.len());
    let mut reports = Vec::with_capacity(profiles.len());
    for p in &profiles {
        let (t, r) = trim_profile(p, args.threshold_bps)?;
        trimmed.push(t);
        reports.push(r);
    }
    trimmed.sort_by(|a, b| a.id.cmp(&b.id));
    trimmed.dedup_by(|a, b| a.id == b.id);
    let reports_path = args.reports.clone().unwrap_or_else(|| {
        let mut s = args.out.as_os_str().to_owned();
        s.push(".reports.jsonl");
        PathBuf::from(s)
    });
    write_profiles(&args.out, &trimmed)?;
    write_jsonl_values(&reports_path, &reports)?;
    rec.finish(&[&args.out, &reports_path])?;
    let scaled = reports.iter().filter(|r| r.scale_factor < 1.0).count();
    log::info!("{scaled} of {} profiles scaled down", profiles.len());
    Ok(trimmed.len())
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SampleArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub per_bucket: usize,
    #[arg(long, default_value_t = 1)]
    pub toggle_min: u32,
    #[arg(long, default_value_t = 100)]
    pub toggle_max: u32,
    /// A segment is ON above this rate.
    #[arg(long, default_value_t = 3e6)]
    pub on_threshold_bps: f64,
    #[arg(long, default_value_t = 100)]
    pub segment_ms: u32,
    #[arg(long, env = "NETREPLICA_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

impl SampleArgs {
    pub fn plan(&self) -> Result<SamplingPlan> {
        if self.toggle_min > self.toggle_max {
            return Err(CliError::invalid(format!(
                "toggle-min {} exceeds toggle-max {}",
                self.toggle_min, self.toggle_max
            )));
        }
        Ok(SamplingPlan {
            on_threshold_bps: self.on_threshold_bps,
            segment_ms: self.segment_ms,
            toggle_range: self.toggle_min..=self.toggle_max,
            per_bucket: self.per_bucket,
            seed: self.seed,
        })
    }
}

pub fn sample(args: &SampleArgs) -> Result<usize> {
    let mut rec = Recorder::start("sample", args)?;
    let plan = args.plan()?;
    let profiles = read_profiles(&args.input)?;
    rec.input(&args.input);
    let out = stratified_sample(&profiles, &plan)?;
    let short: Vec<String> = out
        .short_buckets
        .iter()
        .filter(|(_, n)| *n > 0)
        .map(|(v, n)| format!("{v}:{n}"))
        .collect();
    if !short.is_empty() {
        log::warn!("buckets below {} profiles (toggles:available): {}", plan.per_bucket, short.join(" "));
    }
    write_profiles(&args.out, &out.profiles)?;
    rec.finish(&[&args.out])?;
    log::info!("sampled {} of {} profiles", out.profiles.len(), profiles.len());
    Ok(out.profiles.len())
}
