use std::path::PathBuf;

use clap::Args;
use crosstraffic::store::ProfileQuery;
use serde::Serialize;

use super::transform::open_existing_store;
use crate::error::Result;
use crate::io::write_profiles;
use crate::manifest::Recorder;

#[derive(Debug, Clone, Args, Serialize)]
pub struct SelectArgs {
    /// Store or plain profile JSONL.
    #[arg(long)]
    pub store: PathBuf,
    /// Conjunctive filter, e.g. `pmr95>=1 && mean_throughput_bps>1e6`; empty selects all.
    #[arg(long, default_value = "")]
    pub filter: String,
    #[arg(long)]
    pub limit: Option<usize>,
    /// `attribute:asc` or `attribute:desc`; default is id order.
    #[arg(long)]
    pub order_by: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn execute(args: &SelectArgs) -> Result<usize> {
    let mut rec = Recorder::start("select", args)?;
    let mut query = ProfileQuery::parse(&args.filter)?;
    if let Some(spec) = &args.order_by {
        let (attr, order) = ProfileQuery::parse_order(spec)?;
        query = query.with_order(attr, order);
    }
    if let Some(n) = args.limit {
        query = query.with_limit(n);
    }
    let store = open_existing_store(&args.store)?;
    rec.input(&args.store);
    let hits = store.select(&query);
    write_profiles(&args.out, &hits)?;
    rec.finish(&[&args.out])?;
    log::info!("{} of {} profiles match `{query}`", hits.len(), store.len());
    Ok(hits.len())
}
