//! Cross-traffic profiling and replay toolkit.
//!
//! The crate turns raw packet traces into indexed cross-traffic profiles
//! (CTPs), prepares them for replay at a target shaping rate, replays them
//! through a deterministic single-bottleneck simulator next to a closed-loop
//! bulk flow, and scores the resulting telemetry.
//!
//! Data flows through the modules in this order:
//!
//! 1. [`ingest`]: parse PCAP / packet CSV and split packets per internal host.
//! 2. [`pipeline`]: bin per-host bytes, aggregate along the IPv4 prefix tree,
//!    cut sliding windows and compute intensity / burstiness / heterogeneity.
//! 3. [`store`]: persist profiles as JSONL with a sidecar index and answer
//!    conjunctive attribute queries.
//! 4. [`prep`]: peak filtering, proportional trimming, toggle counting and
//!    toggle-stratified sampling.
//! 5. [`sim`]: token-bucket shaped bottleneck with pFIFO / CoDel / FQ-CoDel.
//! 6. [`eval`]: DTW, Jensen distance, autocorrelation and Mahalanobis coverage.

pub mod eval;
pub mod ingest;
pub mod net;
pub mod pipeline;
pub mod prep;
pub mod sim;
pub mod store;

pub use eval::{CoverageReport, DistanceMatrix, EvalError};
pub use ingest::{HostGroup, IngestConfig, IngestError, PacketRecord, TraceFormat};
pub use net::{Direction, Ipv4Prefix, Protocol};
pub use pipeline::{ByteSeries, CrossTrafficProfile, PipelineError, PrefixNode, ProfileMetrics};
pub use prep::{PrepError, SamplingPlan, TrimReport};
pub use sim::{AppFlowConfig, Aqm, BottleneckConfig, SimError, SimTrace};
pub use store::{ProfileQuery, ProfileStore, StoreError};

/// Errors from any stage, for callers that drive the whole pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Prep(#[from] PrepError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}
