//! Replay preparation: peak filtering, proportional trimming, ON/OFF toggle
//! counting and toggle-stratified sampling.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::pipeline::CrossTrafficProfile;

#[derive(Debug, thiserror::Error)]
pub enum PrepError {
    #[error("threshold must be a positive finite rate, got {0}")]
    BadThreshold(f64),
    #[error("profile {id}: {bin_width_ms} ms bins cannot be resampled to {segment_ms} ms segments")]
    IncompatibleBins {
        id: String,
        bin_width_ms: u32,
        segment_ms: u32,
    },
    #[error("invalid sampling plan: {0}")]
    BadPlan(String),
}

fn check_threshold(threshold_bps: f64) -> Result<(), PrepError> {
    if threshold_bps.is_finite() && threshold_bps > 0.0 {
        Ok(())
    } else {
        Err(PrepError::BadThreshold(threshold_bps))
    }
}

/// Profiles whose peak throughput is at most `threshold_bps`, unmodified.
pub fn filter_profiles(
    profiles: &[CrossTrafficProfile],
    threshold_bps: f64,
) -> Result<Vec<CrossTrafficProfile>, PrepError> {
    check_threshold(threshold_bps)?;
    Ok(profiles
        .iter()
        .filter(|p| p.metrics.max_throughput_bps <= threshold_bps)
        .cloned()
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrimReport {
    pub profile_id: String,
    /// Id of the trimmed profile (equal to `profile_id` when unchanged).
    pub trimmed_id: String,
    pub scale_factor: f64,
    pub original_peak_bps: f64,
    pub threshold_bps: f64,
}

/// Rounds to the nearest integer, ties toward zero.
fn round_half_down(x: f64) -> u64 {
    let c = x.ceil();
    if c - x >= 0.5 {
        x.floor() as u64
    } else {
        c as u64
    }
}

/// Scales every bin by `min(1, threshold / peak)`, so the peak fits under the
/// threshold while bursts keep their shape and timing.
///
/// Bins are rounded half-down; a bin that would still exceed the per-bin
/// byte budget after rounding is floored to it, so the trimmed peak never
/// exceeds the threshold. All-zero profiles come back unchanged.
pub fn trim_profile(
    p: &CrossTrafficProfile,
    threshold_bps: f64,
) -> Result<(CrossTrafficProfile, TrimReport), PrepError> {
    check_threshold(threshold_bps)?;
    let peak = p.metrics.max_throughput_bps;
    let unchanged = |scale_factor| TrimReport {
        profile_id: p.id.clone(),
        trimmed_id: p.id.clone(),
        scale_factor,
        original_peak_bps: peak,
        threshold_bps,
    };
    if peak <= threshold_bps || peak == 0.0 {
        return Ok((p.clone(), unchanged(1.0)));
    }
    let scale = threshold_bps / peak;
    let budget = threshold_bps * f64::from(p.bin_width_ms) / 1000.0 / 8.0;
    let bins: Vec<u64> = p
        .bins
        .iter()
        .map(|&b| {
            let scaled = round_half_down(b as f64 * scale);
            if scaled as f64 > budget {
                budget.floor() as u64
            } else {
                scaled
            }
        })
        .collect();
    let trimmed = p.with_bins(bins);
    let report = TrimReport {
        profile_id: p.id.clone(),
        trimmed_id: trimmed.id.clone(),
        scale_factor: scale,
        original_peak_bps: peak,
        threshold_bps,
    };
    Ok((trimmed, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    /// A segment is ON when its throughput strictly exceeds this rate.
    pub on_threshold_bps: f64,
    pub segment_ms: u32,
    pub toggle_range: RangeInclusive<u32>,
    pub per_bucket: usize,
    pub seed: u64,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        Self {
            on_threshold_bps: 3e6,
            segment_ms: 100,
            toggle_range: 1..=100,
            per_bucket: 50,
            seed: 0,
        }
    }
}

impl SamplingPlan {
    pub fn validate(&self) -> Result<(), PrepError> {
        if self.per_bucket == 0 {
            return Err(PrepError::BadPlan("per_bucket must be positive".into()));
        }
        if self.toggle_range.is_empty() {
            return Err(PrepError::BadPlan(format!(
                "toggle range {}..={} is empty",
                self.toggle_range.start(),
                self.toggle_range.end()
            )));
        }
        if self.segment_ms == 0 {
            return Err(PrepError::BadPlan("segment_ms must be positive".into()));
        }
        if !self.on_threshold_bps.is_finite() || self.on_threshold_bps < 0.0 {
            return Err(PrepError::BadPlan("on_threshold_bps must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// Number of ON↔OFF transitions between adjacent segments. Bins finer than
/// the segment length are summed into segments; the segment length must be
/// a whole multiple of the bin width. A trailing partial segment is ignored.
pub fn toggle_count(p: &CrossTrafficProfile, plan: &SamplingPlan) -> Result<u32, PrepError> {
    if plan.segment_ms == 0 || p.bin_width_ms == 0 || !plan.segment_ms.is_multiple_of(p.bin_width_ms) {
        return Err(PrepError::IncompatibleBins {
            id: p.id.clone(),
            bin_width_ms: p.bin_width_ms,
            segment_ms: plan.segment_ms,
        });
    }
    let per_segment = (plan.segment_ms / p.bin_width_ms) as usize;
    let segment_s = f64::from(plan.segment_ms) / 1000.0;
    let states: Vec<bool> = p
        .bins
        .chunks_exact(per_segment)
        .map(|seg| seg.iter().sum::<u64>() as f64 * 8.0 / segment_s > plan.on_threshold_bps)
        .collect();
    Ok(states.windows(2).filter(|w| w[0] != w[1]).count() as u32)
}

/// Stores the toggle count in each profile's metrics.
pub fn annotate_toggles(
    profiles: &mut [CrossTrafficProfile],
    plan: &SamplingPlan,
) -> Result<(), PrepError> {
    for p in profiles.iter_mut() {
        p.metrics.toggle_count = Some(toggle_count(p, plan)?);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleOutcome {
    /// Sampled profiles, grouped by ascending toggle count.
    pub profiles: Vec<CrossTrafficProfile>,
    /// Buckets in range that held fewer than `per_bucket` profiles:
    /// (toggle count, available).
    pub short_buckets: Vec<(u32, usize)>,
}

impl SampleOutcome {
    pub fn bucket_sizes(&self, plan: &SamplingPlan) -> BTreeMap<u32, usize> {
        let mut sizes = BTreeMap::new();
        for p in &self.profiles {
            let v = p.metrics.toggle_count.unwrap_or_else(|| {
                toggle_count(p, plan).expect("sampled profiles were counted")
            });
            *sizes.entry(v).or_default() += 1;
        }
        sizes
    }
}

/// Draws up to `per_bucket` distinct profiles for every toggle count in the
/// plan's range. Buckets are ordered by id before shuffling, so the result
/// depends only on the set of inputs and the seed.
pub fn stratified_sample(
    profiles: &[CrossTrafficProfile],
    plan: &SamplingPlan,
) -> Result<SampleOutcome, PrepError> {
    plan.validate()?;
    let mut buckets: BTreeMap<u32, BTreeMap<&str, &CrossTrafficProfile>> = BTreeMap::new();
    for p in profiles {
        let v = match p.metrics.toggle_count {
            Some(v) => v,
            None => toggle_count(p, plan)?,
        };
        if plan.toggle_range.contains(&v) {
            buckets.entry(v).or_default().insert(p.id.as_str(), p);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut out = SampleOutcome::default();
    for v in plan.toggle_range.clone() {
        let members: Vec<&CrossTrafficProfile> = buckets
            .get(&v)
            .map(|b| b.values().copied().collect())
            .unwrap_or_default();
        if members.len() < plan.per_bucket {
            out.short_buckets.push((v, members.len()));
        }
        let mut members = members;
        members.shuffle(&mut rng);
        out.profiles.extend(members.into_iter().take(plan.per_bucket).map(|p| {
            let mut p = p.clone();
            p.metrics.toggle_count = Some(v);
            p
        }));
    }
    Ok(out)
}
