use std::collections::{BTreeSet, HashSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::AuditError;

/// Declared-ad ids seen by one complete crawl.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrawlSnapshot {
    pub taken_at: DateTime<Utc>,
    pub ids: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageStats {
    /// Size of the union of snapshots `0..=i`.
    pub cumulative: Vec<usize>,
    /// `growth[i-1] = |union(..=i)| / |union(..i)| - 1`, as a fraction.
    pub growth: Vec<f64>,
    pub mean_growth: f64,
}

/// How much each crawl grows the union of everything seen so far.
pub fn coverage_stats(snapshots: &[CrawlSnapshot]) -> Result<CoverageStats, AuditError> {
    if snapshots.len() < 2 {
        return Err(AuditError::TooFewSnapshots(snapshots.len()));
    }
    if snapshots[0].ids.is_empty() {
        return Err(AuditError::EmptyFirstSnapshot);
    }
    let mut seen: HashSet<&str> = HashSet::new();
    let mut cumulative = Vec::with_capacity(snapshots.len());
    for s in snapshots {
        seen.extend(s.ids.iter().map(String::as_str));
        cumulative.push(seen.len());
    }
    let growth: Vec<f64> = cumulative.windows(2).map(|w| w[1] as f64 / w[0] as f64 - 1.0).collect();
    let mean_growth = growth.iter().sum::<f64>() / growth.len() as f64;
    Ok(CoverageStats {
        cumulative,
        growth,
        mean_growth,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeEstimate {
    pub base_size: usize,
    pub probes: usize,
    /// Ids found by some probe but absent from the base.
    pub new_ids: usize,
    /// `new_ids / base_size`.
    pub total_fraction: f64,
    pub per_probe_fraction: f64,
}

/// Share of ads the base crawl missed, judged by extra targeted searches.
pub fn probe_estimate(base: &HashSet<String>, probes: &[HashSet<String>]) -> Result<ProbeEstimate, AuditError> {
    if base.is_empty() {
        return Err(AuditError::EmptyBase);
    }
    if probes.is_empty() {
        return Err(AuditError::NoProbes);
    }
    let new: HashSet<&String> = probes.iter().flatten().filter(|id| !base.contains(*id)).collect();
    let total_fraction = new.len() as f64 / base.len() as f64;
    Ok(ProbeEstimate {
        base_size: base.len(),
        probes: probes.len(),
        new_ids: new.len(),
        total_fraction,
        per_probe_fraction: total_fraction / probes.len() as f64,
    })
}
