//! Simultaneously treated stays and the crowdedness threshold.
//!
//! Stay `q` is simultaneous with stay `p` unless it entered after `p` left
//! or left before `p` entered; touching endpoints count as overlap. With
//! `enter <= discharge` for every stay the stays overlapping `p` are those
//! with `enter_q <= discharge_p`, minus those with `discharge_q < enter_p`,
//! so two sorted boundary arrays and binary search give every count in
//! O(n log n).

use serde::{Deserialize, Serialize};

use super::stats::nearest_rank_percentile;
use crate::error::{Error, Result};
use crate::log::EventLog;
use crate::source::StayId;
use crate::time::Timestamp;

pub const DEFAULT_CROWDEDNESS_PERCENTILE: f64 = 75.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StayInterval {
    pub stay_id: StayId,
    pub enter: Timestamp,
    pub discharge: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrowdednessRecord {
    pub stay_id: StayId,
    pub simultaneous_count: u32,
    pub crowded: bool,
}

/// Counts, for each stay in input order, how many stays overlap it. The
/// stay itself is counted only when `include_self` is set.
pub fn simultaneity_counts(stays: &[StayInterval], include_self: bool) -> Result<Vec<u32>> {
    if let Some(bad) = stays.iter().find(|s| s.discharge < s.enter) {
        return Err(Error::Data(format!(
            "stay {} is discharged before it enters",
            bad.stay_id
        )));
    }
    let mut enters: Vec<Timestamp> = stays.iter().map(|s| s.enter).collect();
    let mut discharges: Vec<Timestamp> = stays.iter().map(|s| s.discharge).collect();
    enters.sort_unstable();
    discharges.sort_unstable();
    Ok(stays
        .iter()
        .map(|p| {
            let entered_by_end = enters.partition_point(|e| *e <= p.discharge);
            let left_before_start = discharges.partition_point(|d| *d < p.enter);
            let n = entered_by_end - left_before_start;
            (if include_self { n } else { n - 1 }) as u32
        })
        .collect())
}

/// Nearest-rank percentile of the counts.
pub fn crowdedness_threshold(counts: &[u32], percentile: f64) -> Result<u32> {
    nearest_rank_percentile(counts, percentile)
}

/// Enter and discharge interval of every trace that has both.
pub fn stay_intervals(log: &EventLog) -> Vec<StayInterval> {
    log.traces
        .iter()
        .filter_map(|t| {
            Some(StayInterval {
                stay_id: t.case_id,
                enter: t.enter_time()?,
                discharge: t.discharge_time()?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crowdedness {
    pub percentile: f64,
    pub include_self: bool,
    pub threshold: u32,
    pub crowded_cases: u64,
    pub records: Vec<CrowdednessRecord>,
}

impl Crowdedness {
    pub fn is_crowded(&self, stay: StayId) -> Option<bool> {
        self.records
            .iter()
            .find(|r| r.stay_id == stay)
            .map(|r| r.crowded)
    }
}

/// A stay is crowded when its count is at least the threshold.
pub fn crowdedness(log: &EventLog, percentile: f64, include_self: bool) -> Result<Crowdedness> {
    let stays = stay_intervals(log);
    let counts = simultaneity_counts(&stays, include_self)?;
    let threshold = crowdedness_threshold(&counts, percentile)?;
    let records: Vec<CrowdednessRecord> = stays
        .iter()
        .zip(&counts)
        .map(|(s, &c)| CrowdednessRecord {
            stay_id: s.stay_id,
            simultaneous_count: c,
            crowded: c >= threshold,
        })
        .collect();
    Ok(Crowdedness {
        percentile,
        include_self,
        threshold,
        crowded_cases: records.iter().filter(|r| r.crowded).count() as u64,
        records,
    })
}
