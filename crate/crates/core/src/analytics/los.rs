//! Length of stay and the acuity × LoS quadrants.

use serde::{Deserialize, Serialize};

use super::stats::nearest_rank_percentile;
use crate::error::Result;
use crate::log::{EventLog, Trace};
use crate::quality::rate;
use crate::source::StayId;

pub const DEFAULT_LOS_THRESHOLD_MINUTES: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AcuityBand {
    /// Acuity 1 or 2.
    High,
    /// Acuity 3, 4 or 5.
    Low,
    /// Acuity absent or outside 1..=5.
    Unknown,
}

impl AcuityBand {
    pub fn of(acuity: Option<i64>) -> AcuityBand {
        match acuity {
            Some(1 | 2) => AcuityBand::High,
            Some(3..=5) => AcuityBand::Low,
            _ => AcuityBand::Unknown,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Quadrant {
    /// High acuity, normal stay.
    Q1,
    /// Low acuity, normal stay.
    Q2,
    /// Low acuity, prolonged stay.
    Q3,
    /// High acuity, prolonged stay.
    Q4,
    Unclassified,
}

impl Quadrant {
    pub const ALL: [Quadrant; 5] = [
        Quadrant::Q1,
        Quadrant::Q2,
        Quadrant::Q3,
        Quadrant::Q4,
        Quadrant::Unclassified,
    ];

    /// A stay is normal when its LoS is at most `threshold` minutes.
    pub fn of(band: AcuityBand, los_minutes: f64, threshold: f64) -> Quadrant {
        let normal = los_minutes <= threshold;
        match (band, normal) {
            (AcuityBand::High, true) => Quadrant::Q1,
            (AcuityBand::Low, true) => Quadrant::Q2,
            (AcuityBand::Low, false) => Quadrant::Q3,
            (AcuityBand::High, false) => Quadrant::Q4,
            (AcuityBand::Unknown, _) => Quadrant::Unclassified,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Quadrant::Q1 => "Q1",
            Quadrant::Q2 => "Q2",
            Quadrant::Q3 => "Q3",
            Quadrant::Q4 => "Q4",
            Quadrant::Unclassified => "Unclassified",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LosRecord {
    pub stay_id: StayId,
    pub los_minutes: f64,
    pub acuity: Option<i64>,
    pub acuity_band: AcuityBand,
    /// Set by [`classify_quadrants`].
    pub quadrant: Quadrant,
}

pub fn los_minutes(trace: &Trace) -> Option<f64> {
    let (enter, discharge) = (trace.enter_time()?, trace.discharge_time()?);
    Some((discharge - enter) as f64 / 60.0)
}

/// One record per trace having both an enter and a discharge event.
pub fn compute_los(log: &EventLog) -> Vec<LosRecord> {
    log.traces
        .iter()
        .filter_map(|t| {
            let los = los_minutes(t)?;
            let acuity = t.acuity();
            Some(LosRecord {
                stay_id: t.case_id,
                los_minutes: los,
                acuity,
                acuity_band: AcuityBand::of(acuity),
                quadrant: Quadrant::Unclassified,
            })
        })
        .collect()
}

pub fn los_percentile(records: &[LosRecord], p: f64) -> Result<f64> {
    let values: Vec<f64> = records.iter().map(|r| r.los_minutes).collect();
    nearest_rank_percentile(&values, p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadrantShare {
    pub quadrant: Quadrant,
    pub cases: u64,
    /// Share of all records, Unclassified included in the denominator.
    pub pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadrantTable {
    pub threshold_minutes: f64,
    pub total: u64,
    pub shares: Vec<QuadrantShare>,
}

impl QuadrantTable {
    pub fn share(&self, q: Quadrant) -> &QuadrantShare {
        self.shares
            .iter()
            .find(|s| s.quadrant == q)
            .expect("every quadrant has a row")
    }
}

/// Assigns quadrants in place and tallies the shares.
pub fn classify_quadrants(records: &mut [LosRecord], threshold_minutes: f64) -> QuadrantTable {
    let mut counts = [0u64; 5];
    for r in records.iter_mut() {
        r.quadrant = Quadrant::of(r.acuity_band, r.los_minutes, threshold_minutes);
        counts[Quadrant::ALL.iter().position(|q| *q == r.quadrant).expect("listed")] += 1;
    }
    let total = records.len() as u64;
    QuadrantTable {
        threshold_minutes,
        total,
        shares: Quadrant::ALL
            .iter()
            .zip(counts)
            .map(|(q, c)| QuadrantShare {
                quadrant: *q,
                cases: c,
                pct: rate(c, total),
            })
            .collect(),
    }
}
