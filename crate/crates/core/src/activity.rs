use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// The six activities of an emergency-department stay.
///
/// Declaration order is the tie-break priority applied to events sharing a
/// timestamp, so `Ord` sorts by priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActivityKind {
    Enter,
    Triage,
    MedicineReconciliation,
    VitalSignCheck,
    MedicineDispensation,
    Discharge,
}

impl ActivityKind {
    pub const ALL: [ActivityKind; 6] = [
        ActivityKind::Enter,
        ActivityKind::Triage,
        ActivityKind::MedicineReconciliation,
        ActivityKind::VitalSignCheck,
        ActivityKind::MedicineDispensation,
        ActivityKind::Discharge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ActivityKind::Enter => "Enter the ED",
            ActivityKind::Triage => "Triage in the ED",
            ActivityKind::VitalSignCheck => "Vital sign check",
            ActivityKind::MedicineReconciliation => "Medicine reconciliation",
            ActivityKind::MedicineDispensation => "Medicine dispensation",
            ActivityKind::Discharge => "Discharge from the ED",
        }
    }

    pub fn priority(self) -> u8 {
        self as u8
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Activities sourced from child tables, which may precede arrival.
    pub fn is_optional(self) -> bool {
        matches!(
            self,
            ActivityKind::VitalSignCheck
                | ActivityKind::MedicineReconciliation
                | ActivityKind::MedicineDispensation
        )
    }
}

impl fmt::Display for ActivityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActivityKind {
    type Err = Error;

    /// Accepts the full activity name (case-insensitive) or a short alias
    /// such as `enter`, `triage`, `vital`, `medrecon`, `pyxis`, `discharge`.
    fn from_str(s: &str) -> Result<Self, Error> {
        let t = s.trim();
        if let Some(k) = ActivityKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(t))
        {
            return Ok(k);
        }
        let alias = t.to_ascii_lowercase().replace(['-', '_', ' '], "");
        Ok(match alias.as_str() {
            "enter" => ActivityKind::Enter,
            "triage" => ActivityKind::Triage,
            "vital" | "vitals" | "vitalsign" | "vitalsigncheck" => ActivityKind::VitalSignCheck,
            "medrecon" | "medicinereconciliation" | "reconciliation" => {
                ActivityKind::MedicineReconciliation
            }
            "pyxis" | "meddisp" | "medicinedispensation" | "dispensation" => {
                ActivityKind::MedicineDispensation
            }
            "discharge" => ActivityKind::Discharge,
            _ => return Err(Error::Data(format!("unknown activity {s:?}"))),
        })
    }
}

impl Serialize for ActivityKind {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for ActivityKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
