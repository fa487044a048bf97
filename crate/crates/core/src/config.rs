//! Declarative mapping from source tables to the event log.
//!
//! The defaults give the standard stay-level layout; a TOML file with any
//! subset of the keys below overrides them:
//!
//! ```toml
//! case_id_column = "stay_id"
//! triage_offset_seconds = 1
//! case_attributes = ["stay_id", "subject_id", "gender", "race",
//!                    "arrival_transport", "disposition", "acuity", "chiefcomplaint"]
//! event_attributes = ["hadm_id", "temperature", "pain", "seq_num"]
//! discharge_replication = true
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::activity::ActivityKind;
use crate::error::{Error, Result};
use crate::value::AttrKey;

const DEFAULT_CASE_ATTRIBUTES: [AttrKey; 8] = [
    AttrKey::STAY_ID,
    AttrKey::SUBJECT_ID,
    AttrKey::GENDER,
    AttrKey::RACE,
    AttrKey::ARRIVAL_TRANSPORT,
    AttrKey::DISPOSITION,
    AttrKey::ACUITY,
    AttrKey::CHIEFCOMPLAINT,
];

const DEFAULT_EVENT_ATTRIBUTES: [AttrKey; 21] = [
    AttrKey::HADM_ID,
    AttrKey::TEMPERATURE,
    AttrKey::HEARTRATE,
    AttrKey::RESPRATE,
    AttrKey::O2SAT,
    AttrKey::SBP,
    AttrKey::DBP,
    AttrKey::PAIN,
    AttrKey::RHYTHM,
    AttrKey::MED_RN,
    AttrKey::SEQ_NUM,
    AttrKey::NAME,
    AttrKey::GSN,
    AttrKey::NDC,
    AttrKey::ETC_RN,
    AttrKey::ETCCODE,
    AttrKey::ETCDESCRIPTION,
    AttrKey::GSN_RN,
    AttrKey::ICD_CODE,
    AttrKey::ICD_VERSION,
    AttrKey::ICD_TITLE,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MappingConfig {
    pub case_id_column: String,
    pub case_attributes: Vec<AttrKey>,
    pub event_attributes: Vec<AttrKey>,
    pub triage_offset_seconds: i64,
    /// One discharge event per diagnosis row instead of a single discharge.
    pub discharge_replication: bool,
}

impl Default for MappingConfig {
    fn default() -> Self {
        MappingConfig {
            case_id_column: "stay_id".to_owned(),
            case_attributes: DEFAULT_CASE_ATTRIBUTES.to_vec(),
            event_attributes: DEFAULT_EVENT_ATTRIBUTES.to_vec(),
            triage_offset_seconds: 1,
            discharge_replication: true,
        }
    }
}

/// Where a case attribute is printed in the sparse CSV layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Carrier {
    EveryRow,
    Activity(ActivityKind),
}

/// Carrier row of a per-stay column: the activity derived from the row that
/// supplies it. `None` for columns of multi-row child tables.
pub fn carrier_of(key: AttrKey) -> Option<Carrier> {
    Some(match key {
        AttrKey::STAY_ID | AttrKey::SUBJECT_ID => Carrier::EveryRow,
        AttrKey::GENDER | AttrKey::RACE | AttrKey::ARRIVAL_TRANSPORT | AttrKey::HADM_ID => {
            Carrier::Activity(ActivityKind::Enter)
        }
        AttrKey::DISPOSITION => Carrier::Activity(ActivityKind::Discharge),
        AttrKey::ACUITY | AttrKey::CHIEFCOMPLAINT => Carrier::Activity(ActivityKind::Triage),
        _ => return None,
    })
}

impl MappingConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: MappingConfig =
            toml::from_str(text).map_err(|e| Error::config(format!("mapping config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads `path`, or returns the defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                Self::from_toml_str(&text)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.case_id_column != "stay_id" {
            return Err(Error::config(format!(
                "case_id_column {:?} is not supported; the case notion is the ED stay (stay_id)",
                self.case_id_column
            )));
        }
        if self.triage_offset_seconds <= 0 {
            return Err(Error::config("triage_offset_seconds must be > 0"));
        }
        for key in [AttrKey::STAY_ID, AttrKey::SUBJECT_ID] {
            if !self.case_attributes.contains(&key) {
                return Err(Error::config(format!("case_attributes must include {key}")));
            }
        }
        for key in &self.case_attributes {
            if !key.is_known() {
                return Err(Error::config(format!("unknown attribute {key}")));
            }
            if carrier_of(*key).is_none() {
                return Err(Error::config(format!(
                    "{key} comes from a multi-row table and cannot be a case attribute"
                )));
            }
            if self.event_attributes.contains(key) {
                return Err(Error::config(format!(
                    "{key} is listed as both case and event attribute"
                )));
            }
        }
        for key in &self.event_attributes {
            if !key.is_known() {
                return Err(Error::config(format!("unknown attribute {key}")));
            }
            if matches!(*key, AttrKey::STAY_ID | AttrKey::SUBJECT_ID) {
                return Err(Error::config(format!("{key} cannot be an event attribute")));
            }
        }
        Ok(())
    }

    pub fn is_case_attribute(&self, key: AttrKey) -> bool {
        self.case_attributes.contains(&key)
    }

    pub fn is_event_attribute(&self, key: AttrKey) -> bool {
        self.event_attributes.contains(&key)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("mapping config serializes")
    }

    /// SHA-256 of the canonical TOML form, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml_string().as_bytes()))
    }
}
