//! Seeded synthetic stay tables with injected quality defects.
//!
//! Every defect is injected into an exact number of stays, chosen by index
//! sampling, and recorded in a [`GroundTruth`] so that downstream results can
//! be compared with equality.
//!
//! Parameters load from TOML; every key is optional:
//!
//! ```toml
//! seed = 7
//! n_patients = 1000
//! stays_per_patient = { min = 1, max = 3 }
//! vitalsign_rows = { min = 0, max = 8 }
//! start = "2110-01-01 00:00:00"
//! horizon_days = 30
//!
//! [defects]
//! missing_acuity_pct = 10.0
//! pre_arrival_event_pct = 5.0
//! ```

use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::source::{
    write_source_tables, DiagnosisRecord, EdStayRecord, MedreconRecord, PyxisRecord, Reading,
    SourceTables, StayId, TriageRecord, VitalSignRecord, Vitals,
};
use crate::time::Timestamp;
use crate::value::Decimal;

pub const STAY_ID_BASE: i64 = 30_000_000;
pub const SUBJECT_ID_BASE: i64 = 10_000_000;
pub const HADM_ID_BASE: i64 = 20_000_000;

/// Overlap counts are brute-forced into the ground truth up to this many
/// valid stays.
pub const OVERLAP_TRUTH_LIMIT: usize = 2000;

/// Inclusive uniform integer range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountRange {
    pub min: u32,
    pub max: u32,
}

impl CountRange {
    pub const fn new(min: u32, max: u32) -> Self {
        CountRange { min, max }
    }

    fn draw(self, rng: &mut impl Rng) -> u32 {
        rng.random_range(self.min..=self.max)
    }

    pub fn mean(self) -> f64 {
        (self.min as f64 + self.max as f64) / 2.0
    }
}

/// Defect rates in percent. Each rate is applied to its own pool of stays
/// (see the field docs) and rounded to an exact count. Keys left out of a
/// `[defects]` table are 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DefectRates {
    /// Valid stays whose triage acuity is blank.
    pub missing_acuity_pct: f64,
    /// HOME stays that carry an hadm_id.
    pub home_with_hadm_pct: f64,
    /// ADMITTED stays without an hadm_id.
    pub admitted_without_hadm_pct: f64,
    /// Valid stays whose triage pain is outside 0..=10 or not a number.
    pub pain_out_of_range_pct: f64,
    /// Valid stays with one extra child row charted at or before arrival.
    pub pre_arrival_event_pct: f64,
    /// Valid stays whose triage temperature is recorded in Celsius.
    pub celsius_temperature_pct: f64,
    /// All stays whose outtime does not come after intime.
    pub invalid_duration_pct: f64,
}

impl DefectRates {
    pub const NONE: DefectRates = DefectRates {
        missing_acuity_pct: 0.0,
        home_with_hadm_pct: 0.0,
        admitted_without_hadm_pct: 0.0,
        pain_out_of_range_pct: 0.0,
        pre_arrival_event_pct: 0.0,
        celsius_temperature_pct: 0.0,
        invalid_duration_pct: 0.0,
    };

    fn all(&self) -> [(&'static str, f64); 7] {
        [
            ("missing_acuity_pct", self.missing_acuity_pct),
            ("home_with_hadm_pct", self.home_with_hadm_pct),
            ("admitted_without_hadm_pct", self.admitted_without_hadm_pct),
            ("pain_out_of_range_pct", self.pain_out_of_range_pct),
            ("pre_arrival_event_pct", self.pre_arrival_event_pct),
            ("celsius_temperature_pct", self.celsius_temperature_pct),
            ("invalid_duration_pct", self.invalid_duration_pct),
        ]
    }
}

impl Default for DefectRates {
    fn default() -> Self {
        DefectRates::NONE
    }
}

impl DefectRates {
    /// Rates used when no `[defects]` table is given.
    pub fn typical() -> Self {
        DefectRates {
            missing_acuity_pct: 1.5,
            home_with_hadm_pct: 15.0,
            admitted_without_hadm_pct: 0.5,
            pain_out_of_range_pct: 5.0,
            pre_arrival_event_pct: 1.0,
            celsius_temperature_pct: 0.5,
            invalid_duration_pct: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenParams {
    pub seed: u64,
    pub n_patients: u32,
    pub stays_per_patient: CountRange,
    pub vitalsign_rows: CountRange,
    pub medrecon_rows: CountRange,
    pub pyxis_rows: CountRange,
    pub diagnosis_rows: CountRange,
    /// Length of valid stays in minutes.
    pub los_minutes: CountRange,
    /// Earliest intime, `YYYY-MM-DD HH:MM:SS`.
    pub start: String,
    /// Intimes are spread uniformly over this many days after `start`.
    pub horizon_days: u32,
    pub defects: DefectRates,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            seed: 42,
            n_patients: 1000,
            stays_per_patient: CountRange::new(1, 3),
            vitalsign_rows: CountRange::new(0, 8),
            medrecon_rows: CountRange::new(0, 12),
            pyxis_rows: CountRange::new(0, 8),
            diagnosis_rows: CountRange::new(0, 4),
            los_minutes: CountRange::new(20, 1200),
            start: "2110-01-01 00:00:00".into(),
            horizon_days: 30,
            defects: DefectRates::typical(),
        }
    }
}

impl GenParams {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let p: GenParams =
            toml::from_str(text).map_err(|e| Error::config(format!("generator params: {e}")))?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.defects.all() {
            if !(0.0..=100.0).contains(&v) {
                return Err(Error::config(format!("{name} = {v} is outside [0, 100]")));
            }
        }
        for (name, r) in [
            ("stays_per_patient", self.stays_per_patient),
            ("vitalsign_rows", self.vitalsign_rows),
            ("medrecon_rows", self.medrecon_rows),
            ("pyxis_rows", self.pyxis_rows),
            ("diagnosis_rows", self.diagnosis_rows),
            ("los_minutes", self.los_minutes),
        ] {
            if r.min > r.max {
                return Err(Error::config(format!("{name}: min {} > max {}", r.min, r.max)));
            }
        }
        if self.los_minutes.min < 2 {
            return Err(Error::config("los_minutes.min must be at least 2"));
        }
        if self.horizon_days == 0 {
            return Err(Error::config("horizon_days must be positive"));
        }
        self.start_time()?;
        Ok(())
    }

    fn start_time(&self) -> Result<Timestamp> {
        Timestamp::parse(&self.start)
            .ok_or_else(|| Error::config(format!("start {:?} is not a timestamp", self.start)))
    }
}

/// Child-row counts of one valid stay, the inputs of the event-count formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StayCounts {
    pub stay_id: StayId,
    pub vitalsign: u32,
    pub medrecon: u32,
    pub pyxis: u32,
    pub diagnosis: u32,
}

impl StayCounts {
    pub fn expected_events(&self) -> u64 {
        2 + self.vitalsign as u64
            + self.medrecon as u64
            + self.pyxis as u64
            + self.diagnosis.max(1) as u64
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub patients: u64,
    pub stays: u64,
    /// Stays surviving duration cleaning.
    pub valid_stays: u64,
    pub home_stays: u64,
    pub admitted_stays: u64,
    /// Valid stays with at least one temperature value.
    pub stays_with_temperature: u64,
    pub expected_events: u64,
    pub invalid_duration: Vec<StayId>,
    pub missing_acuity: Vec<StayId>,
    pub home_with_hadm: Vec<StayId>,
    pub admitted_without_hadm: Vec<StayId>,
    pub pain_out_of_range: Vec<StayId>,
    pub pre_arrival: Vec<StayId>,
    /// Child rows charted at or before arrival, one per listed stay.
    pub pre_arrival_count: u64,
    pub celsius_temperature: Vec<StayId>,
    pub celsius_values: u64,
    pub stay_counts: Vec<StayCounts>,
    /// Other valid stays overlapping each valid stay, in `stay_counts`
    /// order; present for small logs only.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub overlap_counts: Option<Vec<u32>>,
}

const GENDERS: [&str; 2] = ["F", "M"];
const RACES: [&str; 6] = [
    "WHITE",
    "BLACK/AFRICAN AMERICAN",
    "HISPANIC/LATINO - PUERTO RICAN",
    "ASIAN - CHINESE",
    "OTHER",
    "UNKNOWN",
];
const TRANSPORTS: [(&str, u32); 5] = [
    ("WALK IN", 60),
    ("AMBULANCE", 33),
    ("UNKNOWN", 4),
    ("OTHER", 2),
    ("HELICOPTER", 1),
];
const DISPOSITIONS: [(&str, u32); 6] = [
    ("HOME", 56),
    ("ADMITTED", 33),
    ("TRANSFER", 2),
    ("LEFT WITHOUT BEING SEEN", 3),
    ("ELOPED", 3),
    ("OTHER", 3),
];
const ACUITY: [(i64, u32); 5] = [(1, 6), (2, 33), (3, 53), (4, 7), (5, 1)];
const COMPLAINTS: [&str; 8] = [
    "Abd pain",
    "Chest pain",
    "Dyspnea",
    "Headache",
    "Fever",
    "Fall",
    "Transfer",
    "Back pain",
];
const RHYTHMS: [&str; 3] = ["Sinus Rhythm", "Normal Sinus Rhythm", "Atrial Fibrillation"];
const MEDS: [(&str, &str); 6] = [
    ("acetaminophen", "004489"),
    ("ondansetron", "061716"),
    ("aspirin", "004380"),
    ("lisinopril", "000388"),
    ("Sodium Chloride 0.9%  Flush", "026102"),
    ("morphine", "004091"),
];
const ETC: [(&str, &str); 3] = [
    ("5970", "Analgesic or Antipyretic Non-Opioid"),
    ("1302", "Antiemetic - 5-HT3 Antagonists"),
    ("3940", "ACE Inhibitors"),
];
const ICD: [(&str, i64, &str); 5] = [
    ("R0789", 10, "OTHER CHEST PAIN"),
    ("R109", 10, "UNSPECIFIED ABDOMINAL PAIN"),
    ("R51", 10, "HEADACHE"),
    ("4019", 9, "UNSPECIFIED ESSENTIAL HYPERTENSION"),
    ("78650", 9, "CHEST PAIN NOS"),
];
const BAD_PAIN: [&str; 5] = ["13", "11", "20", "unable", "ok"];

fn weighted<T: Copy>(rng: &mut impl Rng, items: &[(T, u32)]) -> T {
    let total: u32 = items.iter().map(|(_, w)| w).sum();
    let mut x = rng.random_range(0..total);
    for (item, w) in items {
        if x < *w {
            return *item;
        }
        x -= w;
    }
    unreachable!("draw below total weight")
}

fn pick<T: Copy>(rng: &mut impl Rng, items: &[T]) -> T {
    items[rng.random_range(0..items.len())]
}

fn exact_count(pct: f64, pool: usize) -> usize {
    ((pct / 100.0) * pool as f64).round() as usize
}

/// `count` distinct positions of `pool`, in ascending order.
fn choose(rng: &mut impl Rng, pool: &[usize], pct: f64) -> Vec<usize> {
    let k = exact_count(pct, pool.len());
    let mut picked: Vec<usize> = sample(rng, pool.len(), k).into_iter().map(|i| pool[i]).collect();
    picked.sort_unstable();
    picked
}

fn decimal(rng: &mut impl Rng, low_tenths: i64, high_tenths: i64) -> Option<Reading<Decimal>> {
    Some(Reading::Value(Decimal::new(rng.random_range(low_tenths..=high_tenths), 1)))
}

fn whole(rng: &mut impl Rng, low: i64, high: i64) -> Option<Reading<Decimal>> {
    Some(Reading::Value(Decimal::new(rng.random_range(low..=high), 0)))
}

/// Plausible vitals; temperature in Fahrenheit, pain within 0..=10 or blank.
fn vitals(rng: &mut impl Rng, with_temperature: bool) -> Vitals {
    Vitals {
        temperature: if with_temperature {
            decimal(rng, 965, 1010)
        } else {
            None
        },
        heartrate: whole(rng, 55, 120),
        resprate: whole(rng, 12, 24),
        o2sat: whole(rng, 92, 100),
        sbp: whole(rng, 95, 170),
        dbp: whole(rng, 55, 100),
        pain: if rng.random_bool(0.85) {
            Some(rng.random_range(0..=10).to_string())
        } else {
            None
        },
    }
}

/// Whole-minute times in `(intime, outtime]`, sorted.
fn child_times(rng: &mut impl Rng, intime: Timestamp, outtime: Timestamp, n: u32) -> Vec<Timestamp> {
    let first = intime.floor_minute() + 60;
    let last = outtime.floor_minute();
    let slots = (last - first) / 60;
    let mut ts: Vec<Timestamp> = (0..n)
        .map(|_| first + 60 * rng.random_range(0..=slots))
        .collect();
    ts.sort_unstable();
    ts
}

struct StayPlan {
    stay_id: StayId,
    subject_id: i64,
    intime: Timestamp,
    outtime: Timestamp,
    disposition: &'static str,
    counts: [u32; 4],
}

/// Generates the six tables and the matching ground truth. Output depends
/// only on `params`.
pub fn generate_tables(params: &GenParams) -> Result<(SourceTables, GroundTruth)> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let start = params.start_time()?;
    let horizon = params.horizon_days as i64 * 86_400;

    let mut plans: Vec<StayPlan> = Vec::new();
    for p in 0..params.n_patients as i64 {
        for _ in 0..params.stays_per_patient.draw(&mut rng) {
            let intime = start + rng.random_range(0..horizon);
            let los = params.los_minutes.draw(&mut rng) as i64 * 60 + rng.random_range(0..60);
            plans.push(StayPlan {
                stay_id: STAY_ID_BASE + plans.len() as i64,
                subject_id: SUBJECT_ID_BASE + p,
                intime,
                outtime: intime + los,
                disposition: weighted(&mut rng, &DISPOSITIONS),
                counts: [
                    params.vitalsign_rows.draw(&mut rng),
                    params.medrecon_rows.draw(&mut rng),
                    params.pyxis_rows.draw(&mut rng),
                    params.diagnosis_rows.draw(&mut rng),
                ],
            });
        }
    }

    let n = plans.len();
    let d = &params.defects;
    let all: Vec<usize> = (0..n).collect();
    let invalid = choose(&mut rng, &all, d.invalid_duration_pct);
    let mut is_invalid = vec![false; n];
    for &i in &invalid {
        is_invalid[i] = true;
        // zero or negative duration, alternating
        let s = &mut plans[i];
        s.outtime = if i % 2 == 0 { s.intime } else { s.intime + -60 * (1 + i as i64 % 30) };
    }
    let valid: Vec<usize> = all.iter().copied().filter(|&i| !is_invalid[i]).collect();
    let home: Vec<usize> = valid.iter().copied().filter(|&i| plans[i].disposition == "HOME").collect();
    let admitted: Vec<usize> = valid
        .iter()
        .copied()
        .filter(|&i| plans[i].disposition == "ADMITTED")
        .collect();

    let mut flags = vec![0u8; n];
    const MISSING_ACUITY: u8 = 1;
    const HOME_HADM: u8 = 2;
    const ADMIT_NO_HADM: u8 = 4;
    const BAD_PAIN_FLAG: u8 = 8;
    const PRE_ARRIVAL: u8 = 16;
    const CELSIUS: u8 = 32;
    let mut mark = |picked: &[usize], flag: u8| {
        for &i in picked {
            flags[i] |= flag;
        }
    };
    let missing_acuity = choose(&mut rng, &valid, d.missing_acuity_pct);
    mark(&missing_acuity, MISSING_ACUITY);
    let home_with_hadm = choose(&mut rng, &home, d.home_with_hadm_pct);
    mark(&home_with_hadm, HOME_HADM);
    let admitted_without_hadm = choose(&mut rng, &admitted, d.admitted_without_hadm_pct);
    mark(&admitted_without_hadm, ADMIT_NO_HADM);
    let pain = choose(&mut rng, &valid, d.pain_out_of_range_pct);
    mark(&pain, BAD_PAIN_FLAG);
    let pre_arrival = choose(&mut rng, &valid, d.pre_arrival_event_pct);
    mark(&pre_arrival, PRE_ARRIVAL);
    let celsius = choose(&mut rng, &valid, d.celsius_temperature_pct);
    mark(&celsius, CELSIUS);

    let ids = |v: &[usize]| -> Vec<StayId> { v.iter().map(|&i| plans[i].stay_id).collect() };
    let mut truth = GroundTruth {
        seed: params.seed,
        patients: params.n_patients as u64,
        stays: n as u64,
        valid_stays: valid.len() as u64,
        home_stays: home.len() as u64,
        admitted_stays: admitted.len() as u64,
        invalid_duration: ids(&invalid),
        missing_acuity: ids(&missing_acuity),
        home_with_hadm: ids(&home_with_hadm),
        admitted_without_hadm: ids(&admitted_without_hadm),
        pain_out_of_range: ids(&pain),
        pre_arrival: ids(&pre_arrival),
        pre_arrival_count: pre_arrival.len() as u64,
        celsius_temperature: ids(&celsius),
        celsius_values: celsius.len() as u64,
        ..Default::default()
    };

    let mut t = SourceTables::default();
    let mut hadm_next = HADM_ID_BASE;
    for (i, s) in plans.iter().enumerate() {
        let f = flags[i];
        let wants_hadm = match s.disposition {
            "ADMITTED" => f & ADMIT_NO_HADM == 0,
            "HOME" => f & HOME_HADM != 0,
            _ => false,
        };
        let hadm_id = wants_hadm.then(|| {
            hadm_next += 1;
            Reading::Value(hadm_next)
        });
        t.edstays.push(EdStayRecord {
            subject_id: s.subject_id,
            hadm_id,
            stay_id: s.stay_id,
            intime: s.intime,
            outtime: s.outtime,
            gender: Some(pick(&mut rng, &GENDERS).to_owned()),
            race: Some(pick(&mut rng, &RACES).to_owned()),
            arrival_transport: Some(weighted(&mut rng, &TRANSPORTS).to_owned()),
            disposition: Some(s.disposition.to_owned()),
        });

        let mut with_temp = false;
        let triage_temp = f & CELSIUS != 0 || rng.random_bool(0.95);
        let mut tv = vitals(&mut rng, triage_temp);
        with_temp |= triage_temp;
        if f & CELSIUS != 0 {
            tv.temperature = decimal(&mut rng, 360, 389);
        }
        if f & BAD_PAIN_FLAG != 0 {
            tv.pain = Some(pick(&mut rng, &BAD_PAIN).to_owned());
        }
        let acuity = weighted(&mut rng, &ACUITY);
        t.triage.push(TriageRecord {
            subject_id: s.subject_id,
            stay_id: s.stay_id,
            vitals: tv,
            acuity: (f & MISSING_ACUITY == 0).then_some(Reading::Value(acuity)),
            chiefcomplaint: Some(pick(&mut rng, &COMPLAINTS).to_owned()),
        });

        // invalid stays keep their child rows; cleaning must drop them
        let (lo, hi) = if s.outtime > s.intime {
            (s.intime, s.outtime)
        } else {
            (s.outtime + -3600, s.intime + 3600)
        };
        let [nv, nm, np, nd] = s.counts;
        // 0 = vitalsign, 1 = medrecon, 2 = pyxis
        let early_table = (f & PRE_ARRIVAL != 0).then(|| rng.random_range(0..3u8));
        let early_time = s.intime.floor_minute() + -60 * rng.random_range(0..=30i64);
        let early = |table: u8| early_table == Some(table);

        let mut times = child_times(&mut rng, lo, hi, nv);
        if early(0) {
            times.insert(0, early_time);
        }
        for ts in &times {
            let temp = rng.random_bool(0.9);
            with_temp |= temp;
            t.vitalsign.push(VitalSignRecord {
                subject_id: s.subject_id,
                stay_id: s.stay_id,
                charttime: *ts,
                vitals: vitals(&mut rng, temp),
                rhythm: rng.random_bool(0.2).then(|| pick(&mut rng, &RHYTHMS).to_owned()),
            });
        }
        let mut times = child_times(&mut rng, lo, hi, nm);
        if early(1) {
            times.insert(0, early_time);
        }
        for (k, ts) in times.iter().enumerate() {
            let (name, gsn) = pick(&mut rng, &MEDS);
            let (etccode, etcdesc) = pick(&mut rng, &ETC);
            t.medrecon.push(MedreconRecord {
                subject_id: s.subject_id,
                stay_id: s.stay_id,
                charttime: *ts,
                name: name.to_owned(),
                gsn: Some(gsn.to_owned()),
                ndc: Some(format!("{:011}", rng.random_range(0..100_000_000_000u64))),
                etc_rn: k as i64 + 1,
                etccode: Some(etccode.to_owned()),
                etcdescription: Some(etcdesc.to_owned()),
            });
        }
        let mut times = child_times(&mut rng, lo, hi, np);
        if early(2) {
            times.insert(0, early_time);
        }
        for (k, ts) in times.iter().enumerate() {
            let (name, gsn) = pick(&mut rng, &MEDS);
            t.pyxis.push(PyxisRecord {
                subject_id: s.subject_id,
                stay_id: s.stay_id,
                charttime: *ts,
                med_rn: k as i64 + 1,
                name: name.to_owned(),
                gsn_rn: 1,
                gsn: Some(gsn.to_owned()),
            });
        }
        for k in 0..nd {
            let (code, version, title) = pick(&mut rng, &ICD);
            t.diagnosis.push(DiagnosisRecord {
                subject_id: s.subject_id,
                stay_id: s.stay_id,
                seq_num: k as i64 + 1,
                icd_code: code.to_owned(),
                icd_version: version,
                icd_title: title.to_owned(),
            });
        }

        if !is_invalid[i] {
            let c = StayCounts {
                stay_id: s.stay_id,
                vitalsign: nv + early(0) as u32,
                medrecon: nm + early(1) as u32,
                pyxis: np + early(2) as u32,
                diagnosis: nd,
            };
            truth.expected_events += c.expected_events();
            truth.stays_with_temperature += with_temp as u64;
            truth.stay_counts.push(c);
        }
    }

    if valid.len() <= OVERLAP_TRUTH_LIMIT {
        truth.overlap_counts = Some(
            valid
                .iter()
                .map(|&i| {
                    let p = &plans[i];
                    valid
                        .iter()
                        .filter(|&&j| {
                            let q = &plans[j];
                            j != i && !(q.intime > p.outtime || q.outtime < p.intime)
                        })
                        .count() as u32
                })
                .collect(),
        );
    }
    Ok((t, truth))
}

/// Writes the six CSV tables and `ground_truth.json` into `dir`.
pub fn write_synthetic(dir: &Path, tables: &SourceTables, truth: &GroundTruth) -> Result<()> {
    write_source_tables(dir, tables)?;
    let path = dir.join("ground_truth.json");
    let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), truth)
        .map_err(|e| Error::io(&path, e.into()))
}
