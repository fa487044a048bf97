//! Typed image of the six ED source tables, CSV ingest and relational checks.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use csv::StringRecord;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::{Timestamp, TimestampFormat};
use crate::value::{parse_integer, Decimal};

pub type StayId = i64;
pub type SubjectId = i64;

/// A numeric cell that either parsed or is kept verbatim.
#[derive(Debug, Clone, PartialEq)]
pub enum Reading<T> {
    Value(T),
    Unparsed(String),
}

impl<T: std::fmt::Display> Reading<T> {
    fn render(&self) -> String {
        match self {
            Reading::Value(v) => v.to_string(),
            Reading::Unparsed(s) => s.clone(),
        }
    }
}

impl<T: Copy> Reading<T> {
    pub fn value(&self) -> Option<T> {
        match self {
            Reading::Value(v) => Some(*v),
            Reading::Unparsed(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdStayRecord {
    pub subject_id: SubjectId,
    pub hadm_id: Option<Reading<i64>>,
    pub stay_id: StayId,
    pub intime: Timestamp,
    pub outtime: Timestamp,
    pub gender: Option<String>,
    pub race: Option<String>,
    pub arrival_transport: Option<String>,
    pub disposition: Option<String>,
}

/// Vital-sign measurements shared by the triage and vitalsign tables.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vitals {
    pub temperature: Option<Reading<Decimal>>,
    pub heartrate: Option<Reading<Decimal>>,
    pub resprate: Option<Reading<Decimal>>,
    pub o2sat: Option<Reading<Decimal>>,
    pub sbp: Option<Reading<Decimal>>,
    pub dbp: Option<Reading<Decimal>>,
    pub pain: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriageRecord {
    pub subject_id: SubjectId,
    pub stay_id: StayId,
    pub vitals: Vitals,
    pub acuity: Option<Reading<i64>>,
    pub chiefcomplaint: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VitalSignRecord {
    pub subject_id: SubjectId,
    pub stay_id: StayId,
    pub charttime: Timestamp,
    pub vitals: Vitals,
    pub rhythm: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MedreconRecord {
    pub subject_id: SubjectId,
    pub stay_id: StayId,
    pub charttime: Timestamp,
    pub name: String,
    pub gsn: Option<String>,
    pub ndc: Option<String>,
    pub etc_rn: i64,
    pub etccode: Option<String>,
    pub etcdescription: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PyxisRecord {
    pub subject_id: SubjectId,
    pub stay_id: StayId,
    pub charttime: Timestamp,
    pub med_rn: i64,
    pub name: String,
    pub gsn_rn: i64,
    pub gsn: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosisRecord {
    pub subject_id: SubjectId,
    pub stay_id: StayId,
    pub seq_num: i64,
    pub icd_code: String,
    pub icd_version: i64,
    pub icd_title: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SourceTables {
    pub edstays: Vec<EdStayRecord>,
    pub triage: Vec<TriageRecord>,
    pub vitalsign: Vec<VitalSignRecord>,
    pub medrecon: Vec<MedreconRecord>,
    pub pyxis: Vec<PyxisRecord>,
    pub diagnosis: Vec<DiagnosisRecord>,
}

/// Source table identity, also used for event provenance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Table {
    Edstays,
    Triage,
    Vitalsign,
    Medrecon,
    Pyxis,
    Diagnosis,
}

impl Table {
    pub const ALL: [Table; 6] = [
        Table::Edstays,
        Table::Triage,
        Table::Vitalsign,
        Table::Medrecon,
        Table::Pyxis,
        Table::Diagnosis,
    ];

    pub const CHILDREN: [Table; 5] = [
        Table::Triage,
        Table::Vitalsign,
        Table::Medrecon,
        Table::Pyxis,
        Table::Diagnosis,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Table::Edstays => "edstays",
            Table::Triage => "triage",
            Table::Vitalsign => "vitalsign",
            Table::Medrecon => "medrecon",
            Table::Pyxis => "pyxis",
            Table::Diagnosis => "diagnosis",
        }
    }

    pub fn file_name(self) -> String {
        format!("{}.csv", self.name())
    }

    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Table::Edstays => &[
                "subject_id",
                "hadm_id",
                "stay_id",
                "intime",
                "outtime",
                "gender",
                "race",
                "arrival_transport",
                "disposition",
            ],
            Table::Triage => &[
                "subject_id",
                "stay_id",
                "temperature",
                "heartrate",
                "resprate",
                "o2sat",
                "sbp",
                "dbp",
                "pain",
                "acuity",
                "chiefcomplaint",
            ],
            Table::Vitalsign => &[
                "subject_id",
                "stay_id",
                "charttime",
                "temperature",
                "heartrate",
                "resprate",
                "o2sat",
                "sbp",
                "dbp",
                "rhythm",
                "pain",
            ],
            Table::Medrecon => &[
                "subject_id",
                "stay_id",
                "charttime",
                "name",
                "gsn",
                "ndc",
                "etc_rn",
                "etccode",
                "etcdescription",
            ],
            Table::Pyxis => &[
                "subject_id",
                "stay_id",
                "charttime",
                "med_rn",
                "name",
                "gsn_rn",
                "gsn",
            ],
            Table::Diagnosis => &[
                "subject_id",
                "stay_id",
                "seq_num",
                "icd_code",
                "icd_version",
                "icd_title",
            ],
        }
    }
}

impl std::fmt::Display for Table {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl SourceTables {
    pub fn row_count(&self, table: Table) -> usize {
        match table {
            Table::Edstays => self.edstays.len(),
            Table::Triage => self.triage.len(),
            Table::Vitalsign => self.vitalsign.len(),
            Table::Medrecon => self.medrecon.len(),
            Table::Pyxis => self.pyxis.len(),
            Table::Diagnosis => self.diagnosis.len(),
        }
    }

    fn child_stay_ids(&self, table: Table) -> Vec<StayId> {
        match table {
            Table::Edstays => self.edstays.iter().map(|r| r.stay_id).collect(),
            Table::Triage => self.triage.iter().map(|r| r.stay_id).collect(),
            Table::Vitalsign => self.vitalsign.iter().map(|r| r.stay_id).collect(),
            Table::Medrecon => self.medrecon.iter().map(|r| r.stay_id).collect(),
            Table::Pyxis => self.pyxis.iter().map(|r| r.stay_id).collect(),
            Table::Diagnosis => self.diagnosis.iter().map(|r| r.stay_id).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct IngestOptions {
    /// Load the six files on parallel workers.
    pub parallel: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedRow {
    pub table: Table,
    /// 1-based line number in the CSV file (the header is line 1).
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableIngest {
    pub table: Table,
    pub raw_rows: usize,
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IngestReport {
    pub tables: Vec<TableIngest>,
    pub rejected: Vec<RejectedRow>,
}

impl IngestReport {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer_pretty(BufWriter::new(file), &self.rejected)
            .map_err(|e| Error::io(path, e.into()))
    }
}

/// Result of [`load_source_tables`].
#[derive(Debug, Clone)]
pub struct LoadedTables {
    pub tables: SourceTables,
    pub report: IngestReport,
}

/// Cell accessor over one CSV row, addressed by the table's declared columns.
struct Row<'a> {
    record: &'a StringRecord,
    index: &'a [usize],
}

impl<'a> Row<'a> {
    fn cell(&self, col: usize) -> &'a str {
        self.record.get(self.index[col]).unwrap_or("")
    }

    fn text(&self, col: usize) -> Option<String> {
        let c = self.cell(col);
        (!c.is_empty()).then(|| c.to_owned())
    }

    fn required_text(&self, col: usize) -> String {
        self.cell(col).to_owned()
    }

    fn id(&self, col: usize, name: &str) -> Result<i64, String> {
        let c = self.cell(col);
        if c.is_empty() {
            return Err(format!("empty {name}"));
        }
        parse_integer(c).ok_or_else(|| format!("unparseable {name} {c:?}"))
    }

    fn timestamp(&self, col: usize, name: &str) -> Result<Timestamp, String> {
        let c = self.cell(col);
        if c.is_empty() {
            return Err(format!("empty {name}"));
        }
        Timestamp::parse(c).ok_or_else(|| format!("unparseable {name} {c:?}"))
    }

    fn decimal(&self, col: usize) -> Option<Reading<Decimal>> {
        let c = self.cell(col);
        if c.is_empty() {
            return None;
        }
        Some(match c.parse::<Decimal>() {
            Ok(d) => Reading::Value(d),
            Err(()) => Reading::Unparsed(c.to_owned()),
        })
    }

    fn integer(&self, col: usize) -> Option<Reading<i64>> {
        let c = self.cell(col);
        if c.is_empty() {
            return None;
        }
        Some(match parse_integer(c) {
            Some(i) => Reading::Value(i),
            None => Reading::Unparsed(c.to_owned()),
        })
    }

    fn vitals(&self, first: usize, pain: usize) -> Vitals {
        Vitals {
            temperature: self.decimal(first),
            heartrate: self.decimal(first + 1),
            resprate: self.decimal(first + 2),
            o2sat: self.decimal(first + 3),
            sbp: self.decimal(first + 4),
            dbp: self.decimal(first + 5),
            pain: self.text(pain),
        }
    }
}

trait SourceRecord: Sized + Send {
    const TABLE: Table;
    fn parse(row: &Row<'_>) -> Result<Self, String>;
    fn write(&self, out: &mut Vec<String>);
    /// Key whose repetition is a schema violation, if the table has one.
    fn unique_key(&self) -> Option<(StayId, i64)> {
        None
    }
}

impl SourceRecord for EdStayRecord {
    const TABLE: Table = Table::Edstays;

    fn parse(row: &Row<'_>) -> Result<Self, String> {
        Ok(EdStayRecord {
            subject_id: row.id(0, "subject_id")?,
            hadm_id: row.integer(1),
            stay_id: row.id(2, "stay_id")?,
            intime: row.timestamp(3, "intime")?,
            outtime: row.timestamp(4, "outtime")?,
            gender: row.text(5),
            race: row.text(6),
            arrival_transport: row.text(7),
            disposition: row.text(8),
        })
    }

    fn write(&self, out: &mut Vec<String>) {
        out.extend([
            self.subject_id.to_string(),
            opt_render(&self.hadm_id),
            self.stay_id.to_string(),
            self.intime.format(TimestampFormat::Iso),
            self.outtime.format(TimestampFormat::Iso),
            opt_text(&self.gender),
            opt_text(&self.race),
            opt_text(&self.arrival_transport),
            opt_text(&self.disposition),
        ]);
    }

    fn unique_key(&self) -> Option<(StayId, i64)> {
        Some((self.stay_id, 0))
    }
}

impl SourceRecord for TriageRecord {
    const TABLE: Table = Table::Triage;

    fn parse(row: &Row<'_>) -> Result<Self, String> {
        Ok(TriageRecord {
            subject_id: row.id(0, "subject_id")?,
            stay_id: row.id(1, "stay_id")?,
            vitals: row.vitals(2, 8),
            acuity: row.integer(9),
            chiefcomplaint: row.text(10),
        })
    }

    fn write(&self, out: &mut Vec<String>) {
        out.push(self.subject_id.to_string());
        out.push(self.stay_id.to_string());
        write_measurements(&self.vitals, out);
        out.push(opt_text(&self.vitals.pain));
        out.push(opt_render(&self.acuity));
        out.push(opt_text(&self.chiefcomplaint));
    }

    fn unique_key(&self) -> Option<(StayId, i64)> {
        Some((self.stay_id, 0))
    }
}

impl SourceRecord for VitalSignRecord {
    const TABLE: Table = Table::Vitalsign;

    fn parse(row: &Row<'_>) -> Result<Self, String> {
        Ok(VitalSignRecord {
            subject_id: row.id(0, "subject_id")?,
            stay_id: row.id(1, "stay_id")?,
            charttime: row.timestamp(2, "charttime")?,
            vitals: row.vitals(3, 10),
            rhythm: row.text(9),
        })
    }

    fn write(&self, out: &mut Vec<String>) {
        out.push(self.subject_id.to_string());
        out.push(self.stay_id.to_string());
        out.push(self.charttime.format(TimestampFormat::Iso));
        write_measurements(&self.vitals, out);
        out.push(opt_text(&self.rhythm));
        out.push(opt_text(&self.vitals.pain));
    }
}

impl SourceRecord for MedreconRecord {
    const TABLE: Table = Table::Medrecon;

    fn parse(row: &Row<'_>) -> Result<Self, String> {
        Ok(MedreconRecord {
            subject_id: row.id(0, "subject_id")?,
            stay_id: row.id(1, "stay_id")?,
            charttime: row.timestamp(2, "charttime")?,
            name: row.required_text(3),
            gsn: row.text(4),
            ndc: row.text(5),
            etc_rn: row.id(6, "etc_rn")?,
            etccode: row.text(7),
            etcdescription: row.text(8),
        })
    }

    fn write(&self, out: &mut Vec<String>) {
        out.extend([
            self.subject_id.to_string(),
            self.stay_id.to_string(),
            self.charttime.format(TimestampFormat::Iso),
            self.name.clone(),
            opt_text(&self.gsn),
            opt_text(&self.ndc),
            self.etc_rn.to_string(),
            opt_text(&self.etccode),
            opt_text(&self.etcdescription),
        ]);
    }
}

impl SourceRecord for PyxisRecord {
    const TABLE: Table = Table::Pyxis;

    fn parse(row: &Row<'_>) -> Result<Self, String> {
        Ok(PyxisRecord {
            subject_id: row.id(0, "subject_id")?,
            stay_id: row.id(1, "stay_id")?,
            charttime: row.timestamp(2, "charttime")?,
            med_rn: row.id(3, "med_rn")?,
            name: row.required_text(4),
            gsn_rn: row.id(5, "gsn_rn")?,
            gsn: row.text(6),
        })
    }

    fn write(&self, out: &mut Vec<String>) {
        out.extend([
            self.subject_id.to_string(),
            self.stay_id.to_string(),
            self.charttime.format(TimestampFormat::Iso),
            self.med_rn.to_string(),
            self.name.clone(),
            self.gsn_rn.to_string(),
            opt_text(&self.gsn),
        ]);
    }
}

impl SourceRecord for DiagnosisRecord {
    const TABLE: Table = Table::Diagnosis;

    fn parse(row: &Row<'_>) -> Result<Self, String> {
        let seq_num = row.id(2, "seq_num")?;
        if seq_num < 1 {
            return Err(format!("seq_num {seq_num} < 1"));
        }
        Ok(DiagnosisRecord {
            subject_id: row.id(0, "subject_id")?,
            stay_id: row.id(1, "stay_id")?,
            seq_num,
            icd_code: row.required_text(3),
            icd_version: row.id(4, "icd_version")?,
            icd_title: row.required_text(5),
        })
    }

    fn write(&self, out: &mut Vec<String>) {
        out.extend([
            self.subject_id.to_string(),
            self.stay_id.to_string(),
            self.seq_num.to_string(),
            self.icd_code.clone(),
            self.icd_version.to_string(),
            self.icd_title.clone(),
        ]);
    }

    fn unique_key(&self) -> Option<(StayId, i64)> {
        Some((self.stay_id, self.seq_num))
    }
}

fn opt_text(v: &Option<String>) -> String {
    v.clone().unwrap_or_default()
}

fn opt_render<T: std::fmt::Display>(v: &Option<Reading<T>>) -> String {
    v.as_ref().map(Reading::render).unwrap_or_default()
}

fn write_measurements(v: &Vitals, out: &mut Vec<String>) {
    for m in [&v.temperature, &v.heartrate, &v.resprate, &v.o2sat, &v.sbp, &v.dbp] {
        out.push(opt_render(m));
    }
}

struct TableLoad<R> {
    rows: Vec<R>,
    ingest: TableIngest,
    rejected: Vec<RejectedRow>,
}

fn load_table<R: SourceRecord>(dir: &Path) -> Result<TableLoad<R>> {
    let table = R::TABLE;
    let path = dir.join(table.file_name());
    if !path.is_file() {
        return Err(Error::MissingTable(table.name().to_owned()));
    }
    let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(BufReader::with_capacity(1 << 20, file));

    let csv_err = |e: csv::Error| Error::Csv {
        path: path.clone(),
        line: e.position().map(|p| p.line()).unwrap_or(0),
        message: e.to_string(),
    };
    let header = reader.headers().map_err(csv_err)?.clone();
    let found: Vec<String> = header.iter().map(|h| h.trim().to_owned()).collect();
    let expected = table.columns();
    let index: Option<Vec<usize>> = expected
        .iter()
        .map(|col| found.iter().position(|h| h == col))
        .collect();
    let Some(index) = index else {
        return Err(Error::Header {
            table: table.name().to_owned(),
            expected: expected.iter().map(|c| c.to_string()).collect(),
            found,
        });
    };

    let mut rows = Vec::new();
    let mut rejected = Vec::new();
    let mut seen: HashSet<(StayId, i64)> = HashSet::new();
    let mut raw_rows = 0usize;
    let mut record = StringRecord::new();
    loop {
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                // a malformed row (e.g. invalid UTF-8) is rejected, not fatal
                raw_rows += 1;
                rejected.push(RejectedRow {
                    table,
                    line: e.position().map(|p| p.line()).unwrap_or(0),
                    reason: e.to_string(),
                });
                continue;
            }
        }
        raw_rows += 1;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row = Row {
            record: &record,
            index: &index,
        };
        match R::parse(&row) {
            Ok(r) => {
                if let Some(key) = r.unique_key() {
                    if !seen.insert(key) {
                        rejected.push(RejectedRow {
                            table,
                            line,
                            reason: format!("duplicate key {key:?}"),
                        });
                        continue;
                    }
                }
                rows.push(r);
            }
            Err(reason) => rejected.push(RejectedRow {
                table,
                line,
                reason,
            }),
        }
    }
    Ok(TableLoad {
        ingest: TableIngest {
            table,
            raw_rows,
            accepted: rows.len(),
            rejected: rejected.len(),
        },
        rows,
        rejected,
    })
}

/// Reads the six table files from `dir`.
///
/// Rows with unusable ids, required timestamps or required integers, and
/// rows repeating a unique key, are listed in the report instead of loaded.
pub fn load_source_tables(dir: &Path, options: IngestOptions) -> Result<LoadedTables> {
    for t in Table::ALL {
        if !dir.join(t.file_name()).is_file() {
            return Err(Error::MissingTable(t.name().to_owned()));
        }
    }
    let (edstays, triage, vitalsign, medrecon, pyxis, diagnosis);
    if options.parallel {
        let mut e = None;
        let mut t = None;
        let mut v = None;
        let mut m = None;
        let mut p = None;
        let mut d = None;
        rayon::scope(|s| {
            s.spawn(|_| e = Some(load_table::<EdStayRecord>(dir)));
            s.spawn(|_| t = Some(load_table::<TriageRecord>(dir)));
            s.spawn(|_| v = Some(load_table::<VitalSignRecord>(dir)));
            s.spawn(|_| m = Some(load_table::<MedreconRecord>(dir)));
            s.spawn(|_| p = Some(load_table::<PyxisRecord>(dir)));
            s.spawn(|_| d = Some(load_table::<DiagnosisRecord>(dir)));
        });
        edstays = e.expect("spawned")?;
        triage = t.expect("spawned")?;
        vitalsign = v.expect("spawned")?;
        medrecon = m.expect("spawned")?;
        pyxis = p.expect("spawned")?;
        diagnosis = d.expect("spawned")?;
    } else {
        edstays = load_table::<EdStayRecord>(dir)?;
        triage = load_table::<TriageRecord>(dir)?;
        vitalsign = load_table::<VitalSignRecord>(dir)?;
        medrecon = load_table::<MedreconRecord>(dir)?;
        pyxis = load_table::<PyxisRecord>(dir)?;
        diagnosis = load_table::<DiagnosisRecord>(dir)?;
    }

    let mut report = IngestReport::default();
    let tables = SourceTables {
        edstays: absorb(edstays, &mut report),
        triage: absorb(triage, &mut report),
        vitalsign: absorb(vitalsign, &mut report),
        medrecon: absorb(medrecon, &mut report),
        pyxis: absorb(pyxis, &mut report),
        diagnosis: absorb(diagnosis, &mut report),
    };
    Ok(LoadedTables { tables, report })
}

fn absorb<R>(load: TableLoad<R>, report: &mut IngestReport) -> Vec<R> {
    report.tables.push(load.ingest);
    report.rejected.extend(load.rejected);
    load.rows
}

fn write_table<R: SourceRecord>(dir: &Path, rows: &[R]) -> Result<()> {
    let path = dir.join(R::TABLE.file_name());
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::with_capacity(1 << 20, file));
    let io_err = |e: csv::Error| Error::io(&path, e.into());
    w.write_record(R::TABLE.columns()).map_err(io_err)?;
    let mut cells = Vec::with_capacity(R::TABLE.columns().len());
    for r in rows {
        cells.clear();
        r.write(&mut cells);
        w.write_record(&cells).map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(())
}

/// Writes the six tables as CSV files with header rows into `dir`.
pub fn write_source_tables(dir: &Path, tables: &SourceTables) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_table(dir, &tables.edstays)?;
    write_table(dir, &tables.triage)?;
    write_table(dir, &tables.vitalsign)?;
    write_table(dir, &tables.medrecon)?;
    write_table(dir, &tables.pyxis)?;
    write_table(dir, &tables.diagnosis)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrphanRow {
    /// 0-based index into the table's record list.
    pub row: usize,
    pub stay_id: StayId,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IntegrityReport {
    pub orphans: BTreeMap<Table, Vec<OrphanRow>>,
}

impl IntegrityReport {
    pub fn orphan_count(&self, table: Table) -> usize {
        self.orphans.get(&table).map_or(0, Vec::len)
    }

    pub fn total_orphans(&self) -> usize {
        self.orphans.values().map(Vec::len).sum()
    }

    pub fn is_clean(&self) -> bool {
        self.total_orphans() == 0
    }
}

/// Lists every child-table row whose `stay_id` has no `edstays` parent.
pub fn check_referential_integrity(tables: &SourceTables) -> IntegrityReport {
    let parents: HashSet<StayId> = tables.edstays.iter().map(|s| s.stay_id).collect();
    let mut report = IntegrityReport::default();
    for table in Table::CHILDREN {
        let orphans: Vec<OrphanRow> = tables
            .child_stay_ids(table)
            .into_iter()
            .enumerate()
            .filter(|(_, id)| !parents.contains(id))
            .map(|(row, stay_id)| OrphanRow { row, stay_id })
            .collect();
        report.orphans.insert(table, orphans);
    }
    report
}

/// Maps `stay_id` to its position in `edstays`.
pub(crate) fn stay_index(tables: &SourceTables) -> HashMap<StayId, usize> {
    tables
        .edstays
        .iter()
        .enumerate()
        .map(|(i, s)| (s.stay_id, i))
        .collect()
}
