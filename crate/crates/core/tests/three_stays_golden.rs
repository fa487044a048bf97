//! The three-stay fixture must serialize to the reference snippet cell for
//! cell under the sparse layout.

mod common;

use common::{projected_three_stays, read_csv_table};
use edlog::extract::extract_event_log;
use edlog::serialize::csv::{write_csv_to, CsvOptions};
use edlog::source::{load_source_tables, IngestOptions};
use edlog::MappingConfig;

#[test]
fn matches_reference_snippet() {
    let expected = std::fs::read(common::fixture("three_stays_expected.csv")).unwrap();
    let (_, want) = read_csv_table(&expected);
    let (header, got) = projected_three_stays();
    assert_eq!(got.len(), want.len(), "row count");
    for (i, (g, w)) in got.iter().zip(&want).enumerate() {
        for (c, (gc, wc)) in g.iter().zip(w).enumerate() {
            assert_eq!(gc, wc, "row {} column {}", i + 1, header[c]);
        }
    }
}

#[test]
fn leading_columns_are_fixed() {
    let loaded = load_source_tables(&common::fixture("three_stays"), IngestOptions::default()).unwrap();
    let ex = extract_event_log(loaded.tables, &MappingConfig::default()).unwrap();
    let mut out = Vec::new();
    write_csv_to(&ex.log, &mut out, &CsvOptions::default()).unwrap();
    let (header, rows) = read_csv_table(&out);
    assert_eq!(&header[..4], ["stay_id", "subject_id", "timestamp", "activity"]);
    assert_eq!(rows.len(), 19);
}
