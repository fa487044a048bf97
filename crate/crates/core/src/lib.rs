//! Event-log extraction, validation and process analytics for
//! emergency-department stay tables.
//!
//! The pipeline reads six CSV tables (`edstays`, `triage`, `vitalsign`,
//! `medrecon`, `pyxis`, `diagnosis`), derives one trace per stay, and writes
//! the log as CSV or XES. On top of the log sit data-quality checks,
//! directly-follows discovery, length-of-stay analysis and crowdedness
//! estimation. [`synth`] produces seeded synthetic tables with a ground truth
//! for testing.

pub mod activity;
pub mod analytics;
pub mod config;
pub mod error;
pub mod extract;
pub mod log;
pub mod quality;
pub mod serialize;
pub mod source;
pub mod synth;
pub mod time;
pub mod value;

pub use activity::ActivityKind;
pub use config::MappingConfig;
pub use error::{Error, Result};
pub use log::{Event, EventLog, Trace};
pub use source::{SourceTables, StayId, Table};
pub use time::{Timestamp, TimestampFormat};
pub use value::{AttrKey, AttributeValue, Attributes, Decimal};
