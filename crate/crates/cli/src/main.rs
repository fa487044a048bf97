//! `edlog` command-line tool.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 I/O error
//! (including a missing source table), 3 malformed or inconsistent data.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use edlog::analytics::{
    classify_quadrants, cohort_compare, compute_los, crowdedness, export_dot, mine_dfg,
    path_statistics, Aggregation, Annotation, DotOptions, Split, DEFAULT_CROWDEDNESS_PERCENTILE,
    DEFAULT_LOS_THRESHOLD_MINUTES,
};
use edlog::extract::{extract_event_log, filter_pre_arrival_events};
use edlog::log::log_statistics;
use edlog::quality::{run_quality_checks, RuleSet};
use edlog::serialize::csv::{write_csv, CsvOptions};
use edlog::serialize::read_log;
use edlog::serialize::xes::write_xes;
use edlog::source::{load_source_tables, IngestOptions};
use edlog::synth::{generate_tables, write_synthetic, GenParams};
use edlog::{ActivityKind, Error, EventLog, MappingConfig};
use log::{info, warn};

mod cohort;

use cohort::CohortFilter;

#[derive(Parser)]
#[command(name = "edlog", version, about = "Event logs from emergency-department stay tables")]
struct Cli {
    /// Worker threads; defaults to the number of available cores.
    #[arg(long, global = true, env = "EDLOG_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the event log from the six source tables.
    Extract(ExtractArgs),
    /// Run the data-quality checks on a log (findings do not fail the run).
    Validate(ValidateArgs),
    /// Discover the directly-follows graph and write it as DOT.
    Mine(MineArgs),
    /// Length-of-stay, quadrant, crowdedness and path statistics.
    Analyze(AnalyzeArgs),
    /// Generate synthetic source tables with a ground truth.
    Synth(SynthArgs),
}

#[derive(Args)]
struct ExtractArgs {
    /// Directory holding edstays.csv, triage.csv, vitalsign.csv, medrecon.csv,
    /// pyxis.csv and diagnosis.csv.
    #[arg(long)]
    input: PathBuf,
    /// Mapping configuration (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    out_xes: Option<PathBuf>,
    /// Drop vital-sign and medicine events at or before arrival.
    #[arg(long)]
    filter_pre_arrival: bool,
    /// Print every case attribute on every CSV row.
    #[arg(long)]
    dense: bool,
    /// Write rejected source rows as JSON.
    #[arg(long)]
    rejects: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Event log (.csv or .xes).
    #[arg(long)]
    log: PathBuf,
    /// JSON report destination.
    #[arg(long)]
    report: PathBuf,
    /// Rule set (TOML); the default suite applies when omitted.
    #[arg(long)]
    rules: Option<PathBuf>,
}

#[derive(Args)]
struct MineArgs {
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    dot: PathBuf,
    /// Node and edge statistics as JSON; defaults to the DOT path with a
    /// .json extension.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Keep only cases matching every `attr=value` pair, e.g. `acuity=3,disposition=HOME`.
    #[arg(long)]
    cohort: Option<CohortFilter>,
    /// Hide edges that cover fewer than this percentage of cases.
    #[arg(long, default_value_t = 0.0)]
    min_coverage: f64,
    #[arg(long, default_value = "both")]
    annotate: Annotation,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Los,
    Quadrants,
    Crowdedness,
    Paths,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SplitArg {
    None,
    Disposition,
    Crowdedness,
    Quadrant,
    Acuity,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AggregationArg {
    Pooled,
    PerCaseMean,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    log: PathBuf,
    #[arg(long, value_enum)]
    mode: Mode,
    /// Output table; `.csv` writes CSV, anything else JSON.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    cohort: Option<CohortFilter>,
    /// Remove pre-arrival events before analysing.
    #[arg(long)]
    filter_pre_arrival: bool,
    /// LoS threshold in minutes separating short from long stays.
    #[arg(long, default_value_t = DEFAULT_LOS_THRESHOLD_MINUTES)]
    los_threshold: f64,
    /// Percentile of simultaneity counts used as the crowdedness threshold.
    #[arg(long, default_value_t = DEFAULT_CROWDEDNESS_PERCENTILE)]
    percentile: f64,
    /// Count the stay itself among its simultaneous stays.
    #[arg(long)]
    include_self: bool,
    /// Paths as `from>to`, comma separated; defaults to every pair.
    #[arg(long, value_delimiter = ',')]
    paths: Vec<String>,
    /// Cohort split for paths mode.
    #[arg(long, value_enum, default_value = "none")]
    split: SplitArg,
    #[arg(long, value_enum, default_value = "pooled")]
    aggregation: AggregationArg,
}

#[derive(Args)]
struct SynthArgs {
    /// Generator parameters (TOML); defaults apply when omitted.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed from the parameter file.
    #[arg(long)]
    seed: Option<u64>,
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) => 1,
            Error::MissingTable(_) | Error::Io { .. } => 2,
            Error::Header { .. } | Error::Csv { .. } | Error::Xml { .. } | Error::Data(_) => 3,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: 2,
        message: format!("{}: {e}", path.display()),
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            warn!("thread pool already initialised: {e}");
        }
    }
    let result = match cli.command {
        Command::Extract(a) => extract(a),
        Command::Validate(a) => validate(a),
        Command::Mine(a) => mine(a),
        Command::Analyze(a) => analyze(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CmdResult {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    fs::write(path, text + "\n").map_err(|e| io_failure(path, e))
}

fn write_text(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text).map_err(|e| io_failure(path, e))
}

fn load(path: &Path, cohort: Option<&CohortFilter>) -> Result<EventLog, Failure> {
    let log = read_log(path, &CsvOptions::default())?;
    info!("read {} cases from {}", log.case_count(), path.display());
    Ok(match cohort {
        Some(c) => log.sub_log(|t| c.matches(t)),
        None => log,
    })
}

fn extract(a: ExtractArgs) -> CmdResult {
    if a.out_csv.is_none() && a.out_xes.is_none() {
        return Err(usage("give at least one of --out-csv and --out-xes"));
    }
    let config = MappingConfig::load(a.config.as_deref())?;
    let loaded = load_source_tables(&a.input, IngestOptions { parallel: true })?;
    for t in &loaded.report.tables {
        if t.rejected > 0 {
            warn!("{}: {} of {} rows rejected", t.table.name(), t.rejected, t.raw_rows);
        }
    }
    if let Some(p) = &a.rejects {
        loaded.report.write_json(p)?;
    }
    let ex = extract_event_log(loaded.tables, &config)?;
    let orphans = ex.orphans.total_orphans();
    if orphans > 0 {
        warn!("{orphans} child rows reference unknown stays and were dropped");
    }
    if !ex.rejected_stays.is_empty() {
        println!("Rejected stays (discharge not after arrival): {}", ex.rejected_stays.len());
    }
    let log = if a.filter_pre_arrival {
        let f = filter_pre_arrival_events(ex.log);
        println!("Pre-arrival events removed: {}", f.removed);
        f.log
    } else {
        ex.log
    };
    let options = CsvOptions {
        dense: a.dense,
        mapping: config,
        ..CsvOptions::default()
    };
    if let Some(p) = &a.out_csv {
        write_csv(&log, p, &options)?;
    }
    if let Some(p) = &a.out_xes {
        write_xes(&log, p)?;
    }
    println!("{}", log_statistics(&log));
    Ok(())
}

fn validate(a: ValidateArgs) -> CmdResult {
    let rules = RuleSet::load(a.rules.as_deref())?;
    let log = load(&a.log, None)?;
    let report = run_quality_checks(&log, &rules)?;
    report.write_json(&a.report)?;
    print!("{}", report.summary());
    Ok(())
}

fn mine(a: MineArgs) -> CmdResult {
    if !(0.0..=100.0).contains(&a.min_coverage) {
        return Err(usage("--min-coverage must be between 0 and 100"));
    }
    let log = load(&a.log, a.cohort.as_ref())?;
    let dfg = mine_dfg(&log);
    let options = DotOptions {
        min_edge_coverage_pct: a.min_coverage,
        annotation: a.annotate,
    };
    write_text(&a.dot, &export_dot(&dfg, &options))?;
    let stats = a.stats.unwrap_or_else(|| a.dot.with_extension("json"));
    write_json(&stats, &dfg)?;
    println!(
        "{} cases, {} activities, {} edges",
        dfg.case_count,
        dfg.nodes.len(),
        dfg.edges.len()
    );
    Ok(())
}

fn parse_path(text: &str) -> Result<(ActivityKind, ActivityKind), Failure> {
    let (from, to) = text
        .split_once('>')
        .ok_or_else(|| usage(format!("path {text:?} is not of the form from>to")))?;
    let kind = |s: &str| s.parse::<ActivityKind>().map_err(|e| usage(e.to_string()));
    Ok((kind(from)?, kind(to)?))
}

fn analyze(a: AnalyzeArgs) -> CmdResult {
    if !(a.percentile > 0.0 && a.percentile <= 100.0) {
        return Err(usage("--percentile must be in (0, 100]"));
    }
    if !(a.los_threshold.is_finite() && a.los_threshold >= 0.0) {
        return Err(usage("--los-threshold must be a non-negative number of minutes"));
    }
    let paths = if a.paths.is_empty() {
        ActivityKind::ALL
            .into_iter()
            .flat_map(|x| ActivityKind::ALL.map(|y| (x, y)))
            .collect()
    } else {
        a.paths.iter().map(|p| parse_path(p)).collect::<Result<Vec<_>, _>>()?
    };
    let mut log = load(&a.log, a.cohort.as_ref())?;
    if a.filter_pre_arrival {
        let f = filter_pre_arrival_events(log);
        println!("Pre-arrival events removed: {}", f.removed);
        log = f.log;
    }
    let csv = a.out.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let mut table = Table::default();
    match a.mode {
        Mode::Los => {
            let records = compute_los(&log);
            if !csv {
                return write_json(&a.out, &records);
            }
            table.header(&["stay_id", "los_minutes", "acuity", "acuity_band"]);
            for r in &records {
                table.row([
                    r.stay_id.to_string(),
                    r.los_minutes.to_string(),
                    r.acuity.map_or(String::new(), |v| v.to_string()),
                    format!("{:?}", r.acuity_band),
                ]);
            }
            println!("{} stays with a length of stay", records.len());
        }
        Mode::Quadrants => {
            let mut records = compute_los(&log);
            let q = classify_quadrants(&mut records, a.los_threshold);
            for s in &q.shares {
                println!("{:<13} {:>9} {:>7.2}%", s.quadrant.name(), s.cases, s.pct);
            }
            if !csv {
                return write_json(&a.out, &q);
            }
            table.header(&["quadrant", "cases", "pct"]);
            for s in &q.shares {
                table.row([s.quadrant.name().to_owned(), s.cases.to_string(), format!("{:.4}", s.pct)]);
            }
        }
        Mode::Crowdedness => {
            let c = crowdedness(&log, a.percentile, a.include_self)?;
            println!("Threshold (p{}): {}", a.percentile, c.threshold);
            println!("Crowded stays: {}", c.crowded_cases);
            println!("Not crowded stays: {}", c.records.len() as u64 - c.crowded_cases);
            if !csv {
                return write_json(&a.out, &c);
            }
            table.header(&["stay_id", "simultaneous_count", "crowded"]);
            for r in &c.records {
                table.row([r.stay_id.to_string(), r.simultaneous_count.to_string(), r.crowded.to_string()]);
            }
        }
        Mode::Paths => {
            let aggregation = match a.aggregation {
                AggregationArg::Pooled => Aggregation::Pooled,
                AggregationArg::PerCaseMean => Aggregation::PerCaseMean,
            };
            let split = match a.split {
                SplitArg::None => None,
                SplitArg::Disposition => Some(Split::Disposition),
                SplitArg::Acuity => Some(Split::Acuity),
                SplitArg::Quadrant => Some(Split::Quadrant {
                    threshold_minutes: a.los_threshold,
                }),
                SplitArg::Crowdedness => Some(Split::Crowdedness {
                    percentile: a.percentile,
                    include_self: a.include_self,
                }),
            };
            match split {
                Some(split) => {
                    let cmp = cohort_compare(&log, &split, &paths, aggregation)?;
                    print!("{cmp}");
                    return if csv {
                        write_text(&a.out, &cmp.to_csv())
                    } else {
                        write_json(&a.out, &cmp)
                    };
                }
                None => {
                    let stats: Vec<_> = paths
                        .iter()
                        .map(|&(x, y)| path_statistics(&log, x, y, aggregation))
                        .collect();
                    if !csv {
                        return write_json(&a.out, &stats);
                    }
                    table.header(&["from", "to", "cases_with_path", "case_coverage_pct", "occurrences", "median_minutes"]);
                    for p in &stats {
                        table.row([
                            p.from.name().to_owned(),
                            p.to.name().to_owned(),
                            p.cases_with_path.to_string(),
                            format!("{:.4}", p.case_coverage_pct),
                            p.occurrences.to_string(),
                            p.median_minutes.map_or(String::new(), |m| m.to_string()),
                        ]);
                    }
                }
            }
        }
    }
    write_text(&a.out, &table.text)
}

/// Minimal CSV text builder; cells are quoted when needed.
#[derive(Default)]
struct Table {
    text: String,
}

impl Table {
    fn header(&mut self, cols: &[&str]) {
        self.row(cols.iter().map(|c| c.to_string()));
    }

    fn row(&mut self, cells: impl IntoIterator<Item = String>) {
        let cells: Vec<String> = cells
            .into_iter()
            .map(|c| {
                if c.contains([',', '"', '\n', '\r']) {
                    format!("\"{}\"", c.replace('"', "\"\""))
                } else {
                    c
                }
            })
            .collect();
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }
}

fn synth(a: SynthArgs) -> CmdResult {
    let mut params = match &a.params {
        Some(p) => GenParams::load(p)?,
        None => GenParams::default(),
    };
    if let Some(seed) = a.seed {
        params.seed = seed;
    }
    params.validate()?;
    let (tables, truth) = generate_tables(&params)?;
    write_synthetic(&a.out, &tables, &truth)?;
    println!(
        "{} patients, {} stays ({} valid), {} expected events -> {}",
        truth.patients,
        truth.stays,
        truth.valid_stays,
        truth.expected_events,
        a.out.display()
    );
    Ok(())
}
