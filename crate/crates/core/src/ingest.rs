//! Per-user label logs and daily category fractions.
//!
//! A log is a CSV (optionally gzip-compressed) with a `timestamp` column in
//! unix seconds and one `label:NAME` column per label. Cells hold `1`, `0`,
//! or nothing. Other columns are ignored. Each row stands for one minute.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate};
use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const LABEL_PREFIX: &str = "label:";
pub const SECONDS_PER_DAY: i64 = 86_400;
pub const MINUTES_PER_DAY: f64 = 1440.0;
pub const DEFAULT_COVERAGE_MIN: f64 = 0.1;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: file is empty")]
    Empty { path: PathBuf },
    #[error("{path}: no `timestamp` column")]
    MissingTimestamp { path: PathBuf },
    #[error("{path}:{line}: {message}")]
    Row { path: PathBuf, line: u64, message: String },
    #[error("{path}: cannot derive a user id from the file name")]
    NoUuid { path: PathBuf },
    #[error("user id is empty")]
    EmptyUuid,
    #[error("duplicate label column `{0}`")]
    DuplicateLabel(String),
    #[error("row {index} has {got} values for {expected} labels")]
    RowWidth { index: usize, expected: usize, got: usize },
    #[error("timestamps are not strictly increasing at row {index} ({prev} then {next})")]
    NotIncreasing { index: usize, prev: i64, next: i64 },
    #[error("label `{label}` appears in both `{first}` and `{second}` of component `{component}`")]
    SharedLabel { label: String, component: String, first: String, second: String },
    #[error("category `{0}` is declared twice")]
    DuplicateCategory(String),
}

/// Three-valued cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabelValue {
    True,
    False,
    Missing,
}

impl LabelValue {
    fn parse(cell: &str) -> Option<Self> {
        let cell = cell.trim();
        if cell.is_empty() || cell.eq_ignore_ascii_case("nan") {
            return Some(Self::Missing);
        }
        match cell.parse::<f64>() {
            Ok(v) if v == 1.0 => Some(Self::True),
            Ok(v) if v == 0.0 => Some(Self::False),
            _ => None,
        }
    }

    fn cell(self) -> &'static str {
        match self {
            Self::True => "1",
            Self::False => "0",
            Self::Missing => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub timestamp: i64,
    /// One value per label, aligned with [`ActivityLog::labels`].
    pub values: Vec<LabelValue>,
}

impl LogRow {
    pub fn any_reported(&self) -> bool {
        self.values.iter().any(|v| *v != LabelValue::Missing)
    }
}

/// One user's label observations. Label columns are kept sorted by name, so
/// two files that differ only in column order load to the same value.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityLog {
    uuid: String,
    labels: Vec<String>,
    rows: Vec<LogRow>,
}

impl ActivityLog {
    pub fn new(
        uuid: impl Into<String>,
        labels: Vec<String>,
        rows: Vec<LogRow>,
    ) -> Result<Self, IngestError> {
        let uuid = uuid.into();
        if uuid.is_empty() {
            return Err(IngestError::EmptyUuid);
        }
        for (index, row) in rows.iter().enumerate() {
            if row.values.len() != labels.len() {
                return Err(IngestError::RowWidth {
                    index,
                    expected: labels.len(),
                    got: row.values.len(),
                });
            }
        }
        for (index, pair) in rows.windows(2).enumerate() {
            if pair[1].timestamp <= pair[0].timestamp {
                return Err(IngestError::NotIncreasing {
                    index: index + 1,
                    prev: pair[0].timestamp,
                    next: pair[1].timestamp,
                });
            }
        }
        let mut order: Vec<usize> = (0..labels.len()).collect();
        order.sort_by(|&a, &b| labels[a].cmp(&labels[b]));
        for pair in order.windows(2) {
            if labels[pair[0]] == labels[pair[1]] {
                return Err(IngestError::DuplicateLabel(labels[pair[0]].clone()));
            }
        }
        let sorted_labels = order.iter().map(|&i| labels[i].clone()).collect();
        let rows = rows
            .into_iter()
            .map(|r| LogRow {
                timestamp: r.timestamp,
                values: order.iter().map(|&i| r.values[i]).collect(),
            })
            .collect();
        Ok(Self { uuid, labels: sorted_labels, rows })
    }

    pub fn uuid(&self) -> &str {
        &self.uuid
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn rows(&self) -> &[LogRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }

    pub fn value(&self, row: usize, label: &str) -> Option<LabelValue> {
        Some(self.rows.get(row)?.values[self.label_index(label)?])
    }

    /// Rows whose UTC calendar day lies in `[start, end]`; either bound may be
    /// open.
    pub fn window(&self, start: Option<NaiveDate>, end: Option<NaiveDate>) -> ActivityLog {
        let lo = start.map(day_of_date).unwrap_or(i64::MIN);
        let hi = end.map(day_of_date).unwrap_or(i64::MAX);
        let rows = self
            .rows
            .iter()
            .filter(|r| (lo..=hi).contains(&day_index(r.timestamp)))
            .cloned()
            .collect();
        ActivityLog { uuid: self.uuid.clone(), labels: self.labels.clone(), rows }
    }
}

/// UTC day number of a unix timestamp.
pub fn day_index(timestamp: i64) -> i64 {
    timestamp.div_euclid(SECONDS_PER_DAY)
}

pub fn day_of_date(date: NaiveDate) -> i64 {
    date.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp().div_euclid(SECONDS_PER_DAY)
}

pub fn date_of_day(day: i64) -> Option<NaiveDate> {
    DateTime::from_timestamp(day * SECONDS_PER_DAY, 0).map(|d| d.date_naive())
}

/// User id for a log path: the file name up to its first `.`.
pub fn uuid_from_path(path: &Path) -> Option<String> {
    let name = path.file_name()?.to_str()?;
    let stem = name.split('.').next()?;
    (!stem.is_empty()).then(|| stem.to_string())
}

fn open_maybe_gzip(path: &Path) -> Result<Box<dyn Read>, IngestError> {
    let io = |source| IngestError::Io { path: path.to_path_buf(), source };
    let mut file = BufReader::new(File::open(path).map_err(io)?);
    let mut magic = [0u8; 2];
    let mut got = 0;
    while got < 2 {
        let n = file.read(&mut magic[got..]).map_err(io)?;
        if n == 0 {
            break;
        }
        got += n;
    }
    let head = std::io::Cursor::new(magic[..got].to_vec()).chain(file);
    if got == 2 && magic == [0x1f, 0x8b] {
        Ok(Box::new(GzDecoder::new(head)))
    } else {
        Ok(Box::new(head))
    }
}

/// Reads one user's log. Gzip input is detected from the file's magic bytes.
pub fn load_user_log(path: &Path) -> Result<ActivityLog, IngestError> {
    let uuid = uuid_from_path(path).ok_or_else(|| IngestError::NoUuid { path: path.into() })?;
    let reader = open_maybe_gzip(path)?;
    read_log(uuid, reader, path)
}

fn read_log(uuid: String, reader: impl Read, path: &Path) -> Result<ActivityLog, IngestError> {
    let csv_err = |source| IngestError::Csv { path: path.to_path_buf(), source };
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(IngestError::Empty { path: path.into() });
    }
    let ts_col = headers
        .iter()
        .position(|h| h.trim() == "timestamp")
        .ok_or_else(|| IngestError::MissingTimestamp { path: path.into() })?;
    let label_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| h.trim().strip_prefix(LABEL_PREFIX).map(|l| (i, l.to_string())))
        .collect();

    let row_err = |line: u64, message: String| IngestError::Row { path: path.into(), line, message };
    let mut rows: Vec<LogRow> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            row_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let ts_cell = record[ts_col].trim();
        let timestamp = ts_cell
            .parse::<i64>()
            .ok()
            .or_else(|| ts_cell.parse::<f64>().ok().filter(|t| t.fract() == 0.0).map(|t| t as i64))
            .ok_or_else(|| row_err(line, format!("bad timestamp `{ts_cell}`")))?;
        let mut values = Vec::with_capacity(label_cols.len());
        for (col, name) in &label_cols {
            let cell = &record[*col];
            values.push(LabelValue::parse(cell).ok_or_else(|| {
                row_err(line, format!("bad value `{cell}` for label {name}"))
            })?);
        }
        if let Some(prev) = rows.last() {
            if timestamp <= prev.timestamp {
                return Err(row_err(
                    line,
                    format!("timestamp {timestamp} does not increase (previous {})", prev.timestamp),
                ));
            }
        }
        rows.push(LogRow { timestamp, values });
    }
    if rows.is_empty() {
        return Err(IngestError::Empty { path: path.into() });
    }
    ActivityLog::new(uuid, label_cols.into_iter().map(|(_, l)| l).collect(), rows)
}

/// Writes `log` in the format [`load_user_log`] reads, gzip-compressed when
/// the path ends in `.gz`.
pub fn write_user_log(log: &ActivityLog, path: &Path) -> Result<(), IngestError> {
    let io = |source| IngestError::Io { path: path.to_path_buf(), source };
    let csv_err = |source| IngestError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["timestamp".to_string()];
    header.extend(log.labels.iter().map(|l| format!("{LABEL_PREFIX}{l}")));
    w.write_record(&header).map_err(csv_err)?;
    let mut rec: Vec<String> = Vec::with_capacity(header.len());
    for row in &log.rows {
        rec.clear();
        rec.push(row.timestamp.to_string());
        rec.extend(row.values.iter().map(|v| v.cell().to_string()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| io(e.into_error()))?;
    let mut file = File::create(path).map_err(io)?;
    if path.extension().is_some_and(|e| e == "gz") {
        let mut enc = GzEncoder::new(file, Compression::fast());
        enc.write_all(&bytes).map_err(io)?;
        enc.finish().map_err(io)?;
    } else {
        file.write_all(&bytes).map_err(io)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryDef {
    pub name: String,
    pub component: String,
    pub labels: Vec<String>,
}

/// Category definitions grouped by component, plus the mood vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMap {
    pub categories: Vec<CategoryDef>,
    pub moods: Vec<String>,
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

pub const DEFAULT_MOODS: &[&str] = &[
    "ACTIVE", "ATTENTIVE", "CALM", "DREAMY", "HAPPY", "HUNGRY", "SLEEPY", "STRESSED", "TIRED",
];

impl Default for LabelMap {
    fn default() -> Self {
        let cat = |name: &str, component: &str, labels: &[&str]| CategoryDef {
            name: name.into(),
            component: component.into(),
            labels: strings(labels),
        };
        Self {
            categories: vec![
                cat("sleep", "physical", &["LYING_DOWN", "SLEEPING"]),
                cat("diet", "physical", &["RESTAURANT", "EATING"]),
                cat("exercise", "physical", &["RUNNING", "WALKING", "BICYCLING", "GYM", "EXERCISE"]),
                cat("work", "productive", &["IN_CLASS", "IN_A_MEETING", "AT_SCHOOL", "LOC_main_workplace"]),
                cat("leisure", "productive", &["WATCHING_TV", "SINGING", "SHOPPING"]),
                cat("interaction", "social", &["WITH_FRIENDS", "WITH_CO-WORKERS", "TALKING", "AT_A_PARTY"]),
                cat("online", "social", &["SURFING_THE_INTERNET", "PHONE_IN_HAND"]),
            ],
            moods: strings(DEFAULT_MOODS),
        }
    }
}

impl LabelMap {
    pub fn validate(&self) -> Result<(), IngestError> {
        let mut names = std::collections::BTreeSet::new();
        let mut owner: HashMap<(&str, &str), &str> = HashMap::new();
        for c in &self.categories {
            if !names.insert(c.name.as_str()) {
                return Err(IngestError::DuplicateCategory(c.name.clone()));
            }
            for l in &c.labels {
                if let Some(first) = owner.insert((c.component.as_str(), l.as_str()), &c.name) {
                    if first != c.name {
                        return Err(IngestError::SharedLabel {
                            label: l.clone(),
                            component: c.component.clone(),
                            first: first.to_string(),
                            second: c.name.clone(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn category(&self, name: &str) -> Option<&CategoryDef> {
        self.categories.iter().find(|c| c.name == name)
    }

    /// Every label referenced by a category or the mood list, sorted.
    pub fn all_labels(&self) -> Vec<String> {
        let mut v: Vec<String> = self
            .categories
            .iter()
            .flat_map(|c| c.labels.iter().cloned())
            .chain(self.moods.iter().cloned())
            .collect();
        v.sort();
        v.dedup();
        v
    }
}

/// Daily fractions per category over the contiguous day range of a log.
#[derive(Debug, Clone, PartialEq)]
pub struct CategorySeries {
    /// Day index of the first entry.
    pub start_day: i64,
    pub reported_minutes: Vec<u32>,
    /// Reported minutes over 1440.
    pub coverage: Vec<f64>,
    pub excluded: Vec<bool>,
    /// Fraction of reported minutes in which any of the category's labels is
    /// true. Zero on days without reports.
    pub fractions: BTreeMap<String, Vec<f64>>,
}

impl CategorySeries {
    pub fn days(&self) -> usize {
        self.coverage.len()
    }

    pub fn included_days(&self) -> usize {
        self.excluded.iter().filter(|e| !**e).count()
    }
}

/// Buckets `log` into UTC days. Days whose coverage is below `coverage_min`
/// are marked excluded.
pub fn category_series(log: &ActivityLog, map: &LabelMap, coverage_min: f64) -> CategorySeries {
    let (Some(first), Some(last)) = (log.rows.first(), log.rows.last()) else {
        return CategorySeries {
            start_day: 0,
            reported_minutes: Vec::new(),
            coverage: Vec::new(),
            excluded: Vec::new(),
            fractions: map.categories.iter().map(|c| (c.name.clone(), Vec::new())).collect(),
        };
    };
    let start_day = day_index(first.timestamp);
    let days = (day_index(last.timestamp) - start_day + 1) as usize;

    let columns: Vec<(String, Vec<usize>)> = map
        .categories
        .iter()
        .map(|c| (c.name.clone(), c.labels.iter().filter_map(|l| log.label_index(l)).collect()))
        .collect();

    let mut reported = vec![0u32; days];
    let mut hits = vec![vec![0u32; days]; columns.len()];
    for row in &log.rows {
        if !row.any_reported() {
            continue;
        }
        let d = (day_index(row.timestamp) - start_day) as usize;
        reported[d] += 1;
        for (k, (_, cols)) in columns.iter().enumerate() {
            if cols.iter().any(|&c| row.values[c] == LabelValue::True) {
                hits[k][d] += 1;
            }
        }
    }

    let coverage: Vec<f64> =
        reported.iter().map(|&r| (r as f64 / MINUTES_PER_DAY).min(1.0)).collect();
    let excluded = coverage.iter().map(|&c| c < coverage_min || c == 0.0).collect();
    let fractions = columns
        .iter()
        .zip(&hits)
        .map(|((name, _), h)| {
            let f = h
                .iter()
                .zip(&reported)
                .map(|(&n, &r)| if r == 0 { 0.0 } else { n as f64 / r as f64 })
                .collect();
            (name.clone(), f)
        })
        .collect();
    CategorySeries { start_day, reported_minutes: reported, coverage, excluded, fractions }
}

/// The `k` moods with the most true minutes, ties broken alphabetically.
/// Moods never reported true are left out.
pub fn mood_top_k(log: &ActivityLog, moods: &[String], k: usize) -> Vec<String> {
    let mut counts: Vec<(usize, &String)> = moods
        .iter()
        .filter_map(|m| {
            let i = log.label_index(m)?;
            let n = log.rows.iter().filter(|r| r.values[i] == LabelValue::True).count();
            (n > 0).then_some((n, m))
        })
        .collect();
    counts.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    counts.dedup_by(|a, b| a.1 == b.1);
    counts.into_iter().take(k).map(|(_, m)| m.clone()).collect()
}
