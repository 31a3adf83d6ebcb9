//! CSV ingest of Commit.Guru-style exports.

use std::collections::{BTreeMap, HashSet};
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::{CommitRecord, Corpus, CorpusError, CorpusOptions, Feature, FEATURE_COUNT};

const ID: &str = "commit_hash";
const PROJECT: &str = "project";
const RELEASE: &str = "release";
const TIMESTAMP: &str = "author_date_unix_timestamp";
const MESSAGE: &str = "commit_message";
const CONTAINS_BUG: &str = "contains_bug";
const FIX_LABEL: &str = "fix_label";

/// Maps logical column names to the header names used by a particular file.
/// Unmapped logical names are looked up verbatim.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ColumnSchema {
    pub columns: BTreeMap<String, String>,
}

impl ColumnSchema {
    pub fn with(mut self, logical: &str, column: &str) -> Self {
        self.columns.insert(logical.to_string(), column.to_string());
        self
    }

    fn resolve<'a>(&'a self, logical: &'a str) -> &'a str {
        self.columns.get(logical).map(String::as_str).unwrap_or(logical)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowError {
    /// 1-based line number in the source (the header is line 1).
    pub line: u64,
    pub message: String,
}

#[derive(Debug)]
pub struct IngestReport {
    pub corpus: Corpus,
    pub skipped: Vec<RowError>,
}

struct Columns {
    id: usize,
    project: Option<usize>,
    release: usize,
    timestamp: usize,
    message: usize,
    features: [usize; FEATURE_COUNT],
    contains_bug: Option<usize>,
    fix_label: Option<usize>,
}

impl Columns {
    fn locate(headers: &csv::StringRecord, schema: &ColumnSchema) -> Result<Self, CorpusError> {
        let find = |logical: &str| {
            let name = schema.resolve(logical);
            headers.iter().position(|h| h.trim() == name)
        };
        let require = |logical: &str| {
            find(logical).ok_or_else(|| CorpusError::MissingColumn(schema.resolve(logical).to_string()))
        };
        let id = require(ID)?;
        let release = require(RELEASE)?;
        let timestamp = require(TIMESTAMP)?;
        let message = require(MESSAGE)?;
        let mut features = [0; FEATURE_COUNT];
        for f in Feature::ALL {
            features[f.index()] = require(f.column())?;
        }
        Ok(Self {
            id,
            project: find(PROJECT),
            release,
            timestamp,
            message,
            features,
            contains_bug: find(CONTAINS_BUG),
            fix_label: find(FIX_LABEL),
        })
    }
}

fn parse_bool(cell: &str) -> Result<Option<bool>, String> {
    match cell.trim().to_ascii_lowercase().as_str() {
        "" => Ok(None),
        "1" | "true" | "t" | "yes" | "y" => Ok(Some(true)),
        "0" | "false" | "f" | "no" | "n" => Ok(Some(false)),
        other => Err(format!("not a boolean: {other:?}")),
    }
}

fn parse_record(row: &csv::StringRecord, cols: &Columns) -> Result<CommitRecord, String> {
    let cell = |i: usize| row.get(i).unwrap_or("").trim();
    let id = cell(cols.id);
    if id.is_empty() {
        return Err("empty commit id".to_string());
    }
    let release_index = cell(cols.release)
        .parse::<u32>()
        .map_err(|_| format!("release: not a non-negative integer: {:?}", cell(cols.release)))?;
    let ts_cell = cell(cols.timestamp);
    let timestamp = ts_cell
        .parse::<i64>()
        .or_else(|_| ts_cell.parse::<f64>().map(|v| v as i64))
        .map_err(|_| format!("{TIMESTAMP}: not a number: {ts_cell:?}"))?;
    let mut features = [0.0; FEATURE_COUNT];
    for f in Feature::ALL {
        let raw = cell(cols.features[f.index()]);
        let value = match raw.to_ascii_lowercase().as_str() {
            // Commit.Guru writes the FIX flag as a boolean
            "true" if f == Feature::Fix => 1.0,
            "false" if f == Feature::Fix => 0.0,
            _ => raw.parse::<f64>().map_err(|_| format!("{}: not a number: {raw:?}", f.column()))?,
        };
        features[f.index()] = value;
    }
    let record = CommitRecord {
        id: id.to_string(),
        project: cols.project.map(|i| cell(i).to_string()).unwrap_or_default(),
        release_index,
        timestamp,
        message: row.get(cols.message).unwrap_or("").to_string(),
        features,
        truth_fixing: cols.fix_label.map(|i| parse_bool(cell(i))).transpose()?.flatten(),
        truth_inducing: cols.contains_bug.map(|i| parse_bool(cell(i))).transpose()?.flatten(),
    };
    record.validate()?;
    Ok(record)
}

/// Reads a commit CSV. Missing required columns are fatal; malformed rows are
/// skipped and reported with their line number.
pub fn ingest_csv<R: Read>(
    source: R,
    schema: &ColumnSchema,
    options: CorpusOptions,
) -> Result<IngestReport, CorpusError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(source);
    let headers = reader.headers()?.clone();
    let cols = Columns::locate(&headers, schema)?;
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    let mut ids = HashSet::new();
    for row in reader.records() {
        let row = match row {
            Ok(row) => row,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                skipped.push(RowError { line, message: e.to_string() });
                continue;
            }
        };
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        match parse_record(&row, &cols) {
            Ok(rec) if !ids.insert(rec.id.clone()) => {
                skipped.push(RowError { line, message: format!("duplicate commit id {}", rec.id) });
            }
            Ok(rec) => records.push(rec),
            Err(message) => skipped.push(RowError { line, message }),
        }
    }
    let corpus = Corpus::from_records(records, options)?;
    Ok(IngestReport { corpus, skipped })
}

/// Writes records in the ingest format (default column names).
pub fn write_csv<W: std::io::Write>(writer: W, records: &[CommitRecord]) -> Result<(), CorpusError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![ID, PROJECT, RELEASE, TIMESTAMP, MESSAGE];
    header.extend(Feature::ALL.iter().map(|f| f.column()));
    header.extend([CONTAINS_BUG, FIX_LABEL]);
    w.write_record(&header)?;
    let flag = |b: Option<bool>| match b {
        Some(true) => "1".to_string(),
        Some(false) => "0".to_string(),
        None => String::new(),
    };
    for r in records {
        let mut row = vec![
            r.id.clone(),
            r.project.clone(),
            r.release_index.to_string(),
            r.timestamp.to_string(),
            r.message.clone(),
        ];
        row.extend(r.features.iter().map(|v| v.to_string()));
        row.push(flag(r.truth_inducing));
        row.push(flag(r.truth_fixing));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
