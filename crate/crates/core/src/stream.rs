//! Stream records, ordered streams, file loading, and the temporal split.
//!
//! A stream is a list of records sorted ascending by first-seen time
//! (epoch-days), with lexicographic id as the tie-break so replays are
//! deterministic. Evaluation splits respect that order: training data always
//! precedes test data in stream time.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One timestamped, token-bearing sample.
///
/// `label_available_at` is the earliest epoch-day the ground-truth label can
/// be observed; it is never before `timestamp`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamRecord {
    pub id: String,
    #[serde(rename = "ts")]
    pub timestamp: i64,
    #[serde(rename = "label")]
    pub true_label: Option<String>,
    #[serde(rename = "label_at")]
    pub label_available_at: i64,
    pub tokens: Vec<String>,
    pub subclass: Option<String>,
}

impl StreamRecord {
    pub fn new(id: impl Into<String>, timestamp: i64, tokens: Vec<String>, label: Option<String>) -> Self {
        Self {
            id: id.into(),
            timestamp,
            true_label: label,
            label_available_at: timestamp,
            tokens,
            subclass: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.label_available_at < self.timestamp {
            return Err(Error::LabelBeforeTimestamp {
                id: self.id.clone(),
                ts: self.timestamp,
                label_at: self.label_available_at,
            });
        }
        if self.true_label.is_some() && self.tokens.is_empty() {
            return Err(Error::InvalidConfig(format!("labeled record {} has no tokens", self.id)));
        }
        Ok(())
    }
}

/// Input file format for [`load_stream`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StreamFormat {
    Jsonl,
    Csv,
}

/// Records sorted ascending by `(timestamp, id)` plus the label alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Stream {
    records: Vec<StreamRecord>,
    class_alphabet: BTreeSet<String>,
}

impl Stream {
    /// Sort records into stream order and check per-record invariants.
    pub fn new(mut records: Vec<StreamRecord>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for r in &records {
            r.validate()?;
            if !seen.insert(r.id.clone()) {
                return Err(Error::DuplicateId(r.id.clone()));
            }
        }
        records.sort_by(|a, b| (a.timestamp, &a.id).cmp(&(b.timestamp, &b.id)));
        let class_alphabet = records.iter().filter_map(|r| r.true_label.clone()).collect();
        Ok(Self { records, class_alphabet })
    }

    pub fn records(&self) -> &[StreamRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn class_alphabet(&self) -> &BTreeSet<String> {
        &self.class_alphabet
    }

    pub fn classes(&self) -> Vec<String> {
        self.class_alphabet.iter().cloned().collect()
    }

    /// Count of records per label.
    pub fn class_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.records {
            if let Some(l) = &r.true_label {
                *counts.entry(l.clone()).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Serialize to JSONL in stream order (the canonical byte form used for
    /// dataset hashing).
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write_jsonl(&self, mut w: impl Write) -> Result<()> {
        w.write_all(self.to_jsonl().as_bytes())?;
        Ok(())
    }
}

/// Load a stream from disk, sorting records by `(timestamp, id)`.
///
/// Malformed rows are reported with their 1-based line number.
pub fn load_stream(path: impl AsRef<Path>, format: StreamFormat) -> Result<Stream> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    match format {
        StreamFormat::Jsonl => load_jsonl(reader),
        StreamFormat::Csv => load_csv(reader),
    }
}

fn load_jsonl(reader: impl BufRead) -> Result<Stream> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: StreamRecord = serde_json::from_str(&line)
            .map_err(|e| Error::MalformedRow { line: idx + 1, msg: e.to_string() })?;
        record.validate().map_err(|e| Error::MalformedRow { line: idx + 1, msg: e.to_string() })?;
        records.push(record);
    }
    Stream::new(records)
}

/// CSV columns: `id,ts,label,label_at,tokens,subclass` with tokens
/// space-joined; empty label/subclass cells mean absent.
fn load_csv(reader: impl BufRead) -> Result<Stream> {
    let mut csv_reader = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let mut records = Vec::new();
    for (idx, row) in csv_reader.deserialize::<CsvRow>().enumerate() {
        // +2: 1-based plus the header line.
        let line = idx + 2;
        let row = row.map_err(|e| Error::MalformedRow { line, msg: e.to_string() })?;
        let record = row.into_record();
        record.validate().map_err(|e| Error::MalformedRow { line, msg: e.to_string() })?;
        records.push(record);
    }
    Stream::new(records)
}

#[derive(Deserialize)]
struct CsvRow {
    id: String,
    ts: i64,
    label: String,
    label_at: i64,
    tokens: String,
    subclass: String,
}

impl CsvRow {
    fn into_record(self) -> StreamRecord {
        let none_if_empty = |s: String| if s.is_empty() { None } else { Some(s) };
        StreamRecord {
            id: self.id,
            timestamp: self.ts,
            true_label: none_if_empty(self.label),
            label_available_at: self.label_at,
            tokens: self.tokens.split_whitespace().map(str::to_owned).collect(),
            subclass: none_if_empty(self.subclass),
        }
    }
}

/// Split a stream into the earliest `ceil(fraction * n)` records and the
/// rest. No test record is ever older than a train record.
pub fn temporal_split(stream: &Stream, fraction: f64) -> Result<(Stream, Stream)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::BadSplitFraction(fraction));
    }
    if stream.is_empty() {
        return Err(Error::EmptyStream);
    }
    let n = stream.len();
    let k = ((fraction * n as f64).ceil() as usize).min(n);
    let records = stream.records();
    if k > 0 && k < n && records[k - 1].timestamp == records[k].timestamp {
        log::warn!(
            "temporal split boundary falls inside day {}; records there split by id order",
            records[k].timestamp
        );
    }
    let train = Stream::new(records[..k].to_vec())?;
    let test = Stream::new(records[k..].to_vec())?;
    Ok((train, test))
}
