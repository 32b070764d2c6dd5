//! CSV stream ingestion, index traces and JSON-lines event logs.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cvi::IndexKind;
use crate::datagen::LabeledStream;
use crate::error::{Error, Result};
use crate::types::{points_from_rows, StreamPoint};

pub const TRACE_HEADER: [&str; 6] = ["n", "k", "xb", "xb_lambda", "db", "db_lambda"];

/// One row of an index trace. Undefined or disabled indices are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub n: u64,
    pub k: usize,
    /// Indexed by [`IndexKind::slot`].
    pub values: [Option<f64>; 4],
    /// Crisp label of the winning cluster, when requested.
    pub label: Option<usize>,
}

impl TraceRecord {
    pub fn get(&self, kind: IndexKind) -> Option<f64> {
        self.values[kind.slot()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    ClusterCreated,
    CovarianceRegularized,
    IndexUndefined,
    GroundTruthChange,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::ClusterCreated => "cluster_created",
            EventKind::CovarianceRegularized => "covariance_regularized",
            EventKind::IndexUndefined => "index_undefined",
            EventKind::GroundTruthChange => "ground_truth_change",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub n: u64,
    pub kind: EventKind,
    pub detail: String,
}

/// Column selector for [`StreamSchema`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Column {
    Index(usize),
    Name(String),
}

impl FromStr for Column {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.parse::<usize>() {
            Ok(i) => Column::Index(i),
            Err(_) => Column::Name(s.to_string()),
        })
    }
}

/// Layout of an input CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StreamSchema {
    pub has_header: bool,
    /// Feature columns; `None` takes every column except the label.
    pub features: Option<Vec<Column>>,
    pub label: Option<Column>,
}

impl Default for StreamSchema {
    fn default() -> Self {
        Self {
            has_header: true,
            features: None,
            label: None,
        }
    }
}

impl StreamSchema {
    /// The layout written by [`write_stream`].
    pub fn generated() -> Self {
        Self {
            has_header: true,
            features: None,
            label: Some(Column::Name("label".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamData {
    pub points: Vec<StreamPoint>,
    pub labels: Option<Vec<String>>,
}

fn resolve(col: &Column, header: Option<&csv::StringRecord>, width: usize, path: &Path) -> Result<usize> {
    match col {
        Column::Index(i) if *i < width => Ok(*i),
        Column::Index(i) => Err(Error::Format {
            path: path.to_path_buf(),
            message: format!("column {i} out of range (file has {width} columns)"),
        }),
        Column::Name(name) => header
            .and_then(|h| h.iter().position(|c| c.trim() == name))
            .ok_or_else(|| Error::Format {
                path: path.to_path_buf(),
                message: format!("no column named {name:?}"),
            }),
    }
}

/// Reads a numeric stream. Row numbers in errors are 1-based data rows.
pub fn read_stream(path: impl AsRef<Path>, schema: &StreamSchema) -> Result<StreamData> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(schema.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = if schema.has_header {
        Some(reader.headers().map_err(|e| csv_error(path, e))?.clone())
    } else {
        None
    };

    let mut layout: Option<(Vec<usize>, Option<usize>, usize)> = None;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Ingest {
            row,
            message: e.to_string(),
        })?;
        let width = record.len();
        if layout.is_none() {
            let label = schema
                .label
                .as_ref()
                .map(|c| resolve(c, header.as_ref(), width, path))
                .transpose()?;
            let features = match &schema.features {
                Some(cols) => cols
                    .iter()
                    .map(|c| resolve(c, header.as_ref(), width, path))
                    .collect::<Result<Vec<_>>>()?,
                None => (0..width).filter(|&c| Some(c) != label).collect(),
            };
            if features.is_empty() {
                return Err(Error::Format {
                    path: path.to_path_buf(),
                    message: "no feature columns".into(),
                });
            }
            layout = Some((features, label, width));
        }
        let (features, label, expected) = layout.as_ref().expect("set above");
        if width != *expected {
            return Err(Error::Ingest {
                row,
                message: format!("{width} fields, expected {expected}"),
            });
        }
        let x = features
            .iter()
            .map(|&c| {
                record[c].parse::<f64>().map_err(|_| Error::Ingest {
                    row,
                    message: format!("non-numeric value {:?} in column {c}", &record[c]),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(c) = label {
            labels.push(record[*c].to_string());
        }
        rows.push(x);
    }
    let points = points_from_rows(rows).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let has_label = layout.as_ref().is_some_and(|l| l.1.is_some()) || schema.label.is_some();
    Ok(StreamData {
        points,
        labels: has_label.then_some(labels),
    })
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

/// Shortest decimal text that parses back to the same `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Writes a generated stream as `x1,…,xp,label`.
pub fn write_stream(stream: &LabeledStream, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    let p = stream.points.first().map_or(0, StreamPoint::dim);
    let mut header: Vec<String> = (1..=p).map(|i| format!("x{i}")).collect();
    header.push("label".into());
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for (pt, label) in stream.points.iter().zip(&stream.labels) {
        let mut row: Vec<String> = pt.x().iter().map(|&v| format_f64(v)).collect();
        row.push(label.to_string());
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes a trace. A `label` column is appended when any record carries a label.
pub fn write_trace(records: &[TraceRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let with_label = records.iter().any(|r| r.label.is_some());
    let mut w = csv_writer(path)?;
    let mut header: Vec<&str> = TRACE_HEADER.to_vec();
    if with_label {
        header.push("label");
    }
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for r in records {
        let mut row = vec![r.n.to_string(), r.k.to_string()];
        row.extend(r.values.iter().map(|v| v.map(format_f64).unwrap_or_default()));
        if with_label {
            row.push(r.label.map(|l| l.to_string()).unwrap_or_default());
        }
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<TraceRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().from_reader(file);
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let names: Vec<&str> = header.iter().collect();
    let with_label = match names.as_slice() {
        n if n == TRACE_HEADER => false,
        [rest @ .., "label"] if rest == TRACE_HEADER => true,
        _ => {
            return Err(Error::Format {
                path: path.to_path_buf(),
                message: format!("unexpected trace header {names:?}"),
            })
        }
    };
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Ingest {
            row,
            message: e.to_string(),
        })?;
        let bad = |c: usize| Error::Ingest {
            row,
            message: format!("bad value {:?} in column {}", &record[c], names[c]),
        };
        let n = record[0].parse().map_err(|_| bad(0))?;
        let k = record[1].parse().map_err(|_| bad(1))?;
        let mut values = [None; 4];
        for (slot, v) in values.iter_mut().enumerate() {
            let cell = &record[2 + slot];
            if !cell.is_empty() {
                *v = Some(cell.parse().map_err(|_| bad(2 + slot))?);
            }
        }
        let label = if with_label && !record[6].is_empty() {
            Some(record[6].parse().map_err(|_| bad(6))?)
        } else {
            None
        };
        out.push(TraceRecord { n, k, values, label });
    }
    Ok(out)
}

/// Writes one JSON object per line. Records must be ordered by `n`.
pub fn write_events(records: &[EventRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if records.windows(2).any(|w| w[0].n > w[1].n) {
        return Err(Error::Structural("event records are not ordered by n".into()));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_events(path: impl AsRef<Path>) -> Result<Vec<EventRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Ingest {
            row: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Ground-truth change events as records, for a stream's sidecar file.
pub fn change_event_records(change_events: &[u64]) -> Vec<EventRecord> {
    change_events
        .iter()
        .map(|&n| EventRecord {
            n,
            kind: EventKind::GroundTruthChange,
            detail: String::new(),
        })
        .collect()
}

/// Sequence indices of the `ground_truth_change` records in an event file.
pub fn read_change_events(path: impl AsRef<Path>) -> Result<Vec<u64>> {
    Ok(read_events(path)?
        .into_iter()
        .filter(|r| r.kind == EventKind::GroundTruthChange)
        .map(|r| r.n)
        .collect())
}
