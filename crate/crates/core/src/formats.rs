//! Event log formats, looked up by name or file extension.
//!
//! * CSV: header `timestamp,id`. Timestamps are non-negative decimals or
//!   ISO-8601 instants; the first data row fixes which.
//! * JSONL: one `{"t": <number>, "id": <string>}` object per line.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::EventRecord;

const SECONDS_PER_DAY: f64 = 86_400.0;

/// How a record's timestamp was written in the source file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimestampKind {
    /// A plain number in the same units as the interval width.
    Numeric,
    /// An ISO-8601 instant, converted to fractional days since the Unix epoch.
    Instant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedEvent {
    pub line: usize,
    pub kind: TimestampKind,
    pub record: EventRecord,
}

pub type EventReader<'a> = Box<dyn Iterator<Item = Result<ParsedEvent>> + 'a>;

/// Destination for event records.
pub trait EventSink {
    fn write_event(&mut self, record: &EventRecord) -> Result<()>;

    fn finish(&mut self) -> Result<()> {
        Ok(())
    }
}

impl EventSink for Vec<EventRecord> {
    fn write_event(&mut self, record: &EventRecord) -> Result<()> {
        self.push(record.clone());
        Ok(())
    }
}

pub trait EventFormat: Send + Sync {
    fn name(&self) -> &'static str;
    fn extensions(&self) -> &'static [&'static str];
    fn reader<'a>(&self, input: Box<dyn BufRead + 'a>) -> EventReader<'a>;
    fn writer<'a>(&self, output: Box<dyn Write + 'a>) -> Result<Box<dyn EventSink + 'a>>;
}

pub struct FormatRegistry {
    formats: BTreeMap<&'static str, Box<dyn EventFormat>>,
}

impl Default for FormatRegistry {
    fn default() -> Self {
        let mut reg = FormatRegistry::empty();
        reg.register(Box::new(CsvFormat));
        reg.register(Box::new(JsonlFormat));
        reg
    }
}

impl FormatRegistry {
    pub fn empty() -> Self {
        FormatRegistry {
            formats: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, format: Box<dyn EventFormat>) {
        self.formats.insert(format.name(), format);
    }

    pub fn get(&self, name: &str) -> Option<&dyn EventFormat> {
        self.formats.get(name).map(|f| &**f)
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.formats.keys().copied()
    }

    /// Picks a format from the path's extension (case-insensitive).
    pub fn for_path(&self, path: &Path) -> Result<&dyn EventFormat> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .unwrap_or_default();
        self.formats
            .values()
            .find(|f| f.extensions().contains(&ext.as_str()))
            .map(|f| &**f)
            .ok_or_else(|| {
                Error::domain(format!(
                    "no event format for extension {ext:?} of {}",
                    path.display()
                ))
            })
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn check_record(line: usize, timestamp: f64, id: &str) -> Result<()> {
    if !timestamp.is_finite() {
        return Err(parse_error(
            line,
            format!("timestamp {timestamp} is not finite"),
        ));
    }
    if id.is_empty() {
        return Err(parse_error(line, "empty id"));
    }
    Ok(())
}

/// Parses an ISO-8601 instant into fractional days since the Unix epoch.
/// Accepts RFC 3339, a naive `YYYY-MM-DDTHH:MM:SS[.f]` (taken as UTC) and a
/// bare date.
pub fn parse_instant(s: &str) -> Option<f64> {
    let secs = if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        dt.timestamp() as f64 + f64::from(dt.timestamp_subsec_nanos()) * 1e-9
    } else if let Ok(dt) = NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S%.f")
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S%.f"))
    {
        let dt = dt.and_utc();
        dt.timestamp() as f64 + f64::from(dt.timestamp_subsec_nanos()) * 1e-9
    } else if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        d.and_hms_opt(0, 0, 0)?.and_utc().timestamp() as f64
    } else {
        return None;
    };
    Some(secs / SECONDS_PER_DAY)
}

pub struct CsvFormat;

impl EventFormat for CsvFormat {
    fn name(&self) -> &'static str {
        "csv"
    }

    fn extensions(&self) -> &'static [&'static str] {
        &["csv"]
    }

    fn reader<'a>(&self, input: Box<dyn BufRead + 'a>) -> EventReader<'a> {
        let rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(input);
        let mut records = rdr.into_records();
        let mut header_checked = false;
        let mut kind: Option<TimestampKind> = None;
        Box::new(std::iter::from_fn(move || loop {
            let rec = match records.next()? {
                Ok(rec) => rec,
                Err(e) => {
                    let line = e.position().map_or(0, |p| p.line() as usize);
                    return Some(Err(parse_error(line, e.to_string())));
                }
            };
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if !header_checked {
                header_checked = true;
                let header: Vec<&str> = rec.iter().collect();
                if header != ["timestamp", "id"] {
                    return Some(Err(parse_error(
                        line,
                        format!("expected header `timestamp,id`, got {header:?}"),
                    )));
                }
                continue;
            }
            if rec.len() != 2 {
                return Some(Err(parse_error(
                    line,
                    format!("expected 2 fields, found {}", rec.len()),
                )));
            }
            return Some(parse_csv_row(line, &rec[0], &rec[1], &mut kind));
        }))
    }

    fn writer<'a>(&self, output: Box<dyn Write + 'a>) -> Result<Box<dyn EventSink + 'a>> {
        let mut w = csv::Writer::from_writer(output);
        w.write_record(["timestamp", "id"])
            .map_err(crate::series::csv_err)?;
        Ok(Box::new(CsvSink(w)))
    }
}

fn parse_csv_row(
    line: usize,
    ts: &str,
    id: &str,
    kind: &mut Option<TimestampKind>,
) -> Result<ParsedEvent> {
    let (timestamp, this_kind) = match ts.parse::<f64>() {
        Ok(v) => {
            if v < 0.0 {
                return Err(parse_error(line, format!("negative timestamp {ts:?}")));
            }
            (v, TimestampKind::Numeric)
        }
        Err(_) => match parse_instant(ts) {
            Some(v) => (v, TimestampKind::Instant),
            None => return Err(parse_error(line, format!("unrecognised timestamp {ts:?}"))),
        },
    };
    match kind {
        None => *kind = Some(this_kind),
        Some(k) if *k != this_kind => {
            return Err(parse_error(
                line,
                format!("timestamp {ts:?} does not match the file's {k:?} timestamps"),
            ))
        }
        Some(_) => {}
    }
    check_record(line, timestamp, id)?;
    Ok(ParsedEvent {
        line,
        kind: this_kind,
        record: EventRecord::new_unchecked(timestamp, id.to_owned()),
    })
}

struct CsvSink<W: Write>(csv::Writer<W>);

impl<W: Write> EventSink for CsvSink<W> {
    fn write_event(&mut self, record: &EventRecord) -> Result<()> {
        self.0
            .write_record([record.timestamp.to_string().as_str(), record.id.as_str()])
            .map_err(crate::series::csv_err)
    }

    fn finish(&mut self) -> Result<()> {
        self.0.flush()?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct JsonlRow<'a> {
    t: f64,
    #[serde(borrow)]
    id: std::borrow::Cow<'a, str>,
}

pub struct JsonlFormat;

impl EventFormat for JsonlFormat {
    fn name(&self) -> &'static str {
        "jsonl"
    }

    fn extensions(&self) -> &'static [&'static str] {
        &["jsonl", "ndjson"]
    }

    fn reader<'a>(&self, input: Box<dyn BufRead + 'a>) -> EventReader<'a> {
        let mut lines = input.lines().enumerate();
        Box::new(std::iter::from_fn(move || loop {
            let (k, line) = lines.next()?;
            let line_no = k + 1;
            let text = match line {
                Ok(t) => t,
                Err(e) => return Some(Err(Error::Io(e))),
            };
            if text.trim().is_empty() {
                continue;
            }
            let row: JsonlRow = match serde_json::from_str(&text) {
                Ok(row) => row,
                Err(e) => return Some(Err(parse_error(line_no, e.to_string()))),
            };
            return Some(check_record(line_no, row.t, &row.id).map(|()| ParsedEvent {
                line: line_no,
                kind: TimestampKind::Numeric,
                record: EventRecord::new_unchecked(row.t, row.id.into_owned()),
            }));
        }))
    }

    fn writer<'a>(&self, output: Box<dyn Write + 'a>) -> Result<Box<dyn EventSink + 'a>> {
        Ok(Box::new(JsonlSink(output)))
    }
}

struct JsonlSink<W: Write>(W);

impl<W: Write> EventSink for JsonlSink<W> {
    fn write_event(&mut self, record: &EventRecord) -> Result<()> {
        let row = JsonlRow {
            t: record.timestamp,
            id: record.id.as_str().into(),
        };
        serde_json::to_writer(&mut self.0, &row)?;
        self.0.write_all(b"\n")?;
        Ok(())
    }

    fn finish(&mut self) -> Result<()> {
        self.0.flush()?;
        Ok(())
    }
}
