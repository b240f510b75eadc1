//! Exact distinct counting of identifiers per interval.
//!
//! Interval `j` covers `[origin + (j - m) w, origin + (j - m + 1) w)` with
//! `m = 1`; an event exactly on a boundary belongs to the later interval.
//! Records may arrive in any order. The engine keeps the set of distinct
//! `(interval, id)` pairs at the ingest resolution, which is enough to
//! re-aggregate into any wider whole-multiple interval later.

use std::collections::hash_map::Entry;
use std::collections::{HashMap, HashSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{EventFormat, TimestampKind};
use crate::series::{CountSeries, CumulativeSeries};

/// Index of the first interval in every series produced here.
pub const FIRST_INTERVAL: i64 = 1;

/// One sighting of one individual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub timestamp: f64,
    pub id: String,
}

impl EventRecord {
    pub fn new(timestamp: f64, id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if !timestamp.is_finite() {
            return Err(Error::domain(format!(
                "timestamp {timestamp} is not finite"
            )));
        }
        if id.is_empty() {
            return Err(Error::domain("event id is empty"));
        }
        Ok(EventRecord { timestamp, id })
    }

    pub(crate) fn new_unchecked(timestamp: f64, id: String) -> Self {
        EventRecord { timestamp, id }
    }
}

/// Where interval 1 starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Origin {
    /// A fixed instant; earlier events are rejected.
    At(f64),
    /// The start of the width-aligned bucket holding the earliest event.
    FirstEvent,
}

impl Origin {
    /// Default origin for a file whose timestamps are of the given kind:
    /// zero for plain numbers, the first event's bucket for calendar instants.
    pub fn default_for(kind: TimestampKind) -> Origin {
        match kind {
            TimestampKind::Numeric => Origin::At(0.0),
            TimestampKind::Instant => Origin::FirstEvent,
        }
    }
}

/// Bucket of `timestamp` counted from `anchor` (0-based, may be negative).
pub(crate) fn bucket_of(timestamp: f64, anchor: f64, width: f64) -> i64 {
    ((timestamp - anchor) / width).floor() as i64
}

fn check_width(width: f64) -> Result<()> {
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::domain(format!(
            "interval width must be finite and > 0, got {width}"
        )));
    }
    Ok(())
}

/// Single-pass accumulator of distinct `(interval, id)` pairs.
#[derive(Debug)]
pub struct Ingestor {
    width: f64,
    origin: Origin,
    anchor: f64,
    ids: HashMap<Box<str>, u32>,
    pairs: HashSet<(i64, u32)>,
    min_bucket: Option<i64>,
}

impl Ingestor {
    pub fn new(width: f64, origin: Origin) -> Result<Self> {
        check_width(width)?;
        let anchor = match origin {
            Origin::At(o) if !o.is_finite() => {
                return Err(Error::domain(format!("origin {o} is not finite")))
            }
            Origin::At(o) => o,
            Origin::FirstEvent => 0.0,
        };
        Ok(Ingestor {
            width,
            origin,
            anchor,
            ids: HashMap::new(),
            pairs: HashSet::new(),
            min_bucket: None,
        })
    }

    pub fn push(&mut self, record: &EventRecord) -> Result<()> {
        if !record.timestamp.is_finite() || record.id.is_empty() {
            return Err(Error::domain(format!("malformed event record {record:?}")));
        }
        let bucket = bucket_of(record.timestamp, self.anchor, self.width);
        if matches!(self.origin, Origin::At(_)) && bucket < 0 {
            return Err(Error::domain(format!(
                "timestamp {} precedes the origin {}",
                record.timestamp, self.anchor
            )));
        }
        let next = self.ids.len();
        let id = match self.ids.entry(record.id.as_str().into()) {
            Entry::Occupied(e) => *e.get(),
            Entry::Vacant(e) => {
                let n = u32::try_from(next)
                    .map_err(|_| Error::Resource("more than 2^32 distinct ids".into()))?;
                *e.insert(n)
            }
        };
        self.pairs.insert((bucket, id));
        self.min_bucket = Some(self.min_bucket.map_or(bucket, |m| m.min(bucket)));
        Ok(())
    }

    pub fn finish(self) -> EventIndex {
        let base = match self.origin {
            Origin::At(_) => 0,
            Origin::FirstEvent => self.min_bucket.unwrap_or(0),
        };
        let origin = self.anchor + base as f64 * self.width;
        let mut pairs: Vec<(u64, u32)> = self
            .pairs
            .into_iter()
            .map(|(b, id)| ((b - base) as u64, id))
            .collect();
        pairs.sort_unstable();
        EventIndex {
            width: self.width,
            origin,
            n_ids: self.ids.len(),
            pairs,
        }
    }
}

/// Distinct `(interval, id)` sightings of an ingested log.
#[derive(Debug, Clone, PartialEq)]
pub struct EventIndex {
    width: f64,
    origin: f64,
    n_ids: usize,
    /// Sorted, deduplicated `(0-based interval, interned id)` pairs.
    pairs: Vec<(u64, u32)>,
}

impl EventIndex {
    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn distinct_ids(&self) -> usize {
        self.n_ids
    }

    /// Per-interval counts `C_j` and cumulative counts `Q_j`.
    pub fn series(&self) -> (CountSeries, CumulativeSeries) {
        let n = self.pairs.last().map_or(0, |&(b, _)| b as usize + 1);
        let mut counts = vec![0.0; n];
        let mut first = vec![u64::MAX; self.n_ids];
        for &(b, id) in &self.pairs {
            counts[b as usize] += 1.0;
            let f = &mut first[id as usize];
            *f = (*f).min(b);
        }
        let mut fresh = vec![0.0; n];
        for f in first.into_iter().filter(|&f| f != u64::MAX) {
            fresh[f as usize] += 1.0;
        }
        let cumulative: Vec<f64> = fresh
            .iter()
            .scan(0.0, |acc, &x| {
                *acc += x;
                Some(*acc)
            })
            .collect();
        (
            CountSeries::new(FIRST_INTERVAL, self.width, counts).expect("counts are valid"),
            CumulativeSeries::new(FIRST_INTERVAL, cumulative).expect("cumulative is monotone"),
        )
    }

    /// Re-aggregates into intervals `new_width` wide, which must be a whole
    /// multiple of the ingest width. Wide intervals start at the same origin.
    pub fn rebucket(&self, new_width: f64) -> Result<EventIndex> {
        check_width(new_width)?;
        let ratio = new_width / self.width;
        let factor = ratio.round();
        if factor < 1.0 || (ratio - factor).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::domain(format!(
                "width {new_width} is not a whole multiple of the ingest width {}",
                self.width
            )));
        }
        let factor = factor as u64;
        let mut pairs: Vec<(u64, u32)> =
            self.pairs.iter().map(|&(b, id)| (b / factor, id)).collect();
        pairs.dedup();
        pairs.sort_unstable();
        pairs.dedup();
        Ok(EventIndex {
            width: new_width,
            origin: self.origin,
            n_ids: self.n_ids,
            pairs,
        })
    }
}

/// Counts a collection of records in one pass.
pub fn ingest<'a, I>(
    records: I,
    width: f64,
    origin: Origin,
) -> Result<(CountSeries, CumulativeSeries)>
where
    I: IntoIterator<Item = &'a EventRecord>,
{
    let mut ing = Ingestor::new(width, origin)?;
    for rec in records {
        ing.push(rec)?;
    }
    Ok(ing.finish().series())
}

/// Re-counts raw records at a wider interval; see [`EventIndex::rebucket`].
pub fn rebucket<'a, I>(
    records: I,
    base_width: f64,
    origin: Origin,
    new_width: f64,
) -> Result<(CountSeries, CumulativeSeries)>
where
    I: IntoIterator<Item = &'a EventRecord>,
{
    let mut ing = Ingestor::new(base_width, origin)?;
    for rec in records {
        ing.push(rec)?;
    }
    Ok(ing.finish().rebucket(new_width)?.series())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParseMode {
    /// Abort on the first malformed record.
    Strict,
    /// Skip malformed records and count them.
    Lenient,
}

#[derive(Debug)]
pub struct IngestReport {
    pub index: EventIndex,
    pub records: usize,
    pub skipped: usize,
    /// First few skip reasons, for display.
    pub warnings: Vec<String>,
}

const MAX_WARNINGS: usize = 20;

/// Streams an event file through an [`Ingestor`].
///
/// With `origin = None` the origin follows [`Origin::default_for`] the kind of
/// the first valid record.
pub fn ingest_reader<'a>(
    input: Box<dyn BufRead + 'a>,
    format: &dyn EventFormat,
    width: f64,
    origin: Option<Origin>,
    mode: ParseMode,
) -> Result<IngestReport> {
    check_width(width)?;
    let mut ingestor: Option<Ingestor> = None;
    let (mut records, mut skipped) = (0usize, 0usize);
    let mut warnings = Vec::new();
    for item in format.reader(input) {
        let outcome = item.and_then(|ev| {
            let ing = match &mut ingestor {
                Some(ing) => ing,
                None => ingestor.insert(Ingestor::new(
                    width,
                    origin.unwrap_or_else(|| Origin::default_for(ev.kind)),
                )?),
            };
            ing.push(&ev.record).map_err(|e| match e {
                Error::Domain(message) => Error::Parse {
                    line: ev.line,
                    message,
                },
                other => other,
            })
        });
        match outcome {
            Ok(()) => records += 1,
            Err(e @ Error::Parse { .. }) if mode == ParseMode::Lenient => {
                skipped += 1;
                if warnings.len() < MAX_WARNINGS {
                    warnings.push(e.to_string());
                }
            }
            Err(e) => return Err(e),
        }
    }
    let ingestor = match ingestor {
        Some(ing) => ing,
        None => Ingestor::new(width, origin.unwrap_or(Origin::At(0.0)))?,
    };
    Ok(IngestReport {
        index: ingestor.finish(),
        records,
        skipped,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::CsvFormat;

    fn ev(t: f64, id: &str) -> EventRecord {
        EventRecord::new(t, id).unwrap()
    }

    fn four_events() -> Vec<EventRecord> {
        vec![ev(0.1, "a"), ev(0.2, "b"), ev(1.1, "a"), ev(1.5, "c")]
    }

    #[test]
    fn hand_counted() {
        let (c, q) = ingest(&four_events(), 1.0, Origin::At(0.0)).unwrap();
        assert_eq!(c.counts(), [2.0, 2.0]);
        assert_eq!(q.values(), [2.0, 3.0]);
        assert_eq!(c.start_index(), 1);
    }

    #[test]
    fn empty_stream() {
        let (c, q) = ingest(&[], 1.0, Origin::At(0.0)).unwrap();
        assert!(c.is_empty() && q.is_empty());
    }

    #[test]
    fn boundary_goes_to_later_interval() {
        let (c, _) = ingest(&[ev(1.0, "a")], 1.0, Origin::At(0.0)).unwrap();
        assert_eq!(c.counts(), [0.0, 1.0]);
    }

    #[test]
    fn interior_gaps_are_zero() {
        let (c, q) = ingest(&[ev(0.5, "a"), ev(3.5, "b")], 1.0, Origin::At(0.0)).unwrap();
        assert_eq!(c.counts(), [1.0, 0.0, 0.0, 1.0]);
        assert_eq!(q.values(), [1.0, 1.0, 1.0, 2.0]);
    }

    #[test]
    fn rejects_events_before_origin() {
        assert!(ingest(&[ev(4.0, "a")], 1.0, Origin::At(5.0)).is_err());
        assert!(Ingestor::new(0.0, Origin::At(0.0)).is_err());
    }

    #[test]
    fn aligned_origin() {
        let recs = [ev(100.25, "a"), ev(102.5, "b")];
        let mut ing = Ingestor::new(0.5, Origin::FirstEvent).unwrap();
        for r in &recs {
            ing.push(r).unwrap();
        }
        let idx = ing.finish();
        assert_eq!(idx.origin(), 100.0);
        let (c, _) = idx.series();
        assert_eq!(c.counts(), [1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn rebucket_same_id_both_days() {
        let recs = [ev(0.1, "a"), ev(1.1, "a")];
        let (c, _) = ingest(&recs, 1.0, Origin::At(0.0)).unwrap();
        assert_eq!(c.counts(), [1.0, 1.0]);
        let (c2, q2) = rebucket(&recs, 1.0, Origin::At(0.0), 2.0).unwrap();
        assert_eq!(c2.counts(), [1.0]);
        assert_eq!(q2.values(), [1.0]);
        assert_eq!(c2.interval_width(), 2.0);
    }

    #[test]
    fn rebucket_rejects_non_multiples() {
        let idx = {
            let mut ing = Ingestor::new(1.0, Origin::At(0.0)).unwrap();
            ing.push(&ev(0.5, "a")).unwrap();
            ing.finish()
        };
        assert!(idx.rebucket(1.5).is_err());
        assert!(idx.rebucket(0.5).is_err());
        assert!(idx.rebucket(-7.0).is_err());
        assert!(idx.rebucket(7.0).is_ok());
    }

    #[test]
    fn strict_and_lenient() {
        let text = "timestamp,id\n0.1,a\nbad,b\n1.2,c\n";
        let strict = ingest_reader(
            Box::new(text.as_bytes()),
            &CsvFormat,
            1.0,
            None,
            ParseMode::Strict,
        );
        assert!(matches!(strict, Err(Error::Parse { line: 3, .. })));
        let rep = ingest_reader(
            Box::new(text.as_bytes()),
            &CsvFormat,
            1.0,
            None,
            ParseMode::Lenient,
        )
        .unwrap();
        assert_eq!((rep.records, rep.skipped), (2, 1));
        assert_eq!(rep.index.series().0.counts(), [1.0, 1.0]);
    }

    #[test]
    fn before_origin_reports_line() {
        let text = "timestamp,id\n0.1,a\n";
        let got = ingest_reader(
            Box::new(text.as_bytes()),
            &CsvFormat,
            1.0,
            Some(Origin::At(1.0)),
            ParseMode::Strict,
        );
        assert!(matches!(got, Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn iso_instants_align_to_first_day() {
        let text = "timestamp,id\n2017-11-20T10:00:00Z,a\n2017-11-21T09:00:00Z,a\n2017-11-22T23:59:59Z,b\n";
        let rep = ingest_reader(
            Box::new(text.as_bytes()),
            &CsvFormat,
            1.0,
            None,
            ParseMode::Strict,
        )
        .unwrap();
        let (c, q) = rep.index.series();
        assert_eq!(c.counts(), [1.0, 1.0, 1.0]);
        assert_eq!(q.values(), [1.0, 1.0, 2.0]);
    }
}
