//! Per-interval and cumulative count series, and the counts CSV format.
//!
//! The CSV has the header `interval,count,cumulative` and one row per
//! interval in index order.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distinct counts `C_m..C_n` for contiguous intervals of equal width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountSeries {
    start_index: i64,
    interval_width: f64,
    counts: Vec<f64>,
}

impl CountSeries {
    pub fn new(start_index: i64, interval_width: f64, counts: Vec<f64>) -> Result<Self> {
        if !(interval_width.is_finite() && interval_width > 0.0) {
            return Err(Error::domain(format!(
                "interval width must be finite and > 0, got {interval_width}"
            )));
        }
        for (k, &c) in counts.iter().enumerate() {
            if !c.is_finite() || c < 0.0 {
                return Err(Error::domain(format!(
                    "count for interval {} must be finite and >= 0, got {c}",
                    start_index + k as i64
                )));
            }
        }
        Ok(CountSeries {
            start_index,
            interval_width,
            counts,
        })
    }

    pub fn start_index(&self) -> i64 {
        self.start_index
    }

    pub fn end_index(&self) -> i64 {
        self.start_index + self.counts.len() as i64 - 1
    }

    pub fn interval_width(&self) -> f64 {
        self.interval_width
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Geometric mean of the positive counts, or `None` when there are none.
    pub fn geometric_mean(&self) -> Option<f64> {
        geometric_mean(&self.counts)
    }
}

pub(crate) fn geometric_mean(values: &[f64]) -> Option<f64> {
    let (sum, n) = values
        .iter()
        .filter(|&&c| c > 0.0)
        .fold((0.0, 0usize), |(s, n), &c| (s + c.ln(), n + 1));
    (n > 0).then(|| (sum / n as f64).exp())
}

/// Non-decreasing cumulative distinct counts `Q_m..Q_n`; `Q_{m-1}` is 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeSeries {
    start_index: i64,
    cumulative: Vec<f64>,
}

impl CumulativeSeries {
    pub fn new(start_index: i64, cumulative: Vec<f64>) -> Result<Self> {
        let mut prev = 0.0;
        for (k, &q) in cumulative.iter().enumerate() {
            let j = start_index + k as i64;
            if !q.is_finite() || q < 0.0 {
                return Err(Error::domain(format!(
                    "cumulative count for interval {j} must be finite and >= 0, got {q}"
                )));
            }
            if q < prev {
                return Err(Error::domain(format!(
                    "cumulative count decreases at interval {j}: {q} < {prev}"
                )));
            }
            prev = q;
        }
        Ok(CumulativeSeries {
            start_index,
            cumulative,
        })
    }

    pub fn start_index(&self) -> i64 {
        self.start_index
    }

    pub fn values(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    pub fn last(&self) -> Option<f64> {
        self.cumulative.last().copied()
    }
}

/// Formats a count so integral values print without a fractional part.
pub fn format_count(v: f64) -> String {
    format!("{v}")
}

pub fn write_counts_csv<W: Write>(
    out: W,
    counts: &CountSeries,
    cumulative: &CumulativeSeries,
) -> Result<()> {
    check_aligned(counts, cumulative)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["interval", "count", "cumulative"])
        .map_err(csv_err)?;
    for (k, (&c, &q)) in counts.counts().iter().zip(cumulative.values()).enumerate() {
        let j = counts.start_index() + k as i64;
        w.write_record([j.to_string(), format_count(c), format_count(q)])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a counts CSV. Intervals must be contiguous and ascending; the
/// interval width is taken as 1.
pub fn read_counts_csv<R: Read>(input: R) -> Result<(CountSeries, CumulativeSeries)> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = r.headers().map_err(csv_err)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse {
                line: 1,
                message: format!("missing column {name:?}"),
            })
    };
    let (ci, cc, cq) = (col("interval")?, col("count")?, col("cumulative")?);

    let mut start = None;
    let mut counts = Vec::new();
    let mut cumulative = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| rec.get(i).unwrap_or("");
        let bad = |what: &str, v: &str| Error::Parse {
            line,
            message: format!("invalid {what} {v:?}"),
        };
        let j: i64 = field(ci).parse().map_err(|_| bad("interval", field(ci)))?;
        let c: f64 = field(cc).parse().map_err(|_| bad("count", field(cc)))?;
        let q: f64 = field(cq)
            .parse()
            .map_err(|_| bad("cumulative", field(cq)))?;
        let m = *start.get_or_insert(j);
        if j != m + counts.len() as i64 {
            return Err(Error::Parse {
                line,
                message: format!("interval {j} is out of sequence"),
            });
        }
        counts.push(c);
        cumulative.push(q);
    }
    let m = start.unwrap_or(1);
    Ok((
        CountSeries::new(m, 1.0, counts)?,
        CumulativeSeries::new(m, cumulative)?,
    ))
}

pub(crate) fn check_aligned(counts: &CountSeries, cumulative: &CumulativeSeries) -> Result<()> {
    if counts.len() != cumulative.len() || counts.start_index() != cumulative.start_index() {
        return Err(Error::domain(format!(
            "series are not aligned: counts {}..+{}, cumulative {}..+{}",
            counts.start_index(),
            counts.len(),
            cumulative.start_index(),
            cumulative.len()
        )));
    }
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse {
            line,
            message: format!("{kind:?}"),
        },
    }
}
