//! Tidy per-interval series for external plotting: the interval count, the
//! running L^p-norm of the counts, the true cumulative count, and the
//! power law whose coefficient is the geometric mean of the counts.

use std::io::Write;

use crate::error::{Error, Result};
use crate::fit::DimensionFit;
use crate::norm::{lp_combine_partial, NormExponent};
use crate::series::{check_aligned, format_count, CountSeries, CumulativeSeries};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotRow {
    pub interval: i64,
    pub count: f64,
    pub lp_norm: f64,
    pub cumulative: f64,
    pub scaling_law: f64,
}

pub fn plot_rows(
    counts: &CountSeries,
    cumulative: &CumulativeSeries,
    fit: &DimensionFit,
) -> Result<Vec<PlotRow>> {
    check_aligned(counts, cumulative)?;
    let p = NormExponent::new(fit.p)?;
    let g = counts
        .geometric_mean()
        .ok_or_else(|| Error::domain("no positive counts"))?;
    let mut running = 0.0;
    counts
        .counts()
        .iter()
        .zip(cumulative.values())
        .enumerate()
        .map(|(k, (&c, &q))| {
            running = lp_combine_partial(running, &[c], p)?;
            Ok(PlotRow {
                interval: counts.start_index() + k as i64,
                count: c,
                lp_norm: running,
                cumulative: q,
                scaling_law: g * ((k + 1) as f64).powf(fit.r),
            })
        })
        .collect()
}

pub fn write_plot_csv<W: Write>(out: W, rows: &[PlotRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = crate::series::csv_err;
    w.write_record(["interval", "count", "lp_norm", "cumulative", "scaling_law"])
        .map_err(err)?;
    for r in rows {
        w.write_record([
            r.interval.to_string(),
            format_count(r.count),
            format_count(r.lp_norm),
            format_count(r.cumulative),
            format_count(r.scaling_law),
        ])
        .map_err(err)?;
    }
    w.flush()?;
    Ok(())
}
