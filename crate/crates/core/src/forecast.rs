//! Reach forecasts from a fitted dimension, and the saturation ceiling.
//!
//! Two methods are registered by default:
//!
//! * `scaling`: `c1 * t^r`, with `c1` the geometric mean of the observed
//!   interval counts.
//! * `lp`: running L^p-norm over the observed counts followed by
//!   hypothesised future counts (by default the geometric mean of the last
//!   seven observed intervals, repeated).

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::DimensionFit;
use crate::norm::{lp_combine_partial, scaling_law, NormExponent};
use crate::series::{format_count, geometric_mean, CountSeries, CumulativeSeries};

/// Observed intervals averaged for the default future count.
pub const RECENT_WINDOW: usize = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachForecast {
    /// Number of intervals covered, starting at interval 1.
    pub horizon: usize,
    /// Predicted cumulative count after each interval.
    pub predicted: Vec<f64>,
    pub method: String,
    pub fit: DimensionFit,
}

impl ReachForecast {
    pub fn last(&self) -> Option<f64> {
        self.predicted.last().copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaturationEstimate {
    pub ceiling: f64,
}

fn check_fit(fit: &DimensionFit, force: bool) -> Result<()> {
    if !fit.converged && !force {
        return Err(Error::domain(format!(
            "refusing to forecast from a fit that did not converge (p = {})",
            fit.p
        )));
    }
    Ok(())
}

/// Predicts `c1 * t^r` for `t = 1..=horizon`.
pub fn forecast_scaling(
    fit: &DimensionFit,
    c1: f64,
    horizon: usize,
    force: bool,
) -> Result<ReachForecast> {
    check_fit(fit, force)?;
    if !(c1 > 0.0 && c1.is_finite()) {
        return Err(Error::domain(format!(
            "c1 must be finite and > 0, got {c1}"
        )));
    }
    if horizon == 0 {
        return Err(Error::domain("horizon must be >= 1"));
    }
    let predicted = (1..=horizon)
        .map(|t| scaling_law(c1, fit.r, t as f64))
        .collect::<Result<Vec<_>>>()?;
    Ok(ReachForecast {
        horizon,
        predicted,
        method: ScalingMethod.name().to_owned(),
        fit: *fit,
    })
}

/// Running L^p-norm over `observed` followed by `future_counts`.
///
/// `predicted[k]` combines the first `k + 1` counts, so the forecast covers
/// `observed.len() + future_counts.len()` intervals.
pub fn forecast_lp(
    fit: &DimensionFit,
    observed: &CountSeries,
    future_counts: &[f64],
    force: bool,
) -> Result<ReachForecast> {
    check_fit(fit, force)?;
    if observed.is_empty() {
        return Err(Error::domain("no observed counts to extend"));
    }
    let p = NormExponent::new(fit.p)?;
    let mut running = 0.0;
    let predicted = observed
        .counts()
        .iter()
        .chain(future_counts)
        .map(|&c| {
            running = lp_combine_partial(running, &[c], p)?;
            Ok(running)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReachForecast {
        horizon: predicted.len(),
        predicted,
        method: LpMethod.name().to_owned(),
        fit: *fit,
    })
}

pub fn saturation_ceiling(fit: &DimensionFit) -> SaturationEstimate {
    SaturationEstimate {
        ceiling: 1.0 - fit.r,
    }
}

/// Geometric mean of the last [`RECENT_WINDOW`] positive observed counts.
pub fn recent_level(observed: &CountSeries) -> Option<f64> {
    let counts = observed.counts();
    geometric_mean(&counts[counts.len().saturating_sub(RECENT_WINDOW)..])
}

/// A forecasting strategy selectable by name.
pub trait ForecastMethod: Send + Sync {
    fn name(&self) -> &'static str;

    fn forecast(
        &self,
        fit: &DimensionFit,
        observed: &CountSeries,
        horizon: usize,
        force: bool,
    ) -> Result<ReachForecast>;
}

pub struct ScalingMethod;

impl ForecastMethod for ScalingMethod {
    fn name(&self) -> &'static str {
        "scaling"
    }

    fn forecast(
        &self,
        fit: &DimensionFit,
        observed: &CountSeries,
        horizon: usize,
        force: bool,
    ) -> Result<ReachForecast> {
        let c1 = observed
            .geometric_mean()
            .ok_or_else(|| Error::domain("no positive observed counts"))?;
        forecast_scaling(fit, c1, horizon, force)
    }
}

pub struct LpMethod;

impl ForecastMethod for LpMethod {
    fn name(&self) -> &'static str {
        "lp"
    }

    fn forecast(
        &self,
        fit: &DimensionFit,
        observed: &CountSeries,
        horizon: usize,
        force: bool,
    ) -> Result<ReachForecast> {
        if horizon < observed.len() {
            return Err(Error::domain(format!(
                "horizon {horizon} is shorter than the {} observed intervals",
                observed.len()
            )));
        }
        let level =
            recent_level(observed).ok_or_else(|| Error::domain("no positive observed counts"))?;
        let future = vec![level; horizon - observed.len()];
        forecast_lp(fit, observed, &future, force)
    }
}

pub struct ForecastRegistry {
    methods: BTreeMap<&'static str, Box<dyn ForecastMethod>>,
}

impl Default for ForecastRegistry {
    fn default() -> Self {
        let mut reg = ForecastRegistry {
            methods: BTreeMap::new(),
        };
        reg.register(Box::new(ScalingMethod));
        reg.register(Box::new(LpMethod));
        reg
    }
}

impl ForecastRegistry {
    pub fn register(&mut self, method: Box<dyn ForecastMethod>) {
        self.methods.insert(method.name(), method);
    }

    pub fn get(&self, name: &str) -> Result<&dyn ForecastMethod> {
        self.methods.get(name).map(|m| &**m).ok_or_else(|| {
            Error::domain(format!(
                "unknown forecast method {name:?}; available: {}",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.methods.keys().copied()
    }
}

/// Writes `interval,count,cumulative,predicted`; observed columns are blank
/// past the observed range.
pub fn write_forecast_csv<W: Write>(
    out: W,
    counts: &CountSeries,
    cumulative: &CumulativeSeries,
    forecast: &ReachForecast,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = crate::series::csv_err;
    w.write_record(["interval", "count", "cumulative", "predicted"])
        .map_err(err)?;
    let m = counts.start_index();
    for (k, &pred) in forecast.predicted.iter().enumerate() {
        let c = counts
            .counts()
            .get(k)
            .map_or(String::new(), |&v| format_count(v));
        let q = cumulative
            .values()
            .get(k)
            .map_or(String::new(), |&v| format_count(v));
        w.write_record([(m + k as i64).to_string(), c, q, format_count(pred)])
            .map_err(err)?;
    }
    w.flush()?;
    Ok(())
}
