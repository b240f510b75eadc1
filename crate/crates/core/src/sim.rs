//! Renewal simulation of a stable population with Pareto lifetimes.
//!
//! `N` slots each hold one live individual. When an individual's lifetime
//! expires it is replaced at once by a newcomer with a fresh identifier and
//! a freshly drawn lifetime. Every slot starts with a newborn at time 0 (or at
//! `-burn_in` intervals when a burn-in is requested). An individual counts in
//! every output interval its lifespan overlaps.
//!
//! Births are processed in time order through a queue of slot expiries, so
//! identifiers increase with birth time.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::EventSink;
use crate::ingest::{bucket_of, EventRecord, FIRST_INTERVAL};
use crate::pareto::ParetoLifetimeModel;
use crate::series::{CountSeries, CumulativeSeries};

pub const DEFAULT_MAX_EVENTS: u64 = 1_000_000_000;

/// Default Pareto scale, in interval widths.
pub const DEFAULT_SCALE_INTERVALS: f64 = 0.01;

/// Digits in a rendered identifier.
pub const ID_WIDTH: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub model: ParetoLifetimeModel,
    /// Number of output intervals.
    pub horizon: u32,
    /// Interval width in the model's time units.
    pub interval_width: f64,
    pub seed: u64,
    /// Intervals simulated and discarded before the first output interval.
    pub burn_in: u32,
    /// Refuse runs where `N * (horizon + burn_in)` exceeds this.
    pub max_events: u64,
    /// Optional cyclic profile of the fraction of slots observed in each
    /// output interval: slot `k` is seen in interval `j` iff
    /// `k < ceil(N * profile[j % len])`.
    pub observed_fraction: Option<Vec<f64>>,
}

impl SimConfig {
    /// A config with unit-width intervals, no burn-in and full observation.
    pub fn new(model: ParetoLifetimeModel, horizon: u32, seed: u64) -> Self {
        SimConfig {
            model,
            horizon,
            interval_width: 1.0,
            seed,
            burn_in: 0,
            max_events: DEFAULT_MAX_EVENTS,
            observed_fraction: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::domain("horizon must be >= 1"));
        }
        if !(self.interval_width.is_finite() && self.interval_width > 0.0) {
            return Err(Error::domain(format!(
                "interval width must be finite and > 0, got {}",
                self.interval_width
            )));
        }
        if let Some(profile) = &self.observed_fraction {
            if profile.is_empty() {
                return Err(Error::domain("observed_fraction profile is empty"));
            }
            if let Some(f) = profile.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
                return Err(Error::domain(format!(
                    "observed fractions must lie in (0, 1], got {f}"
                )));
            }
        }
        let n = self.model.population_n();
        let spans = u64::from(self.horizon) + u64::from(self.burn_in);
        if n.checked_mul(spans).is_none_or(|v| v > self.max_events) {
            return Err(Error::Resource(format!(
                "N x intervals = {n} x {spans} exceeds the cap of {} events",
                self.max_events
            )));
        }
        Ok(())
    }

    /// Parses a plain-text `key = value` config. `#` starts a comment.
    ///
    /// Keys: `n`, `shape_b`, `horizon`, `seed` (required); `scale_a`,
    /// `width`, `burn_in`, `max_events`, `observed_fraction` (comma list).
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut n = None;
        let mut shape_b = None;
        let mut scale_a = None;
        let mut horizon = None;
        let mut seed = None;
        let mut width = 1.0;
        let mut burn_in = 0;
        let mut max_events = DEFAULT_MAX_EVENTS;
        let mut profile = None;

        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("expected key = value, got {line:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = || Error::Parse {
                line: line_no,
                message: format!("invalid value {value:?} for {key}"),
            };
            match key {
                "n" => n = Some(value.parse().map_err(|_| bad())?),
                "shape_b" => shape_b = Some(value.parse().map_err(|_| bad())?),
                "scale_a" => scale_a = Some(value.parse().map_err(|_| bad())?),
                "horizon" => horizon = Some(value.parse().map_err(|_| bad())?),
                "seed" => seed = Some(value.parse().map_err(|_| bad())?),
                "width" | "interval_width" => width = value.parse().map_err(|_| bad())?,
                "burn_in" => burn_in = value.parse().map_err(|_| bad())?,
                "max_events" => max_events = value.parse().map_err(|_| bad())?,
                "observed_fraction" => {
                    let fs: std::result::Result<Vec<f64>, _> =
                        value.split(',').map(|s| s.trim().parse()).collect();
                    profile = Some(fs.map_err(|_| bad())?);
                }
                other => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("unknown key {other:?}"),
                    })
                }
            }
        }
        let missing = |k: &str| Error::domain(format!("config is missing required key {k:?}"));
        let model = ParetoLifetimeModel::new(
            scale_a.unwrap_or(DEFAULT_SCALE_INTERVALS * width),
            shape_b.ok_or_else(|| missing("shape_b"))?,
            n.ok_or_else(|| missing("n"))?,
        )?;
        let config = SimConfig {
            model,
            horizon: horizon.ok_or_else(|| missing("horizon"))?,
            interval_width: width,
            seed: seed.ok_or_else(|| missing("seed"))?,
            burn_in,
            max_events,
            observed_fraction: profile,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub interval_counts: CountSeries,
    pub cumulative_counts: CumulativeSeries,
    /// Births strictly inside the output window.
    pub total_replacements: u64,
    /// Individuals observed in at least one output interval.
    pub distinct_ids: u64,
}

/// One individual's lifespan, in interval units measured from the start of
/// the first output interval.
#[derive(Debug, Clone, Copy)]
struct Lifespan {
    id: u64,
    slot: u32,
    birth: f64,
    death: f64,
}

#[derive(Clone, Copy, PartialEq)]
struct Expiry(f64, u32);

impl Eq for Expiry {}

impl PartialOrd for Expiry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Expiry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

struct Observer {
    horizon: u32,
    /// Per output interval, number of leading slots observed.
    visible_slots: Option<Vec<u64>>,
}

impl Observer {
    fn new(config: &SimConfig) -> Self {
        let n = config.model.population_n() as f64;
        let visible_slots = config.observed_fraction.as_ref().map(|profile| {
            (0..config.horizon as usize)
                .map(|j| (n * profile[j % profile.len()]).ceil() as u64)
                .collect()
        });
        Observer {
            horizon: config.horizon,
            visible_slots,
        }
    }

    /// 0-based output intervals overlapped by the lifespan (half-open).
    fn overlap(&self, life: &Lifespan) -> std::ops::Range<u32> {
        let h = f64::from(self.horizon);
        if life.birth >= h || life.death <= 0.0 {
            return 0..0;
        }
        let lo = life.birth.max(0.0).floor() as u32;
        let hi = life.death.min(h).ceil() as u32;
        lo..hi
    }

    fn sees(&self, slot: u32, interval: u32) -> bool {
        self.visible_slots
            .as_ref()
            .is_none_or(|v| u64::from(slot) < v[interval as usize])
    }
}

/// Drives the renewal process and hands every individual that overlaps the
/// output window to `visit`. Returns the number of births inside the window.
fn simulate<F>(config: &SimConfig, mut visit: F) -> Result<u64>
where
    F: FnMut(&Lifespan) -> Result<()>,
{
    config.validate()?;
    let model = &config.model;
    let scale = 1.0 / config.interval_width;
    let start = -f64::from(config.burn_in);
    let end = f64::from(config.horizon);
    let n = u32::try_from(model.population_n())
        .map_err(|_| Error::Resource("population exceeds 2^32 slots".into()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut queue = BinaryHeap::with_capacity(n as usize);
    let mut next_id = 0u64;
    let mut births_in_window = 0u64;

    for slot in 0..n {
        let life = Lifespan {
            id: next_id,
            slot,
            birth: start,
            death: start + model.sample(&mut rng) * scale,
        };
        next_id += 1;
        visit(&life)?;
        queue.push(Reverse(Expiry(life.death, slot)));
    }

    while let Some(Reverse(Expiry(t, slot))) = queue.pop() {
        if t >= end {
            break;
        }
        let life = Lifespan {
            id: next_id,
            slot,
            birth: t,
            death: t + model.sample(&mut rng) * scale,
        };
        next_id += 1;
        if t > 0.0 {
            births_in_window += 1;
        }
        visit(&life)?;
        queue.push(Reverse(Expiry(life.death, slot)));
    }
    Ok(births_in_window)
}

/// Runs one simulation and returns exact interval and cumulative counts.
pub fn run_sim(config: &SimConfig) -> Result<SimResult> {
    let observer = Observer::new(config);
    let h = config.horizon as usize;
    let mut diff = vec![0i64; h + 1];
    let mut counts = vec![0u64; h];
    let mut fresh = vec![0u64; h];
    let mut distinct = 0u64;

    let replacements = simulate(config, |life| {
        let span = observer.overlap(life);
        if span.is_empty() {
            return Ok(());
        }
        if observer.visible_slots.is_none() {
            diff[span.start as usize] += 1;
            diff[span.end as usize] -= 1;
            fresh[span.start as usize] += 1;
            distinct += 1;
            return Ok(());
        }
        let mut first = None;
        for j in span.filter(|&j| observer.sees(life.slot, j)) {
            counts[j as usize] += 1;
            first.get_or_insert(j);
        }
        if let Some(j) = first {
            fresh[j as usize] += 1;
            distinct += 1;
        }
        Ok(())
    })?;

    if observer.visible_slots.is_none() {
        let mut live = 0i64;
        for (c, d) in counts.iter_mut().zip(&diff) {
            live += d;
            *c = live as u64;
        }
    }
    let cumulative: Vec<f64> = fresh
        .iter()
        .scan(0u64, |acc, &x| {
            *acc += x;
            Some(*acc as f64)
        })
        .collect();

    Ok(SimResult {
        interval_counts: CountSeries::new(
            FIRST_INTERVAL,
            config.interval_width,
            counts.into_iter().map(|c| c as f64).collect(),
        )?,
        cumulative_counts: CumulativeSeries::new(FIRST_INTERVAL, cumulative)?,
        total_replacements: replacements,
        distinct_ids: distinct,
    })
}

/// Runs independent simulations in parallel; results keep the input order.
pub fn run_batch(configs: &[SimConfig]) -> Vec<Result<SimResult>> {
    configs.par_iter().map(run_sim).collect()
}

/// Renders an identifier as a fixed-width decimal string.
pub fn format_id(id: u64) -> String {
    let mut s = String::with_capacity(ID_WIDTH);
    write!(s, "{id:0width$}", width = ID_WIDTH).expect("writing to a String");
    s
}

/// Writes one record per (individual, observed interval) with a timestamp
/// inside the overlap, in the model's time units from origin 0. Counting the
/// records with width `interval_width` and origin 0 reproduces [`run_sim`].
pub fn emit_events(config: &SimConfig, sink: &mut dyn EventSink) -> Result<u64> {
    let observer = Observer::new(config);
    let width = config.interval_width;
    let mut written = 0u64;
    simulate(config, |life| {
        let span = observer.overlap(life);
        if span.is_empty() {
            return Ok(());
        }
        let id = format_id(life.id);
        for j in span.filter(|&j| observer.sees(life.slot, j)) {
            let timestamp = stamp_inside(life, j, width);
            sink.write_event(&EventRecord::new_unchecked(timestamp, id.clone()))?;
            written += 1;
        }
        Ok(())
    })?;
    sink.finish()?;
    Ok(written)
}

/// A time-unit timestamp inside both the lifespan and interval `j` that the
/// ingest bucketing maps back to `j`.
fn stamp_inside(life: &Lifespan, j: u32, width: f64) -> f64 {
    let lo = life.birth.max(f64::from(j));
    let hi = life.death.min(f64::from(j + 1));
    let target = i64::from(j);
    for frac in [0.5, 0.25, 0.75, 0.1, 0.9, 0.01, 0.99] {
        let ts = (lo + frac * (hi - lo)) * width;
        if bucket_of(ts, 0.0, width) == target {
            return ts;
        }
    }
    // Sub-ulp overlap; fall back to the interval midpoint.
    (f64::from(j) + 0.5) * width
}

/// `(j, C_j, Q_j)` rows of a result.
pub fn rows(result: &SimResult) -> impl Iterator<Item = (i64, f64, f64)> + '_ {
    let m = result.interval_counts.start_index();
    result
        .interval_counts
        .counts()
        .iter()
        .zip(result.cumulative_counts.values())
        .enumerate()
        .map(move |(k, (&c, &q))| (m + k as i64, c, q))
}
