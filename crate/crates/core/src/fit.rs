//! Estimating the norm exponent `p` (and fractal dimension `r = 1/p`) from
//! paired interval counts `C_j` and cumulative counts `Q_j`.
//!
//! For a given `p` each step `j` proposes the exponent change
//!
//! ```text
//! δ_j = ln((Q_j^p - Q_{j-1}^p) / C_j^p) / ln(2 C_j / (Q_j + Q_{j-1}))
//! ```
//!
//! that would make `Q_j^p - Q_{j-1}^p` equal `C_j^p`, with `Q_{m-1} = 0`.
//! The mean `δ` over the usable steps drives the damped update
//! `p <- p + damping * δ`. A step is usable only when
//! `0 < 1.6 C_j < (Q_j + Q_{j-1}) / 2` and `Q_j > Q_{j-1}`; the first
//! condition keeps the denominator away from zero, the second keeps the
//! numerator finite.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{check_aligned, geometric_mean, CountSeries, CumulativeSeries};

pub const DEFAULT_DAMPING: f64 = 0.632;
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_ITERATIONS: u32 = 200;
pub const MIN_P: f64 = 1.0;
pub const MAX_P: f64 = 50.0;

const GUESS_MIN: f64 = 1.0001;
const GUESS_MAX: f64 = 20.0;
const EXCLUSION_FACTOR: f64 = 1.6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionFit {
    pub p: f64,
    pub r: f64,
    pub sigma: f64,
    pub iterations: u32,
    pub included_steps: usize,
    pub excluded_steps: usize,
    pub converged: bool,
}

impl DimensionFit {
    /// A fit for a known exponent, with no iteration history.
    pub fn from_p(p: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::domain(format!("p must be finite and >= 1, got {p}")));
        }
        Ok(DimensionFit {
            p,
            r: 1.0 / p,
            sigma: 0.0,
            iterations: 0,
            included_steps: 0,
            excluded_steps: 0,
            converged: true,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let fit: DimensionFit = serde_json::from_str(text)?;
        if !(fit.p.is_finite() && fit.p >= 1.0) || (fit.r * fit.p - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!(
                "fit report is inconsistent: p = {}, r = {}",
                fit.p, fit.r
            )));
        }
        Ok(fit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSettings {
    pub damping: f64,
    pub tolerance: f64,
    pub max_iterations: u32,
    pub initial_p: Option<f64>,
}

impl Default for FitSettings {
    fn default() -> Self {
        FitSettings {
            damping: DEFAULT_DAMPING,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            initial_p: None,
        }
    }
}

impl FitSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::domain(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::domain(format!(
                "tolerance must be > 0, got {}",
                self.tolerance
            )));
        }
        if let Some(p) = self.initial_p {
            if !(p.is_finite() && p >= MIN_P) {
                return Err(Error::domain(format!(
                    "initial p must be finite and >= 1, got {p}"
                )));
            }
        }
        Ok(())
    }
}

/// Mean exponent correction at one `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaStep {
    pub delta: f64,
    pub included: usize,
    /// `δ_j` for each interval in index order; `None` where excluded.
    pub per_step: Vec<Option<f64>>,
}

/// The p-independent parts of one usable step.
#[derive(Debug, Clone, Copy)]
struct StepTerms {
    /// ln(Q_j / C_j)
    log_q_over_c: f64,
    /// ln(Q_{j-1} / Q_j), `-inf` when Q_{j-1} = 0
    log_prev_ratio: f64,
    /// ln(2 C_j / (Q_j + Q_{j-1}))
    log_denominator: f64,
}

impl StepTerms {
    /// ln((Q_j^p - Q_{j-1}^p) / C_j^p), computed as
    /// p ln(Q_j/C_j) + ln(1 - (Q_{j-1}/Q_j)^p) to avoid cancellation.
    fn log_residual(&self, p: f64) -> f64 {
        p * self.log_q_over_c + (-(p * self.log_prev_ratio).exp_m1()).ln()
    }

    fn delta(&self, p: f64) -> f64 {
        self.log_residual(p) / self.log_denominator
    }
}

#[derive(Debug, Clone)]
struct Steps {
    /// Index into the series for each usable step.
    positions: Vec<usize>,
    terms: Vec<StepTerms>,
    total: usize,
}

impl Steps {
    fn prepare(counts: &CountSeries, cumulative: &CumulativeSeries) -> Result<Self> {
        check_aligned(counts, cumulative)?;
        let mut positions = Vec::new();
        let mut terms = Vec::new();
        let mut prev = 0.0;
        for (k, (&c, &q)) in counts.counts().iter().zip(cumulative.values()).enumerate() {
            if q < prev {
                return Err(Error::domain(format!(
                    "cumulative count decreases at interval {}",
                    counts.start_index() + k as i64
                )));
            }
            let mid = (q + prev) / 2.0;
            if c > 0.0 && EXCLUSION_FACTOR * c < mid && q > prev {
                positions.push(k);
                terms.push(StepTerms {
                    log_q_over_c: (q / c).ln(),
                    log_prev_ratio: (prev / q).ln(),
                    log_denominator: (c / mid).ln(),
                });
            }
            prev = q;
        }
        if terms.is_empty() {
            return Err(Error::FitInfeasible(format!(
                "none of the {} steps satisfies 0 < 1.6 C_j < (Q_j + Q_(j-1))/2 with Q_j > Q_(j-1)",
                counts.len()
            )));
        }
        Ok(Steps {
            positions,
            terms,
            total: counts.len(),
        })
    }

    fn mean_delta(&self, p: f64) -> f64 {
        let sum: f64 = self.terms.iter().map(|t| t.delta(p)).sum();
        sum / self.terms.len() as f64
    }

    fn rms_delta(&self, p: f64) -> f64 {
        let sum: f64 = self.terms.iter().map(|t| t.delta(p).powi(2)).sum();
        (sum / self.terms.len() as f64).sqrt()
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p.is_finite() && p >= MIN_P) {
        return Err(Error::domain(format!("p must be finite and >= 1, got {p}")));
    }
    Ok(())
}

/// Evaluates every step's `δ_j` at `p` and their mean over usable steps.
pub fn delta_step(
    counts: &CountSeries,
    cumulative: &CumulativeSeries,
    p: f64,
) -> Result<DeltaStep> {
    check_p(p)?;
    let steps = Steps::prepare(counts, cumulative)?;
    let mut per_step = vec![None; steps.total];
    for (&k, t) in steps.positions.iter().zip(&steps.terms) {
        per_step[k] = Some(t.delta(p));
    }
    Ok(DeltaStep {
        delta: steps.mean_delta(p),
        included: steps.terms.len(),
        per_step,
    })
}

/// Starting exponent from inverting `Q_n ≈ G t^(1/p)`, where `G` is the
/// geometric mean of the positive interval counts and `t` the number of
/// intervals. Clamped to `[1.0001, 20]`.
pub fn initial_guess(counts: &CountSeries, cumulative: &CumulativeSeries) -> Result<f64> {
    check_aligned(counts, cumulative)?;
    let t = counts.len();
    if t < 2 {
        return Err(Error::domain(format!("need at least 2 intervals, got {t}")));
    }
    let g = geometric_mean(counts.counts())
        .ok_or_else(|| Error::domain("no positive interval counts"))?;
    let q_n = cumulative.last().expect("length checked above");
    if (q_n - g).abs() <= 1e-12 * g {
        // nobody new ever arrives: the max-norm limit
        return Ok(GUESS_MAX);
    }
    if q_n < g {
        return Ok(GUESS_MIN);
    }
    Ok(((t as f64).ln() / (q_n / g).ln()).clamp(GUESS_MIN, GUESS_MAX))
}

/// Fits `p` by damped fixed-point iteration on the mean step correction.
///
/// Non-convergence is reported through `converged = false`, not an error.
/// The update is clamped to `[1, 50]`; a result pinned by the clamp is
/// never reported as converged.
pub fn fit_p(
    counts: &CountSeries,
    cumulative: &CumulativeSeries,
    settings: &FitSettings,
) -> Result<DimensionFit> {
    settings.validate()?;
    let steps = Steps::prepare(counts, cumulative)?;
    let mut p = match settings.initial_p {
        Some(p) => p,
        None => initial_guess(counts, cumulative)?,
    }
    .clamp(MIN_P, MAX_P);

    let mut iterations = 0;
    let mut converged = false;
    let mut clamped = false;
    loop {
        let delta = steps.mean_delta(p);
        if !delta.is_finite() {
            break;
        }
        if delta.abs() < settings.tolerance {
            converged = !clamped;
            break;
        }
        if iterations >= settings.max_iterations {
            break;
        }
        let next = p + settings.damping * delta;
        let bounded = next.clamp(MIN_P, MAX_P);
        clamped = bounded != next;
        p = bounded;
        iterations += 1;
    }

    let sigma = steps.rms_delta(p);
    Ok(DimensionFit {
        p,
        r: 1.0 / p,
        sigma,
        iterations,
        included_steps: steps.terms.len(),
        excluded_steps: steps.total - steps.terms.len(),
        converged,
    })
}
