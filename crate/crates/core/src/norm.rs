//! L^p-norm combination of non-negative interval counts.
//!
//! Counts from consecutive, non-overlapping intervals are combined as
//!
//! ```text
//! ||C_1, ..., C_n||_p = (C_1^p + ... + C_n^p)^(1/p)
//! ```
//!
//! With `p = 1` the counts add linearly (no individual is seen twice); as
//! `p -> inf` the norm tends to the largest count (nobody is ever replaced).
//! Because the norm of a prefix can be fed back in as a single count, a long
//! span can be folded one interval at a time with O(1) state; see
//! [`lp_combine_partial`].
//!
//! When all counts equal `C` the norm reduces to `C * n^(1/p)`, which is the
//! power law implemented by [`scaling_law`] with `r = 1/p`.
//!
//! The continuous analogue `(∫_0^t |C(s)|^p ds)^(1/p)` obeys the same scaling
//! for constant `C`; it is not implemented here since counts are always
//! gathered per interval.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent of an L^p-norm: a finite `p >= 1` or the max-norm limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NormExponent {
    Finite(f64),
    Infinity,
}

impl NormExponent {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::domain(format!(
                "norm exponent must be >= 1, got {p}"
            )));
        }
        if p.is_infinite() {
            return Ok(NormExponent::Infinity);
        }
        Ok(NormExponent::Finite(p))
    }

    pub fn value(self) -> f64 {
        match self {
            NormExponent::Finite(p) => p,
            NormExponent::Infinity => f64::INFINITY,
        }
    }
}

impl fmt::Display for NormExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormExponent::Finite(p) => write!(f, "{p}"),
            NormExponent::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for NormExponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
            return Ok(NormExponent::Infinity);
        }
        let p: f64 = s
            .parse()
            .map_err(|_| Error::domain(format!("invalid norm exponent {s:?}")))?;
        NormExponent::new(p)
    }
}

/// A validated vector of finite, non-negative counts.
#[derive(Debug, Clone, PartialEq)]
pub struct CountVector(Vec<f64>);

impl CountVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_counts(&values)?;
        Ok(CountVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for CountVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

fn check_counts(values: &[f64]) -> Result<()> {
    for (i, &c) in values.iter().enumerate() {
        if !c.is_finite() || c < 0.0 {
            return Err(Error::domain(format!(
                "count #{i} must be finite and non-negative, got {c}"
            )));
        }
    }
    Ok(())
}

/// Combines interval counts with the L^p-norm.
///
/// The sum is scaled by the largest count before exponentiation so that
/// counts around 1e8 with `p` near 20 do not overflow.
pub fn lp_combine(counts: &[f64], p: NormExponent) -> Result<f64> {
    if counts.is_empty() {
        return Err(Error::domain("cannot combine an empty count vector"));
    }
    check_counts(counts)?;
    Ok(scaled_norm(counts.iter().copied(), p))
}

/// Extends a previous [`lp_combine`] result with more counts.
///
/// `partial` must have been produced under the same exponent; this cannot be
/// checked. An empty extension returns `partial` unchanged.
pub fn lp_combine_partial(partial: f64, counts: &[f64], p: NormExponent) -> Result<f64> {
    if !partial.is_finite() || partial < 0.0 {
        return Err(Error::domain(format!(
            "partial norm must be finite and non-negative, got {partial}"
        )));
    }
    check_counts(counts)?;
    if counts.is_empty() {
        return Ok(partial);
    }
    Ok(scaled_norm(
        std::iter::once(partial).chain(counts.iter().copied()),
        p,
    ))
}

fn scaled_norm<I>(values: I, p: NormExponent) -> f64
where
    I: Iterator<Item = f64> + Clone,
{
    let max = values.clone().fold(0.0_f64, f64::max);
    let p = match p {
        NormExponent::Infinity => return max,
        NormExponent::Finite(p) => p,
    };
    if max == 0.0 {
        return 0.0;
    }
    if p == 1.0 {
        return values.sum();
    }
    let sum: f64 = values.map(|c| (c / max).powf(p)).sum();
    max * sum.powf(1.0 / p)
}

/// Power-law growth `c1 * t^r` of a count over `t` unit intervals.
pub fn scaling_law(c1: f64, r: f64, t: f64) -> Result<f64> {
    if !(c1.is_finite() && c1 >= 0.0) {
        return Err(Error::domain(format!(
            "c1 must be finite and >= 0, got {c1}"
        )));
    }
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::domain(format!("r must lie in (0, 1], got {r}")));
    }
    if t.is_nan() || t < 1.0 || t.is_infinite() {
        return Err(Error::domain(format!("t must be finite and >= 1, got {t}")));
    }
    Ok(c1 * t.powf(r))
}
