//! Pareto lifetime distribution for a stable population.
//!
//! Lifetimes `X >= A` have density `B A^B / x^(B+1)` and CDF
//! `1 - (A/x)^B`. With `0 < B < 1` the mean lifetime is infinite.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scale `A`, shape `B` and population size `N` of a stable population with
/// Pareto-distributed lifetimes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoLifetimeModel {
    scale_a: f64,
    shape_b: f64,
    population_n: u64,
}

impl ParetoLifetimeModel {
    pub fn new(scale_a: f64, shape_b: f64, population_n: u64) -> Result<Self> {
        if !(scale_a.is_finite() && scale_a > 0.0) {
            return Err(Error::domain(format!(
                "scale A must be finite and > 0, got {scale_a}"
            )));
        }
        if !(shape_b > 0.0 && shape_b < 1.0) {
            return Err(Error::domain(format!(
                "shape B must lie in the open interval (0, 1), got {shape_b}"
            )));
        }
        if population_n == 0 {
            return Err(Error::domain("population N must be >= 1"));
        }
        Ok(ParetoLifetimeModel {
            scale_a,
            shape_b,
            population_n,
        })
    }

    pub fn scale_a(&self) -> f64 {
        self.scale_a
    }

    pub fn shape_b(&self) -> f64 {
        self.shape_b
    }

    pub fn population_n(&self) -> u64 {
        self.population_n
    }

    /// Fractal dimension `r = 1 - B` predicted for this population.
    pub fn r(&self) -> f64 {
        1.0 - self.shape_b
    }

    fn check_support(&self, x: f64) -> Result<()> {
        if x.is_nan() || x < self.scale_a {
            return Err(Error::domain(format!(
                "x = {x} lies below the scale A = {}",
                self.scale_a
            )));
        }
        Ok(())
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        self.check_support(x)?;
        let (a, b) = (self.scale_a, self.shape_b);
        Ok(b * a.powf(b) / x.powf(b + 1.0))
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        self.check_support(x)?;
        Ok(1.0 - (self.scale_a / x).powf(self.shape_b))
    }

    /// Inverse-CDF transform `A u^(-1/B)` of a uniform `u` in `(0, 1]`.
    pub fn sample_lifetime(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u <= 1.0) {
            return Err(Error::domain(format!("u must lie in (0, 1], got {u}")));
        }
        Ok(self.lifetime_unchecked(u))
    }

    #[inline]
    fn lifetime_unchecked(&self, u: f64) -> f64 {
        self.scale_a * u.powf(-1.0 / self.shape_b)
    }

    /// Draws a lifetime. The generator's `[0, 1)` output is mirrored onto
    /// `(0, 1]` so an infinite lifetime is never produced.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = 1.0 - rng.gen::<f64>();
        self.lifetime_unchecked(u)
    }

    /// Expected number of replacements over `t >= 1` unit intervals,
    /// `N B/(B+1) t^(1-B)`.
    ///
    /// This is the closed form of `∫_1^∞ N t p_X(x) / x dx` with the scale
    /// set to `1/t`; lifetimes shorter than one interval are left out of the
    /// integral rather than renormalised.
    pub fn expected_replacements(&self, t: f64) -> Result<f64> {
        check_span(t)?;
        let b = self.shape_b;
        Ok(self.population_n as f64 * b / (b + 1.0) * t.powf(1.0 - b))
    }

    /// Expected population count over `t >= 1` intervals, `N t^r`.
    pub fn expected_count(&self, t: f64) -> Result<f64> {
        check_span(t)?;
        Ok(self.population_n as f64 * t.powf(self.r()))
    }
}

fn check_span(t: f64) -> Result<()> {
    if t.is_nan() || t < 1.0 || t.is_infinite() {
        return Err(Error::domain(format!(
            "time span must be finite and >= 1, got {t}"
        )));
    }
    Ok(())
}
