//! Fractal scaling of unique-population counts over time.
//!
//! Counts of distinct individuals taken over consecutive intervals combine
//! into a long-span count through the L^p-norm, and the exponent `p` is the
//! reciprocal of the fractal dimension `r` of counts versus time. This crate
//! provides:
//!
//! * [`norm`]: the L^p combination kernel and the `c1 t^r` power law;
//! * [`pareto`]: the Pareto lifetime model and its closed-form expectations;
//! * [`sim`]: a renewal simulator of a stable population with Pareto
//!   lifetimes, producing exact counts or event logs;
//! * [`ingest`] and [`formats`]: exact distinct counting of event logs;
//! * [`fit`]: the damped iterative estimator of `p`;
//! * [`forecast`]: reach forecasts and the saturation ceiling;
//! * [`plot`]: tidy plot data.

pub mod error;
pub mod fit;
pub mod forecast;
pub mod formats;
pub mod ingest;
pub mod norm;
pub mod pareto;
pub mod plot;
pub mod series;
pub mod sim;

pub use error::{Error, Result};
pub use fit::{delta_step, fit_p, initial_guess, DeltaStep, DimensionFit, FitSettings};
pub use forecast::{
    forecast_lp, forecast_scaling, saturation_ceiling, ForecastMethod, ForecastRegistry,
    ReachForecast, SaturationEstimate,
};
pub use formats::{EventFormat, EventSink, FormatRegistry};
pub use ingest::{ingest, rebucket, EventIndex, EventRecord, Ingestor, Origin, ParseMode};
pub use norm::{lp_combine, lp_combine_partial, scaling_law, CountVector, NormExponent};
pub use pareto::ParetoLifetimeModel;
pub use series::{CountSeries, CumulativeSeries};
pub use sim::{emit_events, run_batch, run_sim, SimConfig, SimResult};
