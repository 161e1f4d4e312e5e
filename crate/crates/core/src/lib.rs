//! Multi-step density forecasts for series bounded in (0,1), such as wind
//! power normalized by installed capacity.
//!
//! Two model families produce densities for every horizon up to a day ahead:
//! logistic-transformed Gaussian ARIMA–GARCH models ([`arima`]) and
//! exponential smoothing of a truncated-normal location and log-scale
//! ([`ets`]). Four reference forecasters live in [`benchmarks`], proper
//! scores and calibration diagnostics in [`scoring`], and the rolling-origin
//! evaluation in [`backtest`].

pub mod arima;
pub mod backtest;
pub mod benchmarks;
pub mod density;
pub mod error;
pub mod ets;
pub mod optimize;
pub mod scoring;
pub mod series;
pub mod sim;
pub mod stats;
pub mod transforms;
pub mod truncnorm;

pub use density::{DensityForecast, GriddedDensity};
pub use error::{Error, Result};
pub use series::{PowerSeries, SplitSpec};
pub use transforms::LogisticNormal;
pub use truncnorm::TruncNorm;
