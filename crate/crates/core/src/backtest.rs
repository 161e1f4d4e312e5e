//! Rolling-origin evaluation: fit each forecaster on the training window,
//! issue densities for horizons `1..=H` from every origin, score them against
//! the test values and aggregate per horizon.
//!
//! For each horizon `h` the targets are exactly the `test_len` test values,
//! so origins run from `train_len - H` to the second-to-last test index and
//! every horizon is averaged over the same observations. Parameters come
//! from the training fit (or the latest refit); states only ever use data up
//! to the origin.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::arima::{self, ArimaGarchModel, ArimaGarchSpec, FilterOutput, FitReport};
use crate::benchmarks::{self, EwmaOptions, LambdaFit};
use crate::density::{DensityForecast, GriddedDensity};
use crate::error::{Error, Result};
use crate::ets::{self, EtsFilter, EtsFit};
use crate::scoring::{self, CellScore, CrpsTable, PitDiagnostics, ScoreReport};
use crate::series::{PowerSeries, SplitSpec, DEFAULT_CLAMP_EPS};
use crate::sim::{self, SimSpec};
use crate::transforms::{logit, LogisticNormal};
use crate::truncnorm::TruncNorm;

/// Maximum forecast horizon: one day of 15-minute steps.
pub const DEFAULT_HORIZONS: usize = 96;
/// Window of the realized variance used to pick the top-decile origins.
pub const REALIZED_VARIANCE_WINDOW: usize = 48;
/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "WINDCAST_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecasterId {
    Persistence,
    Constant,
    Climatology,
    Ewma,
    Arima,
    ArimaGarch,
    /// Level smoother with constant innovation variance.
    EtsAnnEc,
    /// Level smoother plus log-variance smoother.
    EtsAnnEc2,
}

impl ForecasterId {
    pub const ALL: [ForecasterId; 8] = [
        ForecasterId::Persistence,
        ForecasterId::Constant,
        ForecasterId::Climatology,
        ForecasterId::Ewma,
        ForecasterId::Arima,
        ForecasterId::ArimaGarch,
        ForecasterId::EtsAnnEc,
        ForecasterId::EtsAnnEc2,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ForecasterId::Persistence => "persistence",
            ForecasterId::Constant => "constant",
            ForecasterId::Climatology => "climatology",
            ForecasterId::Ewma => "ewma",
            ForecasterId::Arima => "arima",
            ForecasterId::ArimaGarch => "arima_garch",
            ForecasterId::EtsAnnEc => "ets_ann_ec",
            ForecasterId::EtsAnnEc2 => "ets_ann_ec2",
        }
    }

    /// One density serves every horizon.
    pub fn horizon_invariant(&self) -> bool {
        matches!(
            self,
            ForecasterId::Persistence | ForecasterId::Constant | ForecasterId::Climatology | ForecasterId::Ewma
        )
    }
}

impl fmt::Display for ForecasterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ForecasterId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::UnknownForecaster(s.to_string()))
    }
}

/// Settings shared by the forecaster fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForecasterOptions {
    pub persistence_window: usize,
    /// Grid of the climatology density.
    pub climatology_grid: usize,
    pub ewma: EwmaOptions,
    /// Fixed smoothing parameter; fitted on the training window when absent.
    pub ewma_lambda: Option<f64>,
    /// BIC search grids; p, q in 0..=4 with (r,s) = (0,0) and (1,1) by default.
    pub arima_grid: Option<Vec<ArimaGarchSpec>>,
    pub arima_garch_grid: Option<Vec<ArimaGarchSpec>>,
    pub ets_burn_in: usize,
}

impl Default for ForecasterOptions {
    fn default() -> Self {
        Self {
            persistence_window: benchmarks::DEFAULT_PERSISTENCE_WINDOW,
            climatology_grid: benchmarks::DEFAULT_GRID,
            ewma: EwmaOptions::default(),
            ewma_lambda: None,
            arima_grid: None,
            arima_garch_grid: None,
            ets_burn_in: ets::DEFAULT_BURN_IN,
        }
    }
}

impl ForecasterOptions {
    fn grid(&self, id: ForecasterId) -> Vec<ArimaGarchSpec> {
        match id {
            ForecasterId::ArimaGarch => self
                .arima_garch_grid
                .clone()
                .unwrap_or_else(|| ArimaGarchSpec::default_grid(&[(1, 1)])),
            _ => self
                .arima_grid
                .clone()
                .unwrap_or_else(|| ArimaGarchSpec::default_grid(&[(0, 0)])),
        }
    }
}

/// Where a backtest gets its series when run from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DataSource {
    /// CSV with `timestamp,power_mw` (needs `capacity`) or `timestamp,power_norm`;
    /// a relative path is resolved against the config file's directory.
    Csv { path: PathBuf, capacity: Option<f64> },
    /// Simulated series; the config seed replaces the spec's seed.
    Simulate { spec: SimSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    #[serde(default)]
    pub data: Option<DataSource>,
    pub forecasters: Vec<ForecasterId>,
    pub split: SplitSpec,
    #[serde(default = "default_horizons")]
    pub horizons: usize,
    /// Refit every this many test origins on the expanding window; never when absent.
    #[serde(default)]
    pub refit_interval: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_clamp_eps")]
    pub clamp_eps: f64,
    #[serde(default)]
    pub options: ForecasterOptions,
    /// Keep every origin's densities for `origins_<id>.jsonl`.
    #[serde(default)]
    pub dump_origins: bool,
}

fn default_horizons() -> usize {
    DEFAULT_HORIZONS
}

fn default_clamp_eps() -> f64 {
    DEFAULT_CLAMP_EPS
}

impl BacktestConfig {
    pub fn new(forecasters: Vec<ForecasterId>, split: SplitSpec) -> Self {
        Self {
            data: None,
            forecasters,
            split,
            horizons: DEFAULT_HORIZONS,
            refit_interval: None,
            seed: 0,
            clamp_eps: DEFAULT_CLAMP_EPS,
            options: ForecasterOptions::default(),
            dump_origins: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn validate(&self, series_len: usize) -> Result<()> {
        if self.horizons == 0 {
            return Err(Error::InvalidParameter("horizons must be at least 1".into()));
        }
        self.split.validate(series_len)?;
        if self.split.train_len <= self.horizons {
            return Err(Error::InvalidParameter(format!(
                "train_len {} must exceed the horizon count {}",
                self.split.train_len, self.horizons
            )));
        }
        if self.refit_interval == Some(0) {
            return Err(Error::InvalidParameter("refit_interval must be positive".into()));
        }
        Ok(())
    }

    /// SHA-256 of the config's JSON encoding, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Loads the configured series; `base_dir` anchors relative CSV paths.
    pub fn load_series(&self, base_dir: &Path) -> Result<PowerSeries> {
        match &self.data {
            None => Err(Error::InvalidParameter("config has no data source".into())),
            Some(DataSource::Csv { path, capacity }) => {
                let path = if path.is_relative() { base_dir.join(path) } else { path.clone() };
                let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
                crate::series::read_csv(file)?.into_series(*capacity, self.clamp_eps)
            }
            Some(DataSource::Simulate { spec }) => {
                let spec = SimSpec { seed: self.seed, ..spec.clone() };
                let path = sim::simulate_path(&spec)?;
                PowerSeries::from_normalized(path.y, 1.0, self.clamp_eps)
            }
        }
    }
}

/// A forecaster after fitting, ready to issue densities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FittedModel {
    Persistence {
        window: usize,
    },
    Constant {
        density: TruncNorm,
    },
    Climatology {
        density: Arc<GriddedDensity>,
    },
    Ewma {
        lambda: f64,
        /// Present when `lambda` was estimated.
        fit: Option<LambdaFit>,
        options: EwmaOptions,
    },
    ArimaGarch {
        model: ArimaGarchModel,
        report: FitReport,
        /// Training-sample variance of the increments, reused as pre-sample variance.
        presample_var: f64,
    },
    Ets {
        fit: EtsFit,
    },
}

/// Compact description of a fit for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FitSummary {
    Persistence { window: usize },
    Constant { loc: f64, scale2: f64 },
    Climatology { grid: usize, mean: f64 },
    Ewma { lambda: f64, fit: Option<LambdaFit> },
    ArimaGarch { spec: String, params: arima::ArimaGarchParams, report: FitReport },
    Ets { params: ets::EtsParams, report: FitReport },
}

impl FittedModel {
    pub fn summary(&self) -> FitSummary {
        match self {
            FittedModel::Persistence { window } => FitSummary::Persistence { window: *window },
            FittedModel::Constant { density } => FitSummary::Constant {
                loc: density.loc(),
                scale2: density.scale2(),
            },
            FittedModel::Climatology { density } => FitSummary::Climatology {
                grid: density.grid().len(),
                mean: density.mean(),
            },
            FittedModel::Ewma { lambda, fit, .. } => FitSummary::Ewma { lambda: *lambda, fit: *fit },
            FittedModel::ArimaGarch { model, report, .. } => FitSummary::ArimaGarch {
                spec: model.spec.to_string(),
                params: model.params.clone(),
                report: *report,
            },
            FittedModel::Ets { fit } => FitSummary::Ets {
                params: fit.params,
                report: fit.report,
            },
        }
    }
}

/// Fits forecaster `id` on `train`.
pub fn fit_forecaster(id: ForecasterId, train: &[f64], opts: &ForecasterOptions) -> Result<FittedModel> {
    match id {
        ForecasterId::Persistence => {
            if opts.persistence_window == 0 {
                return Err(Error::InvalidParameter("persistence window must be positive".into()));
            }
            Ok(FittedModel::Persistence {
                window: opts.persistence_window,
            })
        }
        ForecasterId::Constant => Ok(FittedModel::Constant {
            density: benchmarks::constant_forecast(train)?,
        }),
        ForecasterId::Climatology => Ok(FittedModel::Climatology {
            density: Arc::new(benchmarks::fit_empirical(train, opts.climatology_grid)?),
        }),
        ForecasterId::Ewma => {
            let (lambda, fit) = match opts.ewma_lambda {
                Some(l) => (l, None),
                None => {
                    let f = benchmarks::fit_lambda_with(train, &opts.ewma)?;
                    (f.lambda, Some(f))
                }
            };
            if !(lambda > 0.0 && lambda < 1.0) {
                return Err(Error::InvalidParameter(format!("lambda {lambda} outside (0,1)")));
            }
            Ok(FittedModel::Ewma {
                lambda,
                fit,
                options: opts.ewma,
            })
        }
        ForecasterId::Arima | ForecasterId::ArimaGarch => {
            let z: Vec<f64> = train.iter().map(|&y| logit(y)).collect();
            let w: Vec<f64> = z.windows(2).map(|v| v[1] - v[0]).collect();
            let (spec, params, report) = arima::select_bic(&opts.grid(id), &w)?;
            Ok(FittedModel::ArimaGarch {
                model: ArimaGarchModel::new(spec, params)?,
                report,
                presample_var: arima::sample_var(&w),
            })
        }
        ForecasterId::EtsAnnEc | ForecasterId::EtsAnnEc2 => {
            let fit_opts = ets::EtsFitOptions {
                burn_in: opts.ets_burn_in,
                ..Default::default()
            };
            Ok(FittedModel::Ets {
                fit: ets::fit_ets_with(train, id == ForecasterId::EtsAnnEc2, &fit_opts)?,
            })
        }
    }
}

/// A fitted model serialized by `windcast fit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEnvelope {
    pub id: ForecasterId,
    pub train_len: usize,
    pub clamp_eps: f64,
    pub model: FittedModel,
}

/// Densities issued at one origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OriginDump {
    pub origin: usize,
    /// Horizon of the first entry of `observed`.
    pub first_horizon: usize,
    /// One density for horizon-invariant forecasters, else one per observation.
    pub densities: Vec<DensityForecast>,
    pub observed: Vec<f64>,
}

/// Per-forecaster output of a backtest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecasterResult {
    pub id: ForecasterId,
    pub fit_report: FitSummary,
    pub n_fits: usize,
    pub per_horizon: Vec<ScoreReport>,
    /// PIT diagnostics per horizon; values are kept for `h = 1` only.
    pub pit: Vec<PitDiagnostics>,
    /// One-step PIT over the origins whose realized variance is in the top decile.
    pub top_decile: Option<PitDiagnostics>,
    #[serde(skip)]
    pub origins: Vec<OriginDump>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub id: ForecasterId,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestResult {
    pub config_hash: String,
    pub forecasters: Vec<ForecasterResult>,
    pub failures: Vec<Failure>,
}

/// Runs `f` on a pool capped by `WINDCAST_THREADS` when that is set.
pub fn with_worker_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let cap = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok());
    match cap {
        Some(n) if n > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
            Ok(pool.install(f))
        }
        _ => Ok(f()),
    }
}

/// Fits, forecasts and scores every configured forecaster on `series`.
pub fn run_backtest(config: &BacktestConfig, series: &PowerSeries) -> Result<BacktestResult> {
    config.validate(series.len())?;
    let y = &series.values()[..config.split.train_len + config.split.test_len];
    with_worker_pool(|| {
        let mut forecasters = Vec::new();
        let mut failures = Vec::new();
        for &id in &config.forecasters {
            match run_forecaster(id, config, y) {
                Ok(r) => forecasters.push(r),
                Err(e) => failures.push(Failure { id, error: e.to_string() }),
            }
        }
        BacktestResult {
            config_hash: config.hash(),
            forecasters,
            failures,
        }
    })
}

/// State needed to issue densities from the origins of one fit.
enum Prepared {
    Fixed {
        density: DensityForecast,
        table: CrpsTable,
        mean: f64,
    },
    Persistence {
        window: usize,
    },
    Ewma {
        lambda: f64,
        options: EwmaOptions,
    },
    Arima {
        model: ArimaGarchModel,
        z: Vec<f64>,
        w: Vec<f64>,
        filter: FilterOutput,
    },
    Ets {
        /// Filter state after absorbing `y[first + i]`.
        snapshots: Vec<EtsFilter>,
        first: usize,
    },
}

fn prepare(model: &FittedModel, y: &[f64], first: usize, last: usize) -> Result<Prepared> {
    Ok(match model {
        FittedModel::Persistence { window } => Prepared::Persistence { window: *window },
        FittedModel::Constant { density } => fixed((*density).into())?,
        FittedModel::Climatology { density } => fixed(DensityForecast::Gridded(density.clone()))?,
        FittedModel::Ewma { lambda, options, .. } => Prepared::Ewma {
            lambda: *lambda,
            options: *options,
        },
        FittedModel::ArimaGarch {
            model, presample_var, ..
        } => {
            let z: Vec<f64> = y[..=last].iter().map(|&v| logit(v)).collect();
            let w = model.working_series(&z);
            let filter = model.filter_with_presample(&w, *presample_var);
            Prepared::Arima {
                model: model.clone(),
                z,
                w,
                filter,
            }
        }
        FittedModel::Ets { fit } => {
            let mut f = EtsFilter::new(&fit.params)?;
            let mut snapshots = Vec::with_capacity(last + 1 - first);
            for (t, &v) in y[..=last].iter().enumerate() {
                f.step(v);
                if t >= first {
                    snapshots.push(f);
                }
            }
            Prepared::Ets { snapshots, first }
        }
    })
}

fn fixed(density: DensityForecast) -> Result<Prepared> {
    Ok(Prepared::Fixed {
        table: CrpsTable::new(&density),
        mean: scoring::point_forecast(&density)?,
        density,
    })
}

enum Issued {
    Invariant(DensityForecast),
    PerHorizon(Vec<DensityForecast>),
}

impl Prepared {
    /// Densities from origin `t` for horizons `h_lo..=h_hi`.
    fn issue(&self, y: &[f64], t: usize, h_lo: usize, h_hi: usize) -> Result<Issued> {
        Ok(match self {
            Prepared::Fixed { density, .. } => Issued::Invariant(density.clone()),
            Prepared::Persistence { window } => {
                Issued::Invariant(benchmarks::persistence_forecast(&y[..=t], *window)?.into())
            }
            Prepared::Ewma { lambda, options } => Issued::Invariant(
                benchmarks::ewma_density_forecast_with(&y[..=t], *lambda, options)?
                    .density()?
                    .into(),
            ),
            Prepared::Arima { model, z, w, filter } => {
                if t == 0 {
                    return Err(Error::NotEnoughData { needed: 2, got: 1 });
                }
                let (means, vars) = model.forecast_from(z[t], w, filter, t - 1, h_hi);
                Issued::PerHorizon(
                    (h_lo..=h_hi)
                        .map(|h| LogisticNormal::new(means[h - 1], vars[h - 1]).map(Into::into))
                        .collect::<Result<_>>()?,
                )
            }
            Prepared::Ets { snapshots, first } => {
                let d = ets::forecast_density_ets(&snapshots[t - first], h_hi)?;
                Issued::PerHorizon(d[h_lo - 1..].iter().map(|&v| v.into()).collect())
            }
        })
    }

    fn score(&self, issued: &Issued, observed: &[f64]) -> Result<Vec<CellScore>> {
        match (self, issued) {
            (Prepared::Fixed { density, table, mean }, _) => score_with_table(density, table, *mean, observed),
            (_, Issued::Invariant(d)) => score_with_table(d, &CrpsTable::new(d), scoring::point_forecast(d)?, observed),
            (_, Issued::PerHorizon(ds)) => ds
                .iter()
                .zip(observed)
                .map(|(d, &v)| scoring::score_cell(d, v))
                .collect(),
        }
    }
}

fn score_with_table(d: &DensityForecast, table: &CrpsTable, mean: f64, observed: &[f64]) -> Result<Vec<CellScore>> {
    observed
        .iter()
        .map(|&v| {
            let n = scoring::nll(d, v)?;
            let f = scoring::pit(d, v)?;
            Ok(CellScore {
                error: v - mean,
                crps: table.crps(v, f),
                nll: n.value,
                pit: f,
                nll_floored: n.floored,
            })
        })
        .collect()
}

struct OriginOut {
    cells: Vec<CellScore>,
    dump: Option<OriginDump>,
}

fn run_forecaster(id: ForecasterId, config: &BacktestConfig, y: &[f64]) -> Result<ForecasterResult> {
    let train_len = config.split.train_len;
    let big_h = config.horizons;
    let last = y.len() - 1;
    let first_origin = train_len - big_h;
    // Blocks of origins sharing one fit: the training fit covers every origin
    // up to the first refit point.
    let mut starts = vec![first_origin];
    if let Some(k) = config.refit_interval {
        let mut t = train_len - 1 + k;
        while t < last {
            starts.push(t);
            t += k;
        }
    }
    let mut fits = Vec::with_capacity(starts.len());
    let mut per_h: Vec<Vec<CellScore>> = vec![Vec::with_capacity(config.split.test_len); big_h];
    let mut origins = Vec::new();
    for (b, &start) in starts.iter().enumerate() {
        let end = starts.get(b + 1).map_or(last - 1, |&s| s - 1);
        let train = if b == 0 { &y[..train_len] } else { &y[..=start] };
        let model = fit_forecaster(id, train, &config.options)?;
        let prep = prepare(&model, y, start, end)?;
        fits.push(model);
        let outs: Vec<OriginOut> = (start..=end)
            .into_par_iter()
            .map(|t| {
                let h_lo = train_len.saturating_sub(t).max(1);
                let h_hi = big_h.min(last - t);
                let issued = prep.issue(y, t, h_lo, h_hi)?;
                let observed = &y[t + h_lo..=t + h_hi];
                let cells = prep.score(&issued, observed)?;
                let dump = config.dump_origins.then(|| OriginDump {
                    origin: t,
                    first_horizon: h_lo,
                    densities: match issued {
                        Issued::Invariant(d) => vec![d],
                        Issued::PerHorizon(ds) => ds,
                    },
                    observed: observed.to_vec(),
                });
                Ok(OriginOut { cells, dump })
            })
            .collect::<Result<_>>()?;
        for (t, out) in (start..=end).zip(outs) {
            let h_lo = train_len.saturating_sub(t).max(1);
            for (k, c) in out.cells.into_iter().enumerate() {
                per_h[h_lo + k - 1].push(c);
            }
            origins.extend(out.dump);
        }
    }
    let per_horizon = per_h
        .iter()
        .enumerate()
        .map(|(i, cells)| ScoreReport::from_cells(i + 1, cells))
        .collect::<Result<Vec<_>>>()?;
    let mut pit = Vec::with_capacity(big_h);
    for (i, cells) in per_h.iter().enumerate() {
        let values: Vec<f64> = cells.iter().map(|c| c.pit).collect();
        let mut d = scoring::pit_deviations(&values)?;
        if i == 0 {
            d.pit_values = values;
        }
        pit.push(d);
    }
    // One-step cells come from origins train_len-1 ..= last-1.
    let top_decile = if train_len > REALIZED_VARIANCE_WINDOW {
        let rv = benchmarks::realized_variance(&y[..last], REALIZED_VARIANCE_WINDOW)?;
        let variances: Vec<f64> = (train_len - 1..last).map(|t| rv[t - REALIZED_VARIANCE_WINDOW]).collect();
        Some(scoring::conditional_pit_top_decile(&pit[0].pit_values, &variances)?)
    } else {
        None
    };
    Ok(ForecasterResult {
        id,
        fit_report: fits[0].summary(),
        n_fits: fits.len(),
        per_horizon,
        pit,
        top_decile,
        origins,
    })
}

/// Per-horizon reports rebuilt from a per-origin dump.
pub fn rescore_dump(dump: &[OriginDump], horizons: usize) -> Result<Vec<ScoreReport>> {
    let mut per_h: Vec<Vec<CellScore>> = vec![Vec::new(); horizons];
    for o in dump {
        for (k, &v) in o.observed.iter().enumerate() {
            let d = if o.densities.len() == 1 { &o.densities[0] } else { &o.densities[k] };
            per_h[o.first_horizon + k - 1].push(scoring::score_cell(d, v)?);
        }
    }
    per_h
        .iter()
        .enumerate()
        .map(|(i, cells)| ScoreReport::from_cells(i + 1, cells))
        .collect()
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config_hash: String,
    pub forecasters: Vec<SummaryEntry>,
    #[serde(default)]
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub id: ForecasterId,
    pub fit_report: FitSummary,
    pub n_fits: usize,
    pub per_horizon: Vec<ScoreReport>,
}

/// Contents of `pit_<id>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitReport {
    pub id: ForecasterId,
    pub per_horizon: Vec<PitDiagnostics>,
    pub top_decile: Option<PitDiagnostics>,
}

/// Writes `scores_<id>.csv`, `pit_<id>.json`, `summary.json` and, when
/// dumps were kept, `origins_<id>.jsonl`. Returns the written paths.
pub fn emit_report(result: &BacktestResult, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if result.forecasters.is_empty() {
        return Err(Error::EmptyReport);
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    for f in &result.forecasters {
        let path = out_dir.join(format!("scores_{}.csv", f.id));
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["horizon", "mae", "rmse", "crps", "nll", "n"])?;
        for r in &f.per_horizon {
            w.write_record([
                r.horizon.to_string(),
                r.mae.to_string(),
                r.rmse.to_string(),
                r.mean_crps.to_string(),
                r.mean_nll.to_string(),
                r.n.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        written.push(path);

        let pit = PitReport {
            id: f.id,
            per_horizon: f.pit.clone(),
            top_decile: f.top_decile.clone(),
        };
        written.push(write_json(&out_dir.join(format!("pit_{}.json", f.id)), &pit)?);

        if !f.origins.is_empty() {
            let path = out_dir.join(format!("origins_{}.jsonl", f.id));
            let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            let mut w = BufWriter::new(file);
            for o in &f.origins {
                serde_json::to_writer(&mut w, o)?;
                w.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
    }
    let summary = Summary {
        config_hash: result.config_hash.clone(),
        forecasters: result
            .forecasters
            .iter()
            .map(|f| SummaryEntry {
                id: f.id,
                fit_report: f.fit_report.clone(),
                n_fits: f.n_fits,
                per_horizon: f.per_horizon.clone(),
            })
            .collect(),
        failures: result.failures.clone(),
    };
    written.push(write_json(&out_dir.join("summary.json"), &summary)?);
    Ok(written)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

/// Reads `origins_<id>.jsonl`.
pub fn read_dump(path: &Path) -> Result<Vec<OriginDump>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

/// Reads `summary.json` from a report directory.
pub fn read_summary(dir: &Path) -> Result<Summary> {
    let path = dir.join("summary.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}
