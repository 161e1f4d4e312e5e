//! Exponential smoothing with error correction, ETS(A,N,N|EC), for the
//! location of a truncated-normal forecast density, optionally paired with a
//! second smoother on the log innovation variance.
//!
//! The level smoother is the MMSE forecaster of an ARIMA(1,1,1) with AR
//! coefficient `phi_s` and MA coefficient `alpha - 1`; the variance smoother
//! is an EGARCH(2,1) recursion. Both identifications drive the multi-step
//! forecasts.
//!
//! The log-variance smoother runs relative to a fixed reference variance
//! (the innovation variance of the level-only fit on the same data), so a
//! smoothed value of 0 means "typical variance for this series".

use serde::{Deserialize, Serialize};

use crate::arima::FitReport;
use crate::error::{Error, Result};
use crate::optimize::{self, OptOptions, OptProblem, ParamTransform};
use crate::stats::MEAN_ABS_NORMAL;
use crate::truncnorm::TruncNorm;

/// Residuals excluded from the training likelihood.
pub const DEFAULT_BURN_IN: usize = 96;

/// Largest magnitude a log-variance forecast may reach.
pub const LOG_VAR_CLAMP: f64 = 50.0;

/// Level smoother: `S_t = α y_t + (1-α) S_{t-1}` with forecast
/// `S_t + φ_s (y_t - S_{t-1})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtsLevelState {
    pub alpha: f64,
    pub phi_s: f64,
    /// Smoothed level `S_t`.
    pub level: f64,
    /// `S_{t-1}`.
    pub prev_level: f64,
    /// `y_t`.
    pub prev_y: f64,
    pub n_seen: usize,
}

impl EtsLevelState {
    pub fn new(alpha: f64, phi_s: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("alpha {alpha} outside (0,1]")));
        }
        if !(phi_s.abs() < 1.0) {
            return Err(Error::InvalidParameter(format!("phi_s {phi_s} outside (-1,1)")));
        }
        Ok(Self {
            alpha,
            phi_s,
            level: 0.0,
            prev_level: 0.0,
            prev_y: 0.0,
            n_seen: 0,
        })
    }

    /// Absorbs one observation. The first one seeds `S_1 = y_1`.
    pub fn update(&mut self, y: f64) {
        if self.n_seen == 0 {
            self.level = y;
            self.prev_level = y;
        } else {
            self.prev_level = self.level;
            self.level = self.alpha * y + (1.0 - self.alpha) * self.level;
        }
        self.prev_y = y;
        self.n_seen += 1;
    }

    /// The correction `y_t - S_{t-1}`.
    fn correction(&self) -> f64 {
        self.prev_y - self.prev_level
    }

    pub fn one_step(&self) -> f64 {
        self.level + self.phi_s * self.correction()
    }

    /// Location forecasts for horizons `1..=h`.
    pub fn forecast(&self, h: usize) -> Vec<f64> {
        let (a, p) = (self.alpha, self.phi_s);
        let c = self.correction();
        (1..=h)
            .map(|step| self.level + a * p * geometric_sum(p, step - 1) * c + p.powi(step as i32) * c)
            .collect()
    }
}

/// `1 + φ + … + φ^{k-1}`, i.e. `(1 - φ^k)/(1 - φ)`.
fn geometric_sum(phi: f64, k: usize) -> f64 {
    (1.0 - phi.powi(k as i32)) / (1.0 - phi)
}

pub fn ets_update_level(state: &EtsLevelState, y: f64) -> Result<EtsLevelState> {
    crate::transforms::check_open_unit(y)?;
    let mut next = *state;
    next.update(y);
    Ok(next)
}

pub fn ets_forecast_level(state: &EtsLevelState, h: usize) -> Result<Vec<f64>> {
    if state.n_seen < 2 {
        return Err(Error::NotEnoughData { needed: 2, got: state.n_seen });
    }
    Ok(state.forecast(h))
}

/// `Ω_h = φ^h + α(1-φ^h)/(1-φ)`, `Ω_0 = 1`.
pub fn omega_weights(alpha: f64, phi_s: f64, h: usize) -> Vec<f64> {
    (0..h.max(1))
        .map(|k| {
            if k == 0 {
                1.0
            } else {
                phi_s.powi(k as i32) + alpha * geometric_sum(phi_s, k)
            }
        })
        .collect()
}

/// Variance of the `h`-step location forecast with constant innovation
/// variance: `s²_ε Σ_{j=1}^h Ω²_{h-j}`.
pub fn ets_variance_h(alpha: f64, phi_s: f64, s2_eps: f64, h: usize) -> Result<f64> {
    if !(phi_s.abs() < 1.0) || !(s2_eps > 0.0) || h == 0 {
        return Err(Error::InvalidParameter("need |phi_s| < 1, s2_eps > 0, h >= 1".into()));
    }
    let w = omega_weights(alpha, phi_s, h);
    Ok(s2_eps * w.iter().map(|o| o * o).sum::<f64>())
}

/// Combines innovation-variance forecasts `σ²_{t+j|t}` into location
/// forecast variances for every horizon.
pub fn combine_variances(alpha: f64, phi_s: f64, innovation: &[f64]) -> Vec<f64> {
    let h = innovation.len();
    let w2: Vec<f64> = omega_weights(alpha, phi_s, h).iter().map(|o| o * o).collect();
    (1..=h)
        .map(|hh| (1..=hh).map(|j| w2[hh - j] * innovation[j - 1]).sum())
        .collect()
}

/// `θ(|e| - E|e|)` for standard normal `e`.
pub fn g_func(e: f64, theta_v: f64) -> f64 {
    theta_v * (e.abs() - MEAN_ABS_NORMAL)
}

/// Log-variance smoother:
/// `log V_t = γ g(e_t) + (1-γ) log V_{t-1}` with one-step forecast
/// `log V_t + φ_v (g(e_t) - log V_{t-1})`, all relative to `ref_log_var`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtsVarState {
    pub gamma: f64,
    pub phi_v: f64,
    pub theta_v: f64,
    /// `log V_t`.
    pub log_v: f64,
    /// `g(e_t)` from the latest update.
    pub prev_g: f64,
    /// `log V_{t-1}`.
    pub prev_log_v: f64,
    /// Log of the reference variance the smoother is centered on.
    pub ref_log_var: f64,
}

impl EtsVarState {
    /// Starts from `log V = init_log_v`, with the previous term and `g`
    /// chosen so the first forecast equals the starting level.
    pub fn new(gamma: f64, phi_v: f64, theta_v: f64, ref_log_var: f64, init_log_v: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::InvalidParameter(format!("gamma {gamma} outside (0,1]")));
        }
        if !(phi_v.abs() < 1.0) {
            return Err(Error::InvalidParameter(format!("phi_v {phi_v} outside (-1,1)")));
        }
        if !(theta_v > 0.0) || !ref_log_var.is_finite() || !init_log_v.is_finite() {
            return Err(Error::InvalidParameter("theta_v must be positive and levels finite".into()));
        }
        Ok(Self {
            gamma,
            phi_v,
            theta_v,
            log_v: init_log_v,
            prev_g: init_log_v,
            prev_log_v: init_log_v,
            ref_log_var,
        })
    }

    /// Relative log one-step variance forecast.
    pub fn one_step_log(&self) -> f64 {
        (self.log_v + self.phi_v * (self.prev_g - self.prev_log_v)).clamp(-LOG_VAR_CLAMP, LOG_VAR_CLAMP)
    }

    /// One-step innovation variance forecast.
    pub fn one_step_var(&self) -> f64 {
        (self.ref_log_var + self.one_step_log()).exp()
    }

    /// Absorbs a standardized innovation.
    pub fn update(&mut self, e: f64) {
        let g = g_func(e, self.theta_v);
        self.prev_log_v = self.log_v;
        self.prev_g = g;
        self.log_v = self.gamma * g + (1.0 - self.gamma) * self.log_v;
    }

    /// Relative log innovation-variance forecasts for `j = 1..=h`, future
    /// `g` replaced by its mean 0. Also reports whether any value hit the
    /// clamp.
    pub fn forecast_log(&self, h: usize) -> (Vec<f64>, bool) {
        let mut out = Vec::with_capacity(h);
        let raw1 = self.log_v + self.phi_v * (self.prev_g - self.prev_log_v);
        let mut clamped = raw1.abs() > LOG_VAR_CLAMP;
        let mut cur = raw1.clamp(-LOG_VAR_CLAMP, LOG_VAR_CLAMP);
        for j in 1..=h {
            if j == 2 {
                cur = (1.0 - self.gamma) * cur - self.phi_v * self.prev_g;
            } else if j > 2 {
                cur *= 1.0 - self.gamma;
            }
            if cur.abs() > LOG_VAR_CLAMP {
                clamped = true;
                cur = cur.clamp(-LOG_VAR_CLAMP, LOG_VAR_CLAMP);
            }
            out.push(cur);
        }
        (out, clamped)
    }
}

pub fn ets_update_var(state: &EtsVarState, e: f64) -> EtsVarState {
    let mut next = *state;
    next.update(e);
    next
}

/// Innovation-variance forecasts `σ²_{t+j|t}` for `j = 1..=h` and whether
/// the log-variance clamp was hit.
pub fn egarch_forecast_var(state: &EtsVarState, h: usize) -> (Vec<f64>, bool) {
    let (logs, clamped) = state.forecast_log(h);
    (logs.into_iter().map(|l| (state.ref_log_var + l).exp()).collect(), clamped)
}

/// Variance-smoother parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarSmootherParams {
    pub gamma: f64,
    pub phi_v: f64,
    pub theta_v: f64,
    pub ref_log_var: f64,
    #[serde(default)]
    pub init_log_v: f64,
}

/// Parameters of either ETS forecaster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtsParams {
    pub alpha: f64,
    pub phi_s: f64,
    /// Constant innovation variance; used when `variance` is absent.
    pub s2_eps: f64,
    pub variance: Option<VarSmootherParams>,
}

/// Running filter over observations: the pair of smoother states plus the
/// constant innovation variance when there is no variance smoother.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtsFilter {
    pub level: EtsLevelState,
    pub var: Option<EtsVarState>,
    pub s2_eps: f64,
}

/// One-step predictive parameters issued before an observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneStep {
    pub loc: f64,
    pub scale2: f64,
}

impl EtsFilter {
    pub fn new(params: &EtsParams) -> Result<Self> {
        let level = EtsLevelState::new(params.alpha, params.phi_s)?;
        let var = match params.variance {
            Some(v) => Some(EtsVarState::new(v.gamma, v.phi_v, v.theta_v, v.ref_log_var, v.init_log_v)?),
            None => {
                if !(params.s2_eps > 0.0) {
                    return Err(Error::InvalidParameter("s2_eps must be positive".into()));
                }
                None
            }
        };
        Ok(Self {
            level,
            var,
            s2_eps: params.s2_eps,
        })
    }

    /// Predictive location and scale² for the next observation, if any
    /// observation has been absorbed.
    pub fn one_step(&self) -> Option<OneStep> {
        if self.level.n_seen == 0 {
            return None;
        }
        let scale2 = match &self.var {
            Some(v) => v.one_step_var(),
            None => self.s2_eps,
        };
        Some(OneStep {
            loc: self.level.one_step(),
            scale2,
        })
    }

    /// Absorbs `y` and returns the one-step prediction that was in force.
    pub fn step(&mut self, y: f64) -> Option<OneStep> {
        let pred = self.one_step();
        if let (Some(p), Some(v)) = (pred, self.var.as_mut()) {
            v.update((y - p.loc) / p.scale2.sqrt());
        }
        self.level.update(y);
        pred
    }

    /// Location and scale² for horizons `1..=h`.
    pub fn forecast(&self, h: usize) -> (Vec<f64>, Vec<f64>) {
        let locs = self.level.forecast(h);
        let innovation = match &self.var {
            Some(v) => egarch_forecast_var(v, h).0,
            None => vec![self.s2_eps; h],
        };
        (locs, combine_variances(self.level.alpha, self.level.phi_s, &innovation))
    }
}

/// Truncated-normal forecast densities for horizons `1..=h`.
pub fn forecast_density_ets(filter: &EtsFilter, h: usize) -> Result<Vec<TruncNorm>> {
    if filter.level.n_seen < 2 {
        return Err(Error::NotEnoughData { needed: 2, got: filter.level.n_seen });
    }
    let (locs, vars) = filter.forecast(h);
    locs.into_iter().zip(vars).map(|(l, v)| TruncNorm::new(l, v)).collect()
}

/// Truncated-normal log-likelihood of one-step predictions after `burn_in`
/// residuals; `-∞` if a predictive density is degenerate.
pub fn ets_loglik(params: &EtsParams, y: &[f64], burn_in: usize) -> f64 {
    let Ok(mut f) = EtsFilter::new(params) else {
        return f64::NEG_INFINITY;
    };
    let mut ll = 0.0;
    for (t, &v) in y.iter().enumerate() {
        if let Some(p) = f.step(v) {
            if t > burn_in {
                match TruncNorm::new(p.loc, p.scale2) {
                    Ok(d) => ll += d.ln_pdf(v),
                    Err(_) => return f64::NEG_INFINITY,
                }
            }
        }
    }
    if ll.is_nan() {
        f64::NEG_INFINITY
    } else {
        ll
    }
}

/// Fit settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtsFitOptions {
    pub burn_in: usize,
    /// Starting relative log-variance of the variance smoother.
    pub init_log_v: f64,
    pub optimizer: OptOptions,
}

impl Default for EtsFitOptions {
    fn default() -> Self {
        Self {
            burn_in: DEFAULT_BURN_IN,
            init_log_v: 0.0,
            optimizer: OptOptions {
                tol: 1e-7,
                max_iter: 5000,
                halton_starts: 2,
                restarts: 2,
            },
        }
    }
}

/// Fitted ETS model: parameters, filter state after the training sample, and
/// fit diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtsFit {
    pub params: EtsParams,
    pub filter: EtsFilter,
    pub report: FitReport,
}

impl EtsFit {
    pub fn level_state(&self) -> EtsLevelState {
        self.filter.level
    }

    pub fn var_state(&self) -> Option<EtsVarState> {
        self.filter.var
    }
}

const MIN_TRAIN: usize = 500;

/// Maximizes the one-step truncated-normal likelihood over
/// `(α, φ_s, s²_ε)` or, with the variance smoother, `(α, φ_s, γ, φ_v, θ_v)`.
pub fn fit_ets(y: &[f64], with_variance: bool) -> Result<EtsFit> {
    fit_ets_with(y, with_variance, &EtsFitOptions::default())
}

pub fn fit_ets_with(y: &[f64], with_variance: bool, opts: &EtsFitOptions) -> Result<EtsFit> {
    if y.len() < MIN_TRAIN.max(opts.burn_in + 2) {
        return Err(Error::NotEnoughData {
            needed: MIN_TRAIN.max(opts.burn_in + 2),
            got: y.len(),
        });
    }
    crate::transforms::check_open_unit(y.iter().copied().fold(0.5, f64::min))?;
    crate::transforms::check_open_unit(y.iter().copied().fold(0.5, f64::max))?;
    let diffs: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let diff_var = diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64;
    if !(diff_var > 0.0) {
        return Err(Error::Degenerate("constant series has a degenerate likelihood"));
    }
    let unit = ParamTransform::Interval { lo: 0.0, hi: 1.0 };
    let sym = ParamTransform::Interval { lo: -1.0, hi: 1.0 };
    // The variance smoother is centered on the innovation variance of the
    // level-only fit, which also seeds the level parameters.
    let level_fit = if with_variance {
        Some(fit_ets_with(y, false, opts)?)
    } else {
        None
    };
    let ref_var = level_fit.map_or(diff_var, |f| f.params.s2_eps);
    let ref_log_var = ref_var.ln();
    let decode = |x: &[f64]| -> EtsParams {
        if with_variance {
            EtsParams {
                alpha: x[0],
                phi_s: x[1],
                s2_eps: ref_var,
                variance: Some(VarSmootherParams {
                    gamma: x[2],
                    phi_v: x[3],
                    theta_v: x[4],
                    ref_log_var,
                    init_log_v: opts.init_log_v,
                }),
            }
        } else {
            EtsParams {
                alpha: x[0],
                phi_s: x[1],
                s2_eps: x[2],
                variance: None,
            }
        }
    };
    let (transforms, starts) = match level_fit {
        Some(f) => {
            let (a, p) = (f.params.alpha, f.params.phi_s);
            (
                vec![unit, sym, unit, sym, ParamTransform::Positive],
                vec![vec![a, p, 0.05, 0.0, 1.0], vec![a, p, 0.2, 0.3, 0.5]],
            )
        }
        None => (
            vec![unit, sym, ParamTransform::Positive],
            vec![vec![0.9, 0.3, diff_var], vec![0.5, 0.0, diff_var]],
        ),
    };
    let problem = OptProblem {
        objective: |x: &[f64]| ets_loglik(&decode(x), y, opts.burn_in),
        transforms,
        starts,
    };
    let res = optimize::maximize_with(&problem, &opts.optimizer)?;
    let params = decode(&res.argmax);
    let mut filter = EtsFilter::new(&params)?;
    for &v in y {
        filter.step(v);
    }
    let n_obs = y.len() - 1 - opts.burn_in;
    let k = if with_variance { 5 } else { 3 };
    Ok(EtsFit {
        params,
        filter,
        report: FitReport::new(res.value, k, n_obs, res.converged),
    })
}
