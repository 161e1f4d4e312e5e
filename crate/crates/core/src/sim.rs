//! Seeded generators for the processes the forecasters are built around.
//!
//! Increments follow an ARMA recursion with constant, GARCH or EGARCH(2,1)
//! innovation variance. They are accumulated either in logistic space (then
//! mapped to (0,1)) or directly on the bounded scale, where innovations that
//! would leave the allowed band are redrawn.

use std::io::Write;

use chrono::{Duration, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::arima::{ArimaGarchParams, ArimaGarchSpec};
use crate::error::{Error, Result};
use crate::ets::g_func;
use crate::series::{PowerSeries, DEFAULT_CLAMP_EPS};
use crate::transforms::expit;

/// Redraw budget per step in bounded-direct mode.
pub const MAX_REDRAWS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SimModel {
    /// `w_t = μ + φ w_{t-1} + ε_t + θ ε_{t-1}`, `ε_t ~ N(0, σ²)`.
    Arima111 {
        phi: f64,
        theta: f64,
        sigma2: f64,
        #[serde(default)]
        mu: f64,
    },
    /// ARIMA(1,1,1) increments with log-variance
    /// `L_t = κ + (1-γ)(L_{t-1} - κ) + (γ+φ_v) g(e_{t-1}) - φ_v g(e_{t-2})`.
    Arima111Egarch21 {
        phi: f64,
        theta: f64,
        gamma: f64,
        phi_v: f64,
        theta_v: f64,
        /// Long-run log-variance κ.
        #[serde(default)]
        level: f64,
        #[serde(default)]
        mu: f64,
    },
    /// `w_t = μ + ε_t` with GARCH(1,1) variance.
    Garch11 {
        omega: f64,
        alpha: f64,
        beta: f64,
        #[serde(default)]
        mu: f64,
    },
    /// Any ARMA–GARCH increment process.
    ArimaGarch {
        spec: ArimaGarchSpec,
        params: ArimaGarchParams,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SimSpace {
    /// Accumulate in logistic space from `start`, then map to (0,1).
    Z {
        #[serde(default)]
        start: f64,
    },
    /// Accumulate on the bounded scale, keeping values inside `(lower, upper)`.
    BoundedDirect {
        start: f64,
        #[serde(default)]
        lower: f64,
        #[serde(default = "one")]
        upper: f64,
    },
}

fn one() -> f64 {
    1.0
}

/// Pull toward `target` added to every level step: `-rate·(x_{t-1} - target)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reversion {
    pub rate: f64,
    #[serde(default)]
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub model: SimModel,
    pub n: usize,
    pub space: SimSpace,
    pub seed: u64,
    /// Steps simulated and discarded before the returned path.
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default)]
    pub reversion: Option<Reversion>,
}

/// A simulated path with its latent quantities, all of length `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimPath {
    /// Values in (0,1).
    pub y: Vec<f64>,
    /// The accumulated level (logistic space or the bounded scale).
    pub level: Vec<f64>,
    pub increments: Vec<f64>,
    pub innovations: Vec<f64>,
    pub sigma2: Vec<f64>,
    /// Standardized innovations `ε_t / σ_t`.
    pub standardized: Vec<f64>,
}

enum Variance {
    Constant(f64),
    Garch { omega: f64, alpha: Vec<f64>, beta: Vec<f64> },
    Egarch { gamma: f64, phi_v: f64, theta_v: f64, level: f64 },
}

struct Process {
    mu: f64,
    phi: Vec<f64>,
    theta: Vec<f64>,
    variance: Variance,
}

impl Process {
    fn from_model(model: &SimModel) -> Result<Self> {
        let arma = |mu: f64, phi: f64, theta: f64| -> Result<(Vec<f64>, Vec<f64>)> {
            let spec = ArimaGarchSpec::arima(1, 1);
            let p = ArimaGarchParams {
                mu,
                phi: vec![phi],
                theta: vec![theta],
                omega: 1.0,
                alpha_g: vec![],
                beta_g: vec![],
            };
            p.validate(&spec)?;
            Ok((p.phi, p.theta))
        };
        Ok(match model {
            SimModel::Arima111 { phi, theta, sigma2, mu } => {
                if !(*sigma2 > 0.0) {
                    return Err(Error::InvalidParameter("sigma2 must be positive".into()));
                }
                let (phi, theta) = arma(*mu, *phi, *theta)?;
                Process {
                    mu: *mu,
                    phi,
                    theta,
                    variance: Variance::Constant(*sigma2),
                }
            }
            SimModel::Arima111Egarch21 {
                phi,
                theta,
                gamma,
                phi_v,
                theta_v,
                level,
                mu,
            } => {
                if !(*gamma > 0.0 && *gamma <= 1.0) || !(phi_v.abs() < 1.0) || !(*theta_v >= 0.0) || !level.is_finite() {
                    return Err(Error::InvalidParameter(
                        "EGARCH needs gamma in (0,1], |phi_v| < 1, theta_v >= 0".into(),
                    ));
                }
                let (phi, theta) = arma(*mu, *phi, *theta)?;
                Process {
                    mu: *mu,
                    phi,
                    theta,
                    variance: Variance::Egarch {
                        gamma: *gamma,
                        phi_v: *phi_v,
                        theta_v: *theta_v,
                        level: *level,
                    },
                }
            }
            SimModel::Garch11 { omega, alpha, beta, mu } => {
                let spec = ArimaGarchSpec::arima_garch(0, 0, 1, 1);
                let p = ArimaGarchParams {
                    mu: *mu,
                    phi: vec![],
                    theta: vec![],
                    omega: *omega,
                    alpha_g: vec![*alpha],
                    beta_g: vec![*beta],
                };
                p.validate(&spec)?;
                Process {
                    mu: *mu,
                    phi: vec![],
                    theta: vec![],
                    variance: Variance::Garch {
                        omega: *omega,
                        alpha: vec![*alpha],
                        beta: vec![*beta],
                    },
                }
            }
            SimModel::ArimaGarch { spec, params } => {
                params.validate(spec)?;
                let variance = if spec.constant_variance() {
                    Variance::Constant(params.omega)
                } else {
                    Variance::Garch {
                        omega: params.omega,
                        alpha: params.alpha_g.clone(),
                        beta: params.beta_g.clone(),
                    }
                };
                Process {
                    mu: params.mu,
                    phi: params.phi.clone(),
                    theta: params.theta.clone(),
                    variance,
                }
            }
        })
    }

    fn stationary_var(&self) -> f64 {
        match &self.variance {
            Variance::Constant(s2) => *s2,
            Variance::Garch { omega, alpha, beta } => {
                omega / (1.0 - alpha.iter().sum::<f64>() - beta.iter().sum::<f64>())
            }
            Variance::Egarch { level, .. } => level.exp(),
        }
    }
}

fn lag(buf: &[f64], k: usize, default: f64) -> f64 {
    if k <= buf.len() {
        buf[buf.len() - k]
    } else {
        default
    }
}

/// Simulates the full path with latent quantities.
pub fn simulate_path(spec: &SimSpec) -> Result<SimPath> {
    if spec.n < 2 {
        return Err(Error::NotEnoughData { needed: 2, got: spec.n });
    }
    let proc = Process::from_model(&spec.model)?;
    if let SimSpace::BoundedDirect { start, lower, upper } = spec.space {
        if !(lower >= 0.0 && upper <= 1.0 && lower < start && start < upper) {
            return Err(Error::InvalidParameter(format!(
                "bounded start {start} must lie inside ({lower}, {upper}) within [0,1]"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let total = spec.n + spec.burn_in;
    let v_bar = proc.stationary_var();
    let mut w: Vec<f64> = Vec::with_capacity(total);
    let mut eps: Vec<f64> = Vec::with_capacity(total);
    let mut sig2: Vec<f64> = Vec::with_capacity(total);
    let mut std: Vec<f64> = Vec::with_capacity(total);
    let mut lvl: Vec<f64> = Vec::with_capacity(total);
    let mut log_s2 = v_bar.ln();
    let mut x = match spec.space {
        SimSpace::Z { start } => start,
        SimSpace::BoundedDirect { start, .. } => start,
    };
    for t in 0..total {
        let s2 = match &proc.variance {
            Variance::Constant(s2) => *s2,
            Variance::Garch { omega, alpha, beta } => {
                let mut s2 = *omega;
                for (i, a) in alpha.iter().enumerate() {
                    s2 += a * lag(&eps, i + 1, v_bar.sqrt()).powi(2);
                }
                for (j, b) in beta.iter().enumerate() {
                    s2 += b * lag(&sig2, j + 1, v_bar);
                }
                s2
            }
            Variance::Egarch { gamma, phi_v, theta_v, level } => {
                if t > 0 {
                    let g1 = g_func(lag(&std, 1, 0.0), *theta_v);
                    let g2 = if t > 1 { g_func(lag(&std, 2, 0.0), *theta_v) } else { 0.0 };
                    log_s2 = level + (1.0 - gamma) * (log_s2 - level) + (gamma + phi_v) * g1 - phi_v * g2;
                }
                log_s2.exp()
            }
        };
        let sd = s2.sqrt();
        let mut mean = proc.mu;
        for (i, p) in proc.phi.iter().enumerate() {
            mean += p * lag(&w, i + 1, 0.0);
        }
        for (j, th) in proc.theta.iter().enumerate() {
            mean += th * lag(&eps, j + 1, 0.0);
        }
        let pull = spec.reversion.map_or(0.0, |r| -r.rate * (x - r.target));
        let mut attempt = 0;
        let (e, next) = loop {
            let e: f64 = StandardNormal.sample(&mut rng);
            let next = x + mean + sd * e + pull;
            match spec.space {
                SimSpace::Z { .. } => break (e, next),
                SimSpace::BoundedDirect { lower, upper, .. } => {
                    if next > lower && next < upper {
                        break (e, next);
                    }
                    attempt += 1;
                    if attempt >= MAX_REDRAWS {
                        return Err(Error::SimulationBounds {
                            step: t,
                            attempts: attempt,
                            last: next,
                        });
                    }
                }
            }
        };
        w.push(mean + sd * e);
        eps.push(sd * e);
        sig2.push(s2);
        std.push(e);
        x = next;
        lvl.push(x);
    }
    let cut = spec.burn_in;
    let level = lvl.split_off(cut);
    let y = match spec.space {
        SimSpace::Z { .. } => level.iter().map(|z| expit(*z)).collect(),
        SimSpace::BoundedDirect { .. } => level.clone(),
    };
    Ok(SimPath {
        y,
        level,
        increments: w.split_off(cut),
        innovations: eps.split_off(cut),
        sigma2: sig2.split_off(cut),
        standardized: std.split_off(cut),
    })
}

/// Simulated series with unit capacity, clamped like ingested data.
pub fn simulate(spec: &SimSpec) -> Result<PowerSeries> {
    let path = simulate_path(spec)?;
    PowerSeries::from_normalized(path.y, 1.0, DEFAULT_CLAMP_EPS)
}

/// Writes `timestamp,power_norm` rows on a 15-minute grid starting at
/// midnight on 2000-01-01, readable by the CSV ingestion.
pub fn write_series_csv<W: Write>(series: &PowerSeries, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["timestamp", "power_norm"])?;
    let start = NaiveDate::from_ymd_opt(2000, 1, 1)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid date");
    let step = Duration::minutes(i64::from(series.cadence_minutes));
    for (i, v) in series.values().iter().enumerate() {
        let ts = start + step * i as i32;
        w.write_record([ts.format("%Y-%m-%dT%H:%M:%S").to_string(), v.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Running sum `z_i = Σ_{j≤i} w_j`.
pub fn cumulative(w: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    w.iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arima_spec(seed: u64, n: usize) -> SimSpec {
        SimSpec {
            model: SimModel::Arima111 {
                phi: 0.5,
                theta: -0.3,
                sigma2: 0.01,
                mu: 0.0,
            },
            n,
            space: SimSpace::Z { start: 0.0 },
            seed,
            burn_in: 0,
            reversion: None,
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let a = simulate_path(&arima_spec(4, 1000)).unwrap();
        let b = simulate_path(&arima_spec(4, 1000)).unwrap();
        assert_eq!(a, b);
        let c = simulate_path(&arima_spec(5, 1000)).unwrap();
        assert_ne!(a.y, c.y);
    }

    #[test]
    fn z_space_values_in_unit_interval() {
        let p = simulate_path(&arima_spec(1, 5000)).unwrap();
        assert!(p.y.iter().all(|v| *v > 0.0 && *v < 1.0));
        let s = simulate(&arima_spec(1, 5000)).unwrap();
        assert_eq!(s.len(), 5000);
    }

    #[test]
    fn bounded_direct_stays_in_band() {
        let spec = SimSpec {
            space: SimSpace::BoundedDirect {
                start: 0.5,
                lower: 0.05,
                upper: 0.95,
            },
            ..arima_spec(2, 20_000)
        };
        let p = simulate_path(&spec).unwrap();
        assert!(p.y.iter().all(|v| *v > 0.05 && *v < 0.95));
    }

    #[test]
    fn impossible_band_aborts() {
        let spec = SimSpec {
            model: SimModel::Arima111 {
                phi: 0.0,
                theta: 0.0,
                sigma2: 100.0,
                mu: 0.0,
            },
            space: SimSpace::BoundedDirect {
                start: 0.5,
                lower: 0.499,
                upper: 0.501,
            },
            ..arima_spec(2, 100)
        };
        assert!(matches!(simulate_path(&spec), Err(Error::SimulationBounds { .. })));
    }

    #[test]
    fn egarch_innovations_are_standardized() {
        let spec = SimSpec {
            model: SimModel::Arima111Egarch21 {
                phi: 0.3,
                theta: -0.2,
                gamma: 0.05,
                phi_v: 0.2,
                theta_v: 0.8,
                level: -6.0,
                mu: 0.0,
            },
            ..arima_spec(8, 2000)
        };
        let p = simulate_path(&spec).unwrap();
        for t in 0..p.y.len() {
            assert!((p.innovations[t] / p.sigma2[t].sqrt() - p.standardized[t]).abs() < 1e-12);
        }
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = arima_spec(3, 10);
        let s = serde_json::to_string(&spec).unwrap();
        let back: SimSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn csv_output_is_ingestible() {
        let s = simulate(&arima_spec(6, 50)).unwrap();
        let mut buf = Vec::new();
        write_series_csv(&s, &mut buf).unwrap();
        let raw = crate::series::read_csv(&buf[..]).unwrap();
        let back = raw.into_series(None, DEFAULT_CLAMP_EPS).unwrap();
        assert_eq!(back.values(), s.values());
    }
}
