//! Maps between the unit interval and the real line.
//!
//! The logistic transform `z = log(y/(1-y))` turns a bounded series into one
//! that a Gaussian model can describe. A Gaussian forecast for `z` becomes a
//! density on (0,1) through the Jacobian `|dz/dy| = 1/(y(1-y))`; that density
//! is [`LogisticNormal`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{self, norm_cdf, norm_pdf, norm_ppf};

/// Largest `f64` strictly below 1.
const ONE_MINUS_ULP: f64 = 1.0 - f64::EPSILON / 2.0;

/// `log(y/(1-y))`.
pub fn logistic_fwd(y: f64) -> Result<f64> {
    if !(y > 0.0 && y < 1.0) {
        return Err(Error::Domain {
            what: "logistic transform needs 0 < y < 1",
            value: y,
        });
    }
    Ok(logit(y))
}

#[inline]
pub(crate) fn logit(y: f64) -> f64 {
    (y / (1.0 - y)).ln()
}

/// `1/(1+exp(-z))`, kept strictly inside (0,1) even when it saturates in `f64`.
pub fn logistic_inv(z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::Domain {
            what: "inverse logistic needs a finite argument",
            value: z,
        });
    }
    Ok(expit(z))
}

#[inline]
pub(crate) fn expit(z: f64) -> f64 {
    stats::sigmoid(z).clamp(f64::MIN_POSITIVE, ONE_MINUS_ULP)
}

/// The variance-stabilizing transforms commonly tried on wind data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    Log,
    Sqrt,
}

pub fn diagnostic_transform(y: f64, kind: DiagnosticKind) -> Result<f64> {
    match kind {
        DiagnosticKind::Log if y > 0.0 => Ok(y.ln()),
        DiagnosticKind::Sqrt if y >= 0.0 => Ok(y.sqrt()),
        _ => Err(Error::Domain {
            what: "diagnostic transform needs a positive argument",
            value: y,
        }),
    }
}

/// Gaussian `N(z_mean, z_var)` in logit space, viewed as a density on (0,1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticNormal {
    pub z_mean: f64,
    pub z_var: f64,
}

impl LogisticNormal {
    pub fn new(z_mean: f64, z_var: f64) -> Result<Self> {
        if !z_mean.is_finite() {
            return Err(Error::InvalidParameter(format!("z_mean {z_mean} not finite")));
        }
        if !(z_var > 0.0 && z_var.is_finite()) {
            return Err(Error::InvalidParameter(format!("z_var {z_var} must be positive")));
        }
        Ok(Self { z_mean, z_var })
    }

    #[inline]
    pub fn z_sd(&self) -> f64 {
        self.z_var.sqrt()
    }

    /// Density on (0,1); zero at and beyond the boundaries.
    pub fn pdf(&self, y: f64) -> f64 {
        if !(y > 0.0 && y < 1.0) {
            return 0.0;
        }
        let sd = self.z_sd();
        let u = (logit(y) - self.z_mean) / sd;
        norm_pdf(u) / (sd * y * (1.0 - y))
    }

    /// Distribution function, evaluated in z-space.
    pub fn cdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            0.0
        } else if y >= 1.0 {
            1.0
        } else {
            norm_cdf((logit(y) - self.z_mean) / self.z_sd())
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        expit(self.z_mean + self.z_sd() * norm_ppf(p))
    }

    /// `E[Y]`, integrated in z-space where the integrand is smooth:
    /// `∫ expit(z) N(z; μ, σ²) dz` over `μ ± 12σ`.
    pub fn mean(&self) -> Result<f64> {
        let sd = self.z_sd();
        let mu = self.z_mean;
        let f = |u: f64| expit(mu + sd * u) * norm_pdf(u);
        stats::integrate(f, -12.0, 12.0, 1e-10, 4)
    }
}

/// Pushforward density with a boundary check.
pub fn pushforward_pdf(d: &LogisticNormal, y: f64) -> Result<f64> {
    check_open_unit(y)?;
    Ok(d.pdf(y))
}

pub fn pushforward_cdf(d: &LogisticNormal, y: f64) -> Result<f64> {
    check_open_unit(y)?;
    Ok(d.cdf(y))
}

pub fn pushforward_mean(d: &LogisticNormal) -> Result<f64> {
    d.mean()
}

pub(crate) fn check_open_unit(y: f64) -> Result<()> {
    if y > 0.0 && y < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "value must lie strictly inside (0,1)",
            value: y,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn logistic_examples() {
        assert_eq!(logistic_fwd(0.5).unwrap(), 0.0);
        assert!((logistic_fwd(0.9).unwrap() - 9f64.ln()).abs() < 1e-15);
        assert!((logistic_fwd(0.9).unwrap() - 2.197_224_577_336_219_6).abs() < 1e-12);
        assert!((logistic_fwd(0.7).unwrap() + logistic_fwd(0.3).unwrap()).abs() < 1e-15);
        assert!(logistic_fwd(0.0).is_err());
        assert!(logistic_fwd(1.0).is_err());
    }

    #[test]
    fn inverse_saturates_strictly_inside() {
        assert_eq!(logistic_inv(0.0).unwrap(), 0.5);
        let v = logistic_inv(40.0).unwrap();
        assert!(v < 1.0 && 1.0 - v < 1e-12);
        assert!(logistic_inv(-800.0).unwrap() > 0.0);
        assert!(logistic_inv(f64::NAN).is_err());
        assert!(logistic_inv(f64::INFINITY).is_err());
        let y = 0.123;
        assert!((logistic_inv(logistic_fwd(y).unwrap()).unwrap() - y).abs() < 1e-12);
    }

    #[test]
    fn pdf_at_half_is_four_times_phi0() {
        let d = LogisticNormal::new(0.0, 1.0).unwrap();
        let v = pushforward_pdf(&d, 0.5).unwrap();
        assert!((v - 1.595_769_121_605_731).abs() < 1e-12);
        assert!(pushforward_pdf(&d, 0.0).is_err());
        for y in [0.1, 0.27, 0.4] {
            assert!((d.pdf(y) - d.pdf(1.0 - y)).abs() < 1e-12);
        }
    }

    #[test]
    fn cdf_examples() {
        let d = LogisticNormal::new(0.0, 2.5).unwrap();
        assert!((pushforward_cdf(&d, 0.5).unwrap() - 0.5).abs() < 1e-15);
        let d = LogisticNormal::new(0.0, 1.0).unwrap();
        assert!(d.cdf(0.999_999) > 0.999);
        let q = d.quantile(0.8);
        assert!((d.cdf(q) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn mean_limits() {
        let d = LogisticNormal::new(0.0, 1.7).unwrap();
        assert!((d.mean().unwrap() - 0.5).abs() < 1e-8);
        let d = LogisticNormal::new(2.0, 1e-10).unwrap();
        assert!((d.mean().unwrap() - 0.880_797_077_977_882_3).abs() < 1e-4);
    }

    #[test]
    fn diagnostic_examples() {
        assert_eq!(diagnostic_transform(1.0, DiagnosticKind::Log).unwrap(), 0.0);
        assert_eq!(diagnostic_transform(0.25, DiagnosticKind::Sqrt).unwrap(), 0.5);
        assert_eq!(diagnostic_transform(1.0, DiagnosticKind::Sqrt).unwrap(), 1.0);
        assert!(diagnostic_transform(0.0, DiagnosticKind::Log).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(y in 1e-6f64..(1.0 - 1e-6)) {
            let back = logistic_inv(logistic_fwd(y).unwrap()).unwrap();
            prop_assert!((back - y).abs() < 1e-12);
        }

        #[test]
        fn mean_antisymmetry(m in -3.0f64..3.0, v in 0.01f64..4.0) {
            let a = LogisticNormal::new(m, v).unwrap().mean().unwrap();
            let b = LogisticNormal::new(-m, v).unwrap().mean().unwrap();
            prop_assert!((a + b - 1.0).abs() < 1e-8);
        }
    }
}
