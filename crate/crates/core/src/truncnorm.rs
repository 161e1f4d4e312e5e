//! Normal distribution truncated to (0,1).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{norm_interval, norm_pdf, INV_SQRT_2PI};

/// Smallest admissible normalizer `Φ((1-ℓ)/s) - Φ(-ℓ/s)`.
const MIN_NORMALIZER: f64 = 1e-300;

/// `N(loc, scale2)` restricted to (0,1) and renormalized. `loc` may lie
/// outside the unit interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TruncNormParams", into = "TruncNormParams")]
pub struct TruncNorm {
    loc: f64,
    scale2: f64,
    scale: f64,
    lo_std: f64,
    hi_std: f64,
    normalizer: f64,
}

#[derive(Serialize, Deserialize)]
struct TruncNormParams {
    loc: f64,
    scale2: f64,
}

impl TryFrom<TruncNormParams> for TruncNorm {
    type Error = Error;
    fn try_from(p: TruncNormParams) -> Result<Self> {
        TruncNorm::new(p.loc, p.scale2)
    }
}

impl From<TruncNorm> for TruncNormParams {
    fn from(t: TruncNorm) -> Self {
        TruncNormParams {
            loc: t.loc,
            scale2: t.scale2,
        }
    }
}

impl TruncNorm {
    pub fn new(loc: f64, scale2: f64) -> Result<Self> {
        if !loc.is_finite() || !(scale2 > 0.0 && scale2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "truncated normal needs finite location and positive scale^2 (got {loc}, {scale2})"
            )));
        }
        let scale = scale2.sqrt();
        let lo_std = -loc / scale;
        let hi_std = (1.0 - loc) / scale;
        let normalizer = norm_interval(lo_std, hi_std);
        if !(normalizer >= MIN_NORMALIZER) {
            return Err(Error::DegenerateNormalizer { loc, scale2 });
        }
        Ok(Self {
            loc,
            scale2,
            scale,
            lo_std,
            hi_std,
            normalizer,
        })
    }

    pub fn loc(&self) -> f64 {
        self.loc
    }

    pub fn scale2(&self) -> f64 {
        self.scale2
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn pdf(&self, y: f64) -> f64 {
        if !(y > 0.0 && y < 1.0) {
            return 0.0;
        }
        norm_pdf((y - self.loc) / self.scale) / (self.scale * self.normalizer)
    }

    pub fn ln_pdf(&self, y: f64) -> f64 {
        if !(y > 0.0 && y < 1.0) {
            return f64::NEG_INFINITY;
        }
        let u = (y - self.loc) / self.scale;
        INV_SQRT_2PI.ln() - 0.5 * u * u - self.scale.ln() - self.normalizer.ln()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            0.0
        } else if y >= 1.0 {
            1.0
        } else {
            let u = (y - self.loc) / self.scale;
            (norm_interval(self.lo_std, u) / self.normalizer).clamp(0.0, 1.0)
        }
    }

    /// Inverts the cdf by bisection to 1e-10.
    pub fn quantile(&self, p: f64) -> f64 {
        bisect_quantile(|y| self.cdf(y), p)
    }

    /// `ℓ + s·[φ(-ℓ/s) - φ((1-ℓ)/s)] / [Φ((1-ℓ)/s) - Φ(-ℓ/s)]`.
    pub fn mean(&self) -> f64 {
        let m = self.loc + self.scale * (norm_pdf(self.lo_std) - norm_pdf(self.hi_std)) / self.normalizer;
        m.clamp(0.0, 1.0)
    }
}

pub(crate) fn bisect_quantile<F: Fn(f64) -> f64>(cdf: F, p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn truncnorm_pdf(d: &TruncNorm, y: f64) -> Result<f64> {
    crate::transforms::check_open_unit(y)?;
    Ok(d.pdf(y))
}

pub fn truncnorm_cdf(d: &TruncNorm, y: f64) -> Result<f64> {
    crate::transforms::check_open_unit(y)?;
    Ok(d.cdf(y))
}

pub fn truncnorm_quantile(d: &TruncNorm, p: f64) -> Result<f64> {
    crate::transforms::check_open_unit(p)?;
    Ok(d.quantile(p))
}

pub fn truncnorm_mean(d: &TruncNorm) -> f64 {
    d.mean()
}
