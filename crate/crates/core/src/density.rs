//! Forecast densities on (0,1).

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transforms::LogisticNormal;
use crate::truncnorm::{bisect_quantile, TruncNorm};

/// A density tabulated on `m` equally spaced points `k/(m-1)`, linearly
/// interpolated between nodes. The cdf is the exact integral of the
/// interpolant, so it is monotone and reaches 1 at the right end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GriddedDensity {
    grid: Vec<f64>,
    pdf: Vec<f64>,
    cdf: Vec<f64>,
}

impl GriddedDensity {
    /// Normalizes nonnegative nodal values so the trapezoid integral is 1.
    pub fn from_pdf_values(mut pdf: Vec<f64>) -> Result<Self> {
        let m = pdf.len();
        if m < 2 {
            return Err(Error::NotEnoughData { needed: 2, got: m });
        }
        if pdf.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParameter("gridded pdf values must be finite and nonnegative".into()));
        }
        let h = 1.0 / (m - 1) as f64;
        let total: f64 = pdf.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).sum();
        if !(total > 0.0) {
            return Err(Error::Degenerate("gridded density has zero mass"));
        }
        for v in &mut pdf {
            *v /= total;
        }
        let mut cdf = Vec::with_capacity(m);
        let mut acc = 0.0;
        cdf.push(0.0);
        for w in pdf.windows(2) {
            acc += 0.5 * h * (w[0] + w[1]);
            cdf.push(acc);
        }
        // Remove the last rounding residue; monotonicity is unaffected.
        let last = cdf[m - 1];
        for c in &mut cdf {
            *c /= last;
        }
        let grid = (0..m).map(|k| k as f64 * h).collect();
        Ok(Self { grid, pdf, cdf })
    }

    pub fn uniform(m: usize) -> Result<Self> {
        Self::from_pdf_values(vec![1.0; m])
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn pdf_values(&self) -> &[f64] {
        &self.pdf
    }

    pub fn cdf_values(&self) -> &[f64] {
        &self.cdf
    }

    fn spacing(&self) -> f64 {
        1.0 / (self.grid.len() - 1) as f64
    }

    fn cell(&self, y: f64) -> (usize, f64) {
        let m = self.grid.len();
        let pos = y * (m - 1) as f64;
        let i = (pos.floor() as usize).min(m - 2);
        (i, pos - i as f64)
    }

    pub fn pdf(&self, y: f64) -> f64 {
        if !(0.0..=1.0).contains(&y) {
            return 0.0;
        }
        let (i, t) = self.cell(y);
        self.pdf[i] + t * (self.pdf[i + 1] - self.pdf[i])
    }

    pub fn cdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        if y >= 1.0 {
            return 1.0;
        }
        let (i, t) = self.cell(y);
        let h = self.spacing();
        let (p0, p1) = (self.pdf[i], self.pdf[i + 1]);
        let partial = h * (p0 * t + 0.5 * (p1 - p0) * t * t);
        (self.cdf[i] + partial).min(self.cdf[i + 1]).clamp(0.0, 1.0)
    }

    pub fn quantile(&self, p: f64) -> f64 {
        bisect_quantile(|y| self.cdf(y), p)
    }

    /// `∫ y f(y) dy` of the piecewise-linear density.
    pub fn mean(&self) -> f64 {
        let h = self.spacing();
        let mut acc = 0.0;
        for i in 0..self.grid.len() - 1 {
            let x = self.grid[i];
            let (p0, p1) = (self.pdf[i], self.pdf[i + 1]);
            acc += p0 * (x * h + 0.5 * h * h) + (p1 - p0) * (0.5 * x * h + h * h / 3.0);
        }
        acc
    }

    /// Writes `grid,pdf,cdf` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["grid", "pdf", "cdf"])?;
        for ((g, p), c) in self.grid.iter().zip(&self.pdf).zip(&self.cdf) {
            w.write_record([g.to_string(), p.to_string(), c.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Any forecast density the harness knows how to score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "density", rename_all = "snake_case")]
pub enum DensityForecast {
    TruncNorm(TruncNorm),
    LogisticNormal(LogisticNormal),
    Gridded(Arc<GriddedDensity>),
}

impl DensityForecast {
    pub fn pdf(&self, y: f64) -> f64 {
        match self {
            DensityForecast::TruncNorm(d) => d.pdf(y),
            DensityForecast::LogisticNormal(d) => d.pdf(y),
            DensityForecast::Gridded(d) => d.pdf(y),
        }
    }

    pub fn cdf(&self, y: f64) -> f64 {
        match self {
            DensityForecast::TruncNorm(d) => d.cdf(y),
            DensityForecast::LogisticNormal(d) => d.cdf(y),
            DensityForecast::Gridded(d) => d.cdf(y),
        }
    }

    pub fn mean(&self) -> Result<f64> {
        match self {
            DensityForecast::TruncNorm(d) => Ok(d.mean()),
            DensityForecast::LogisticNormal(d) => d.mean(),
            DensityForecast::Gridded(d) => Ok(d.mean()),
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        match self {
            DensityForecast::TruncNorm(d) => d.quantile(p),
            DensityForecast::LogisticNormal(d) => d.quantile(p),
            DensityForecast::Gridded(d) => d.quantile(p),
        }
    }
}

impl From<TruncNorm> for DensityForecast {
    fn from(d: TruncNorm) -> Self {
        DensityForecast::TruncNorm(d)
    }
}

impl From<LogisticNormal> for DensityForecast {
    fn from(d: LogisticNormal) -> Self {
        DensityForecast::LogisticNormal(d)
    }
}

impl From<GriddedDensity> for DensityForecast {
    fn from(d: GriddedDensity) -> Self {
        DensityForecast::Gridded(Arc::new(d))
    }
}
