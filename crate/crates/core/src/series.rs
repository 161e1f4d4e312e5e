//! Fixed-cadence bounded series: ingestion, differencing, autocorrelation,
//! train/test splits and harmonic seasonality diagnostics.

use std::f64::consts::PI;
use std::io::Read;

use chrono::{DateTime, NaiveDateTime};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default clamp keeping values strictly inside (0,1).
pub const DEFAULT_CLAMP_EPS: f64 = 1e-6;

/// Normalized power observations on a constant cadence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSeries {
    values: Vec<f64>,
    pub cadence_minutes: u32,
    /// Normalization divisor in MW.
    pub capacity: f64,
    pub start_index: i64,
}

impl PowerSeries {
    /// Wraps already-normalized values, clamping them into `[eps, 1-eps]`.
    pub fn from_normalized(values: Vec<f64>, capacity: f64, clamp_eps: f64) -> Result<Self> {
        check_clamp_eps(clamp_eps)?;
        if values.is_empty() {
            return Err(Error::Empty);
        }
        if !(capacity > 0.0) {
            return Err(Error::InvalidParameter(format!("capacity {capacity} must be positive")));
        }
        let mut out = Vec::with_capacity(values.len());
        for v in values {
            if !v.is_finite() || v < 0.0 || v > 1.0 {
                return Err(Error::Domain {
                    what: "normalized value must lie in [0,1]",
                    value: v,
                });
            }
            out.push(v.clamp(clamp_eps, 1.0 - clamp_eps));
        }
        Ok(Self {
            values: out,
            cadence_minutes: 15,
            capacity,
            start_index: 0,
        })
    }

    pub fn with_cadence(mut self, minutes: u32) -> Self {
        self.cadence_minutes = minutes;
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values in MW.
    pub fn denormalized(&self) -> Vec<f64> {
        self.values.iter().map(|v| v * self.capacity).collect()
    }

    pub fn split(&self, spec: SplitSpec) -> Result<(&[f64], &[f64])> {
        spec.validate(self.len())?;
        let v = &self.values[..spec.train_len + spec.test_len];
        Ok(v.split_at(spec.train_len))
    }
}

fn check_clamp_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 1e-3 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("clamp_eps {eps} must lie in (0, 1e-3]")))
    }
}

/// Divides raw MW readings by capacity and clamps into `[eps, 1-eps]`.
pub fn normalize(raw: &[f64], capacity: f64, clamp_eps: f64) -> Result<PowerSeries> {
    if raw.is_empty() {
        return Err(Error::Empty);
    }
    if !(capacity > 0.0 && capacity.is_finite()) {
        return Err(Error::InvalidParameter(format!("capacity {capacity} must be positive")));
    }
    check_clamp_eps(clamp_eps)?;
    let mut values = Vec::with_capacity(raw.len());
    for &r in raw {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::Domain {
                what: "raw power must be a nonnegative number",
                value: r,
            });
        }
        if r > capacity {
            return Err(Error::Domain {
                what: "raw power exceeds capacity",
                value: r,
            });
        }
        values.push((r / capacity).clamp(clamp_eps, 1.0 - clamp_eps));
    }
    Ok(PowerSeries {
        values,
        cadence_minutes: 15,
        capacity,
        start_index: 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_len: usize,
    pub test_len: usize,
}

impl SplitSpec {
    pub fn validate(&self, series_len: usize) -> Result<()> {
        if self.train_len == 0 || self.test_len == 0 {
            return Err(Error::InvalidParameter("train_len and test_len must be positive".into()));
        }
        if self.train_len + self.test_len > series_len {
            return Err(Error::NotEnoughData {
                needed: self.train_len + self.test_len,
                got: series_len,
            });
        }
        Ok(())
    }
}

/// Applies the first difference `d` times.
pub fn difference(x: &[f64], d: usize) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(Error::InvalidParameter("difference order must be positive".into()));
    }
    if d >= x.len() {
        return Err(Error::NotEnoughData {
            needed: d + 1,
            got: x.len(),
        });
    }
    let mut cur = x.to_vec();
    for _ in 0..d {
        cur = cur.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(cur)
}

/// Sample autocorrelations `acf[0..=max_lag]` with the lag-0 denominator.
pub fn sample_acf(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if max_lag >= x.len() {
        return Err(Error::NotEnoughData {
            needed: max_lag + 1,
            got: x.len(),
        });
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let denom: f64 = c.iter().map(|v| v * v).sum();
    if x.iter().all(|v| *v == x[0]) || !(denom > 0.0) {
        return Err(Error::Degenerate("constant series has no autocorrelation"));
    }
    Ok((0..=max_lag)
        .map(|k| c[..c.len() - k].iter().zip(&c[k..]).map(|(a, b)| a * b).sum::<f64>() / denom)
        .collect())
}

/// Least-squares fit of sine/cosine harmonics plus an intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicFit {
    pub n_harmonics: usize,
    pub base_period_steps: f64,
    /// `[intercept, sin_1, cos_1, sin_2, cos_2, ...]`.
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
}

impl HarmonicFit {
    pub fn fitted_value(&self, t: f64) -> f64 {
        let mut v = self.coefficients[0];
        for j in 1..=self.n_harmonics {
            let arg = 2.0 * PI * j as f64 * t / self.base_period_steps;
            v += self.coefficients[2 * j - 1] * arg.sin() + self.coefficients[2 * j] * arg.cos();
        }
        v
    }
}

pub fn fit_harmonics(values: &[f64], n_harmonics: usize, base_period_steps: f64) -> Result<HarmonicFit> {
    let n = values.len();
    let cols = 2 * n_harmonics + 1;
    if n_harmonics == 0 {
        return Err(Error::InvalidParameter("need at least one harmonic".into()));
    }
    if cols >= n {
        return Err(Error::NotEnoughData { needed: cols + 1, got: n });
    }
    if !(base_period_steps > 0.0) {
        return Err(Error::InvalidParameter("base period must be positive".into()));
    }
    let design = DMatrix::from_fn(n, cols, |t, c| {
        if c == 0 {
            1.0
        } else {
            let j = c.div_ceil(2) as f64;
            let arg = 2.0 * PI * j * t as f64 / base_period_steps;
            if c % 2 == 1 {
                arg.sin()
            } else {
                arg.cos()
            }
        }
    });
    let y = DVector::from_column_slice(values);
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = smax * 1e-10 * n.max(cols) as f64;
    let rank = svd.rank(cutoff);
    if rank < cols {
        return Err(Error::RankDeficient { rank, cols });
    }
    let beta = svd
        .solve(&y, cutoff)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let fitted = &design * &beta;
    let mean = y.mean();
    let sse: f64 = y.iter().zip(fitted.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    let sst: f64 = y.iter().map(|a| (a - mean).powi(2)).sum();
    let r_squared = if sst > 0.0 { (1.0 - sse / sst).clamp(0.0, 1.0) } else { 1.0 };
    Ok(HarmonicFit {
        n_harmonics,
        base_period_steps,
        coefficients: beta.iter().copied().collect(),
        r_squared,
    })
}

/// Units of the value column in an ingested CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueColumn {
    PowerMw,
    Normalized,
}

/// Rows of a `timestamp,power_mw` or `timestamp,power_norm` file, after
/// cadence validation.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    pub timestamps: Vec<String>,
    pub values: Vec<f64>,
    pub column: ValueColumn,
    pub cadence_minutes: u32,
}

impl RawSeries {
    /// Normalizes into a [`PowerSeries`]. `capacity` is required for MW input.
    pub fn into_series(self, capacity: Option<f64>, clamp_eps: f64) -> Result<PowerSeries> {
        let series = match self.column {
            ValueColumn::PowerMw => {
                let cap = capacity.ok_or_else(|| {
                    Error::InvalidParameter("capacity is required for power_mw input".into())
                })?;
                normalize(&self.values, cap, clamp_eps)?
            }
            ValueColumn::Normalized => PowerSeries::from_normalized(self.values, capacity.unwrap_or(1.0), clamp_eps)?,
        };
        Ok(series.with_cadence(self.cadence_minutes))
    }
}

fn parse_timestamp(s: &str) -> Option<i64> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t.and_utc().timestamp());
        }
    }
    None
}

/// Reads a two-column CSV and rejects gaps or irregular spacing.
pub fn read_csv<R: Read>(reader: R) -> Result<RawSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "timestamp" {
        return Err(Error::Parse(format!(
            "expected header timestamp,power_mw or timestamp,power_norm, got {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let column = match &headers[1] {
        "power_mw" => ValueColumn::PowerMw,
        "power_norm" => ValueColumn::Normalized,
        other => return Err(Error::Parse(format!("unknown value column '{other}'"))),
    };
    let mut timestamps = Vec::new();
    let mut secs = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let ts = parse_timestamp(&rec[0]).ok_or_else(|| Error::Cadence {
            row,
            reason: format!("unparseable timestamp '{}'", &rec[0]),
        })?;
        let v: f64 = rec[1]
            .parse()
            .map_err(|_| Error::Parse(format!("row {row}: bad value '{}'", &rec[1])))?;
        timestamps.push(rec[0].to_string());
        secs.push(ts);
        values.push(v);
    }
    if values.len() < 2 {
        return Err(Error::NotEnoughData { needed: 2, got: values.len() });
    }
    let step = secs[1] - secs[0];
    if step <= 0 || step % 60 != 0 {
        return Err(Error::Cadence {
            row: 3,
            reason: format!("first step of {step}s is not a positive whole number of minutes"),
        });
    }
    for (i, w) in secs.windows(2).enumerate() {
        let d = w[1] - w[0];
        if d != step {
            let reason = if d <= 0 {
                "timestamps not strictly increasing".to_string()
            } else {
                format!("step of {d}s breaks the {step}s cadence (missing rows are not imputed)")
            };
            return Err(Error::Cadence { row: i + 3, reason });
        }
    }
    Ok(RawSeries {
        timestamps,
        values,
        column,
        cadence_minutes: (step / 60) as u32,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn normalize_examples() {
        let s = normalize(&[396.1775], 792.355, 1e-6).unwrap();
        assert_eq!(s.values(), &[0.5]);
        let s = normalize(&[792.355], 792.355, 1e-6).unwrap();
        assert_eq!(s.values(), &[0.999_999]);
        let s = normalize(&[0.0], 792.355, 1e-6).unwrap();
        assert_eq!(s.values(), &[1e-6]);
        assert!(normalize(&[], 1.0, 1e-6).is_err());
        assert!(normalize(&[1.0], 0.0, 1e-6).is_err());
        assert!(normalize(&[-1.0], 10.0, 1e-6).is_err());
        assert!(normalize(&[11.0], 10.0, 1e-6).is_err());
        assert!(normalize(&[1.0], 10.0, 0.01).is_err());
    }

    #[test]
    fn difference_examples() {
        let d = difference(&[0.1, 0.3, 0.2], 1).unwrap();
        assert!((d[0] - 0.2).abs() < 1e-15 && (d[1] + 0.1).abs() < 1e-15);
        assert_eq!(difference(&[0.4; 5], 1).unwrap(), vec![0.0; 4]);
        assert_eq!(difference(&[1.0, 2.0, 4.0, 7.0], 2).unwrap(), vec![1.0, 1.0]);
        assert!(difference(&[1.0, 2.0], 2).is_err());
    }

    #[test]
    fn acf_white_noise_and_ar1() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let x: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let acf = sample_acf(&x, 200).unwrap();
        assert_eq!(acf[0], 1.0);
        let bound = 2.0 / (x.len() as f64).sqrt();
        let inside = acf[1..].iter().filter(|a| a.abs() < bound).count();
        assert!(inside as f64 >= 0.9 * 200.0, "{inside}");

        let mut y = vec![0.0; 50_000];
        for t in 1..y.len() {
            let e: f64 = StandardNormal.sample(&mut rng);
            y[t] = 0.8 * y[t - 1] + e;
        }
        let acf = sample_acf(&y, 1).unwrap();
        assert!((acf[1] - 0.8).abs() < 0.02);
        assert!(sample_acf(&[0.3; 10], 2).is_err());
    }

    #[test]
    fn harmonics_recover_pure_sinusoid() {
        let period = 96.0 * 90.0;
        let x: Vec<f64> = (0..9000)
            .map(|t| 0.4 + 0.2 * (2.0 * PI * t as f64 / period).sin())
            .collect();
        let fit = fit_harmonics(&x, 16, period).unwrap();
        assert!(fit.r_squared >= 0.999);
        assert!((fit.fitted_value(100.0) - x[100]).abs() < 1e-9);
    }

    #[test]
    fn harmonics_on_noise_explain_little() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let fit = fit_harmonics(&x, 16, 8640.0).unwrap();
        assert!(fit.r_squared < 0.02);
    }

    #[test]
    fn harmonics_rank_deficiency_is_reported() {
        // Period of 2 steps makes sin(πt) vanish on integers.
        let x: Vec<f64> = (0..100).map(|t| t as f64).collect();
        assert!(matches!(fit_harmonics(&x, 1, 2.0), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn r_squared_grows_with_harmonics() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..2000)
            .map(|t| (t as f64 / 150.0).sin() + 0.3 * Distribution::<f64>::sample(&StandardNormal, &mut rng))
            .collect();
        let mut last = 0.0;
        for k in 1..8 {
            let r2 = fit_harmonics(&x, k, 2000.0).unwrap().r_squared;
            assert!(r2 >= last - 1e-12);
            last = r2;
        }
    }

    #[test]
    fn csv_ingestion_checks_cadence() {
        let ok = "timestamp,power_mw\n2010-01-01T00:00:00,10\n2010-01-01T00:15:00,20\n2010-01-01T00:30:00,30\n";
        let raw = read_csv(ok.as_bytes()).unwrap();
        assert_eq!(raw.cadence_minutes, 15);
        let s = raw.into_series(Some(40.0), 1e-6).unwrap();
        assert_eq!(s.values(), &[0.25, 0.5, 0.75]);

        let gap = "timestamp,power_mw\n2010-01-01T00:00:00,10\n2010-01-01T00:15:00,20\n2010-01-01T00:45:00,30\n";
        assert!(matches!(read_csv(gap.as_bytes()), Err(Error::Cadence { row: 4, .. })));

        let norm = "timestamp,power_norm\n2010-01-01T00:00:00Z,0.1\n2010-01-01T00:15:00Z,0.2\n";
        let s = read_csv(norm.as_bytes()).unwrap().into_series(None, 1e-6).unwrap();
        assert_eq!(s.values(), &[0.1, 0.2]);

        let bad = "time,power\n";
        assert!(read_csv(bad.as_bytes()).is_err());
    }

    #[test]
    fn split_bounds() {
        let s = PowerSeries::from_normalized(vec![0.5; 10], 1.0, 1e-6).unwrap();
        let (a, b) = s.split(SplitSpec { train_len: 6, test_len: 4 }).unwrap();
        assert_eq!((a.len(), b.len()), (6, 4));
        assert!(s.split(SplitSpec { train_len: 8, test_len: 4 }).is_err());
    }

    proptest! {
        #[test]
        fn denormalize_within_clamp(raw in proptest::collection::vec(0.0f64..792.355, 1..50)) {
            let eps = 1e-6;
            let s = normalize(&raw, 792.355, eps).unwrap();
            for (r, back) in raw.iter().zip(s.denormalized()) {
                prop_assert!((r - back).abs() <= eps * 792.355 + 1e-9);
            }
        }

        #[test]
        fn difference_inverts_cumsum(x0 in -1.0f64..1.0, steps in proptest::collection::vec(-1.0f64..1.0, 2..40)) {
            let mut level = vec![x0];
            for s in &steps {
                let last = *level.last().unwrap();
                level.push(last + s);
            }
            let d = difference(&level, 1).unwrap();
            for (a, b) in d.iter().zip(&steps) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn acf_affine_invariant(x in proptest::collection::vec(-1.0f64..1.0, 20..60), a in 0.5f64..3.0, b in -5.0f64..5.0, neg in proptest::bool::ANY) {
            let a = if neg { -a } else { a };
            let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let ax = sample_acf(&x, 5).unwrap();
            let ay = sample_acf(&y, 5).unwrap();
            for (p, q) in ax.iter().zip(&ay) {
                prop_assert!((p - q).abs() < 1e-12);
            }
        }
    }
}
