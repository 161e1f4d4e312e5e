//! Reference forecasters: persistence, constant, climatology and the EWMA
//! mixture of recent empirical densities.

use serde::{Deserialize, Serialize};

use crate::density::GriddedDensity;
use crate::error::{Error, Result};
use crate::stats::INV_SQRT_2PI;
use crate::truncnorm::TruncNorm;

/// Persistence window: 12 hours of 15-minute data.
pub const DEFAULT_PERSISTENCE_WINDOW: usize = 48;
/// Grid size of empirical densities.
pub const DEFAULT_GRID: usize = 512;
/// Observations per day.
pub const DAY: usize = 96;
/// Number of day-multiple windows in the EWMA mixture.
pub const DEFAULT_WINDOWS: usize = 14;
/// Smoothing parameter used when none is fitted.
pub const DEFAULT_LAMBDA: f64 = 0.1988;
/// Floor on the persistence scale².
pub const MIN_SCALE2: f64 = 1e-10;

/// Mean squared first difference over the last `n` steps of `history`.
fn recent_sq_diff(history: &[f64], n: usize) -> f64 {
    let k = history.len();
    history[k - n - 1..]
        .windows(2)
        .map(|w| (w[1] - w[0]).powi(2))
        .sum::<f64>()
        / n as f64
}

/// Truncated normal centered on the last value with scale² equal to the
/// mean squared first difference over the last `n` steps (floored at
/// [`MIN_SCALE2`]). The same density serves every horizon.
pub fn persistence_forecast(history: &[f64], n: usize) -> Result<TruncNorm> {
    if n == 0 || history.len() <= n {
        return Err(Error::NotEnoughData {
            needed: n + 1,
            got: history.len(),
        });
    }
    let s2 = recent_sq_diff(history, n).max(MIN_SCALE2);
    TruncNorm::new(history[history.len() - 1], s2)
}

/// Sample mean and unbiased sample variance of the training data.
pub fn constant_forecast(train: &[f64]) -> Result<TruncNorm> {
    if train.len() < 2 {
        return Err(Error::NotEnoughData { needed: 2, got: train.len() });
    }
    let n = train.len() as f64;
    let mean = train.iter().sum::<f64>() / n;
    let var = train.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    TruncNorm::new(mean, var.max(MIN_SCALE2))
}

/// Estimator behind [`fit_empirical`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EmpiricalMethod {
    /// Gaussian kernel, Silverman bandwidth, reflected at 0 and 1.
    #[default]
    Kde,
    /// Equal-width histogram with the given number of bins.
    Histogram { bins: usize },
}

/// Minimum window for an empirical density.
pub const MIN_WINDOW: usize = 96;

/// Empirical density of `window` on an `m`-point grid.
pub fn fit_empirical(window: &[f64], m: usize) -> Result<GriddedDensity> {
    fit_empirical_with(window, m, EmpiricalMethod::Kde)
}

pub fn fit_empirical_with(window: &[f64], m: usize, method: EmpiricalMethod) -> Result<GriddedDensity> {
    if window.len() < MIN_WINDOW {
        return Err(Error::NotEnoughData {
            needed: MIN_WINDOW,
            got: window.len(),
        });
    }
    if m < 2 {
        return Err(Error::InvalidParameter("grid needs at least 2 points".into()));
    }
    if window.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Domain {
            what: "empirical window values must lie in [0,1]",
            value: window.iter().copied().find(|v| !(0.0..=1.0).contains(v)).unwrap_or(f64::NAN),
        });
    }
    match method {
        EmpiricalMethod::Kde => GriddedDensity::from_pdf_values(kde_values(window, m)),
        EmpiricalMethod::Histogram { bins } => histogram_density(window, m, bins),
    }
}

/// Silverman's rule `0.9 min(sd, IQR/1.34) n^{-1/5}`, falling back to the
/// other spread measure when one is zero.
pub fn silverman_bandwidth(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut s = x.to_vec();
    s.sort_unstable_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (s.len() - 1) as f64;
        let i = pos.floor() as usize;
        let t = pos - i as f64;
        if i + 1 < s.len() {
            s[i] + t * (s[i + 1] - s[i])
        } else {
            s[i]
        }
    };
    let iqr = (q(0.75) - q(0.25)) / 1.34;
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr),
        (true, false) => sd,
        (false, true) => iqr,
        (false, false) => 0.0,
    };
    0.9 * spread * n.powf(-0.2)
}

/// Unnormalized reflected KDE on the grid via linear binning and a truncated
/// kernel table.
fn kde_values(x: &[f64], m: usize) -> Vec<f64> {
    let dx = 1.0 / (m - 1) as f64;
    let h = silverman_bandwidth(x).max(dx);
    let mut counts = vec![0.0; m];
    for &v in x {
        let pos = v * (m - 1) as f64;
        let i = (pos.floor() as usize).min(m - 2);
        let t = pos - i as f64;
        counts[i] += 1.0 - t;
        counts[i + 1] += t;
    }
    let reach = ((6.0 * h / dx).ceil() as usize).min(2 * m);
    let table: Vec<f64> = (0..=reach)
        .map(|d| {
            let u = d as f64 * dx / h;
            INV_SQRT_2PI * (-0.5 * u * u).exp()
        })
        .collect();
    let last = (m - 1) as isize;
    let mut out = vec![0.0; m];
    for (i, &c) in counts.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let i = i as isize;
        let lo = (i - reach as isize).max(0);
        let hi = (i + reach as isize).min(last);
        for j in lo..=hi {
            out[j as usize] += c * table[(j - i).unsigned_abs()];
        }
        // Mirror images at 0 and 1.
        for j in 0..=(reach as isize - i).min(last) {
            out[j as usize] += c * table[(j + i) as usize];
        }
        for j in (2 * last - i - reach as isize).max(0)..=last {
            out[j as usize] += c * table[(2 * last - i - j) as usize];
        }
    }
    out
}

fn histogram_density(x: &[f64], m: usize, bins: usize) -> Result<GriddedDensity> {
    if bins == 0 {
        return Err(Error::InvalidParameter("histogram needs at least one bin".into()));
    }
    let mut counts = vec![0.0; bins];
    for &v in x {
        counts[((v * bins as f64) as usize).min(bins - 1)] += 1.0;
    }
    let values = (0..m)
        .map(|k| {
            let g = k as f64 / (m - 1) as f64;
            counts[((g * bins as f64) as usize).min(bins - 1)]
        })
        .collect();
    GriddedDensity::from_pdf_values(values)
}

/// `λ(1-λ)^{j-1}` for `j = 1..=j_max`, renormalized.
pub fn ewma_weights(lambda: f64, j_max: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..j_max).map(|j| lambda * (1.0 - lambda).powi(j as i32)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Window layout and grid for the EWMA mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EwmaOptions {
    /// Length of the shortest window; window `j` holds `j·block` points.
    pub block: usize,
    pub j_max: usize,
    pub grid: usize,
    #[serde(default)]
    pub method: EmpiricalMethod,
}

impl Default for EwmaOptions {
    fn default() -> Self {
        Self {
            block: DAY,
            j_max: DEFAULT_WINDOWS,
            grid: DEFAULT_GRID,
            method: EmpiricalMethod::Kde,
        }
    }
}

impl EwmaOptions {
    pub fn min_history(&self) -> usize {
        self.block * self.j_max
    }
}

/// Geometric mixture of empirical densities over nested recent windows.
#[derive(Debug, Clone, PartialEq)]
pub struct EwmaMixture {
    pub lambda: f64,
    pub j_max: usize,
    pub components: Vec<GriddedDensity>,
    pub weights: Vec<f64>,
}

impl EwmaMixture {
    /// The mixture as one gridded density.
    pub fn density(&self) -> Result<GriddedDensity> {
        let m = self.components[0].pdf_values().len();
        let mut pdf = vec![0.0; m];
        for (c, w) in self.components.iter().zip(&self.weights) {
            for (acc, v) in pdf.iter_mut().zip(c.pdf_values()) {
                *acc += w * v;
            }
        }
        GriddedDensity::from_pdf_values(pdf)
    }
}

/// The `j_max` window densities ending at the last element of `history`.
pub fn window_components(history: &[f64], opts: &EwmaOptions) -> Result<Vec<GriddedDensity>> {
    if history.len() < opts.min_history() {
        return Err(Error::NotEnoughData {
            needed: opts.min_history(),
            got: history.len(),
        });
    }
    let n = history.len();
    (1..=opts.j_max)
        .map(|j| fit_empirical_with(&history[n - j * opts.block..], opts.grid, opts.method))
        .collect()
}

/// The EWMA mixture at the end of `history`; one density for all horizons.
pub fn ewma_density_forecast(history: &[f64], lambda: f64) -> Result<EwmaMixture> {
    ewma_density_forecast_with(history, lambda, &EwmaOptions::default())
}

pub fn ewma_density_forecast_with(history: &[f64], lambda: f64, opts: &EwmaOptions) -> Result<EwmaMixture> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidParameter(format!("lambda {lambda} outside (0,1)")));
    }
    let components = window_components(history, opts)?;
    Ok(EwmaMixture {
        lambda,
        j_max: opts.j_max,
        weights: ewma_weights(lambda, opts.j_max),
        components,
    })
}

/// Result of the one-step likelihood maximization over `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaFit {
    pub lambda: f64,
    pub loglik: f64,
    /// Log-likelihood range over the search interval is below 1.92 (half the
    /// 95% χ²₁ point), so `λ` is not identified.
    pub flat: bool,
    pub n_obs: usize,
}

const LAMBDA_LO: f64 = 0.01;
const LAMBDA_HI: f64 = 0.99;

/// Golden-section maximization of `Σ log f_{t+1|t}(λ; y_{t+1})` over
/// `(0.01, 0.99)`.
pub fn fit_lambda(train: &[f64]) -> Result<LambdaFit> {
    fit_lambda_with(train, &EwmaOptions::default())
}

pub fn fit_lambda_with(train: &[f64], opts: &EwmaOptions) -> Result<LambdaFit> {
    let need = opts.min_history() + opts.block;
    if train.len() < need {
        return Err(Error::NotEnoughData {
            needed: need,
            got: train.len(),
        });
    }
    // Component densities at each next observation do not depend on λ, and
    // a mixture of unit-mass components needs no renormalization.
    let rows: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        (opts.min_history()..train.len())
            .into_par_iter()
            .map(|t| {
                let comps = window_components(&train[..t], opts)?;
                Ok(comps.iter().map(|c| c.pdf(train[t])).collect())
            })
            .collect::<Result<_>>()?
    };
    let ll = |lambda: f64| -> f64 {
        let w = ewma_weights(lambda, opts.j_max);
        rows.iter()
            .map(|at: &Vec<f64>| at.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>().max(1e-300).ln())
            .sum()
    };
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (LAMBDA_LO, LAMBDA_HI);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (ll(c), ll(d));
    while b - a > 1e-6 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = ll(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = ll(d);
        }
    }
    let lambda = 0.5 * (a + b);
    let best = ll(lambda);
    let lo = ll(LAMBDA_LO).min(ll(LAMBDA_HI)).min(best);
    Ok(LambdaFit {
        lambda,
        loglik: best,
        flat: best - lo < 1.92,
        n_obs: rows.len(),
    })
}

/// Rolling `Σ_{j=1}^N (y_{t+1-j} - y_{t-j})² / N`; entry `i` belongs to
/// origin `t = i + N`, so the output has `len - N` entries.
pub fn realized_variance(history: &[f64], n: usize) -> Result<Vec<f64>> {
    if n == 0 || history.len() <= n {
        return Err(Error::NotEnoughData {
            needed: n + 1,
            got: history.len(),
        });
    }
    let sq: Vec<f64> = history.windows(2).map(|w| (w[1] - w[0]).powi(2)).collect();
    Ok((n..history.len())
        .map(|t| sq[t - n..t].iter().sum::<f64>() / n as f64)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn persistence_examples() {
        let alt: Vec<f64> = (0..60).map(|i| if i % 2 == 0 { 0.5 } else { 0.52 }).collect();
        let d = persistence_forecast(&alt, 48).unwrap();
        assert!((d.scale2() - 0.0004).abs() < 1e-15);
        assert_eq!(d.loc(), alt[59]);
        let flat = persistence_forecast(&[0.3; 60], 48).unwrap();
        assert_eq!(flat.scale2(), MIN_SCALE2);
        assert!(persistence_forecast(&[0.3; 48], 48).is_err());
    }

    #[test]
    fn persistence_shift_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h: Vec<f64> = (0..100).map(|_| rng.random_range(0.2..0.6)).collect();
        let shifted: Vec<f64> = h.iter().map(|v| v + 0.125).collect();
        let a = persistence_forecast(&h, 48).unwrap().scale2();
        let b = persistence_forecast(&shifted, 48).unwrap().scale2();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn constant_examples() {
        let d = constant_forecast(&[0.2, 0.4]).unwrap();
        assert!((d.loc() - 0.3).abs() < 1e-15);
        assert!((d.scale2() - 0.02).abs() < 1e-15);
        let sym = constant_forecast(&[0.1, 0.9, 0.4, 0.6]).unwrap();
        assert!((sym.mean() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn kde_of_uniform_sample_is_flat() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>()).collect();
        let d = fit_empirical(&x, 512).unwrap();
        let sup = d.pdf_values().iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        assert!(sup < 0.05, "{sup}");
    }

    #[test]
    fn kde_mode_tracks_cluster() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..2000).map(|_| 0.1 + rng.random_range(-0.005..0.005)).collect();
        let d = fit_empirical(&x, 512).unwrap();
        let (k, _) = d
            .pdf_values()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert!((d.grid()[k] - 0.1).abs() < 0.02);
        let total: f64 = d.pdf_values().windows(2).map(|w| 0.5 * (w[0] + w[1]) / 511.0).sum();
        assert!((total - 1.0).abs() < 1e-8);
    }

    #[test]
    fn kde_rejects_short_windows() {
        assert!(fit_empirical(&[0.5; 95], 512).is_err());
    }

    #[test]
    fn histogram_flag_integrates_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x: Vec<f64> = (0..500).map(|_| rng.random::<f64>().powi(2)).collect();
        let d = fit_empirical_with(&x, 512, EmpiricalMethod::Histogram { bins: 40 }).unwrap();
        assert!((d.cdf_values()[511] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weights_geometric() {
        let w = ewma_weights(0.1988, 14);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        for j in 0..13 {
            assert!((w[j + 1] / w[j] - (1.0 - 0.1988)).abs() < 1e-12);
        }
    }

    #[test]
    fn lambda_near_one_is_latest_day() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut h: Vec<f64> = (0..96 * 13).map(|_| rng.random_range(0.6..0.9)).collect();
        h.extend((0..96).map(|_| rng.random_range(0.1..0.3)));
        let mix = ewma_density_forecast(&h, 0.999).unwrap().density().unwrap();
        let day = fit_empirical(&h[h.len() - 96..], 512).unwrap();
        for y in [0.15, 0.2, 0.5, 0.7] {
            assert!((mix.pdf(y) - day.pdf(y)).abs() < 0.01 * (1.0 + day.pdf(y)));
        }
        assert!(ewma_density_forecast(&h[1..], 0.5).is_err());
    }

    #[test]
    fn realized_variance_examples() {
        assert!(realized_variance(&[0.3; 60], 48).unwrap().iter().all(|v| *v == 0.0));
        let mut s = vec![0.3; 100];
        for v in &mut s[50..] {
            *v = 0.4;
        }
        let rv = realized_variance(&s, 48).unwrap();
        for (i, v) in rv.iter().enumerate() {
            let t = i + 48;
            let expected = if (50..50 + 48).contains(&t) { 0.01 / 48.0 } else { 0.0 };
            assert!((v - expected).abs() < 1e-15, "t={t}");
        }
        let p = persistence_forecast(&s[..=70], 48).unwrap();
        assert!((p.scale2() - rv[70 - 48]).abs() < 1e-15);
    }
}
