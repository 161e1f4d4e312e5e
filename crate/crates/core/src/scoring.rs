//! Point and density forecast scores and calibration diagnostics.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::density::DensityForecast;
use crate::error::{Error, Result};

/// Trapezoid nodes for CRPS.
pub const CRPS_GRID: usize = 2048;
/// Finer grid for the refinement check.
pub const CRPS_GRID_FINE: usize = 4096;
/// Largest allowed disagreement between the two CRPS grids.
pub const CRPS_REFINE_TOL: f64 = 1e-5;
/// pdf floor inside the NLL.
pub const PDF_FLOOR: f64 = 1e-300;
/// Subsets smaller than this are flagged as low power.
pub const MIN_SUBSET: usize = 50;

/// The forecast mean.
pub fn point_forecast(d: &DensityForecast) -> Result<f64> {
    d.mean()
}

pub fn mae(errors: &[f64]) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::Empty);
    }
    Ok(sorted_sum(errors.iter().map(|e| e.abs()).collect()) / errors.len() as f64)
}

pub fn rmse(errors: &[f64]) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::Empty);
    }
    Ok((sorted_sum(errors.iter().map(|e| e * e).collect()) / errors.len() as f64).sqrt())
}

/// Sum in ascending order, so the result does not depend on input order.
fn sorted_sum(mut v: Vec<f64>) -> f64 {
    v.sort_unstable_by(f64::total_cmp);
    v.iter().sum()
}

/// `∫₀¹ [F(y) - 1{y ≥ y_obs}]² dy` by the trapezoid rule on a 2048-point
/// grid with `y_obs` inserted as a node.
pub fn crps(d: &DensityForecast, y_obs: f64) -> Result<f64> {
    crps_on_grid(d, y_obs, CRPS_GRID)
}

/// CRPS on the default grid, checked against a grid twice as fine.
pub fn crps_refined(d: &DensityForecast, y_obs: f64) -> Result<f64> {
    let coarse = crps_on_grid(d, y_obs, CRPS_GRID)?;
    let fine = crps_on_grid(d, y_obs, CRPS_GRID_FINE)?;
    if (coarse - fine).abs() > CRPS_REFINE_TOL {
        return Err(Error::Quadrature {
            last_change: (coarse - fine).abs(),
        });
    }
    Ok(coarse)
}

/// Below this the squared cdf (or squared survival) is treated as exactly 0.
const NEGLIGIBLE: f64 = 1e-9;

/// Trapezoid CRPS on `m` uniform nodes. Stretches where the integrand is
/// indistinguishable from 0 or 1 are located by bisection and summed in
/// closed form.
pub fn crps_on_grid(d: &DensityForecast, y_obs: f64, m: usize) -> Result<f64> {
    crate::transforms::check_open_unit(y_obs)?;
    let dx = 1.0 / (m - 1) as f64;
    let node = |i: usize| i as f64 * dx;
    let cdf = |x: f64| d.cdf(x);
    // Last node at or below y_obs.
    let k = ((y_obs / dx).floor() as usize).min(m - 2);
    let f_obs = cdf(y_obs);
    if !f_obs.is_finite() {
        return Err(Error::InvalidParameter("forecast cdf is not finite".into()));
    }
    let below = piece(&cdf, &node, 0, k, |f| f * f);
    let below = below.total + 0.5 * (y_obs - node(k)) * (below.last.powi(2) + f_obs * f_obs);
    let above = piece_rev(&cdf, &node, k + 1, m - 1, |f| (1.0 - f) * (1.0 - f));
    let above = above.total + 0.5 * (node(k + 1) - y_obs) * ((1.0 - f_obs).powi(2) + (1.0 - above.first).powi(2));
    Ok((below + above).max(0.0))
}

struct Piece {
    total: f64,
    /// cdf at the last node (forward) or the first node (reverse).
    last: f64,
    first: f64,
}

/// First index in `lo..=hi` with `pred(cdf(node(i)))`, or `hi + 1`.
fn first_where<C, N, P>(cdf: &C, node: &N, lo: usize, hi: usize, pred: P) -> usize
where
    C: Fn(f64) -> f64,
    N: Fn(usize) -> f64,
    P: Fn(f64) -> bool,
{
    let (mut a, mut b) = (lo, hi + 1);
    while a < b {
        let mid = a + (b - a) / 2;
        if pred(cdf(node(mid))) {
            b = mid;
        } else {
            a = mid + 1;
        }
    }
    a
}

/// Trapezoid sum of `q(F)` over nodes `lo..=hi` where `q(F) = F²`; nodes
/// with negligible `F` contribute 0 and nodes with `F ≈ 1` contribute 1.
fn piece<C, N, Q>(cdf: &C, node: &N, lo: usize, hi: usize, q: Q) -> Piece
where
    C: Fn(f64) -> f64,
    N: Fn(usize) -> f64,
    Q: Fn(f64) -> f64,
{
    let a = first_where(cdf, node, lo, hi, |f| f * f >= NEGLIGIBLE * NEGLIGIBLE);
    let c = first_where(cdf, node, a.min(hi), hi, |f| (1.0 - f) <= NEGLIGIBLE * NEGLIGIBLE);
    let value = |i: usize, cache: &mut Option<(usize, f64)>| -> f64 {
        if i < a {
            0.0
        } else if i >= c {
            1.0
        } else {
            if let Some((j, f)) = *cache {
                if j == i {
                    return f;
                }
            }
            let f = cdf(node(i));
            *cache = Some((i, f));
            f
        }
    };
    let mut cache = None;
    let mut total = 0.0;
    let start = a.saturating_sub(1).max(lo);
    let stop = c.min(hi);
    let mut prev = q(value(start, &mut cache));
    for i in start + 1..=stop {
        let cur = q(value(i, &mut cache));
        total += 0.5 * (node(i) - node(i - 1)) * (prev + cur);
        prev = cur;
    }
    if c < hi {
        total += node(hi) - node(c);
    }
    let last = value(hi, &mut cache);
    Piece { total, last, first: 0.0 }
}

/// Trapezoid sum of `q(F) = (1-F)²` over nodes `lo..=hi`.
fn piece_rev<C, N, Q>(cdf: &C, node: &N, lo: usize, hi: usize, q: Q) -> Piece
where
    C: Fn(f64) -> f64,
    N: Fn(usize) -> f64,
    Q: Fn(f64) -> f64,
{
    // Nodes with F ≈ 0 give 1, nodes with (1-F) negligible give 0.
    let a = first_where(cdf, node, lo, hi, |f| f * f >= NEGLIGIBLE * NEGLIGIBLE);
    let c = first_where(cdf, node, a.min(hi), hi, |f| (1.0 - f) * (1.0 - f) < NEGLIGIBLE * NEGLIGIBLE);
    let f_at = |i: usize| -> f64 {
        if i < a {
            0.0
        } else if i >= c {
            1.0
        } else {
            cdf(node(i))
        }
    };
    let mut total = 0.0;
    if a > lo + 1 {
        total += node(a - 1) - node(lo);
    }
    let start = a.saturating_sub(1).max(lo);
    let stop = c.min(hi);
    let mut prev = q(f_at(start));
    for i in start + 1..=stop {
        let cur = q(f_at(i));
        total += 0.5 * (node(i) - node(i - 1)) * (prev + cur);
        prev = cur;
    }
    Piece {
        total,
        last: 0.0,
        first: f_at(lo),
    }
}

/// Precomputed cdf on the CRPS grid for a density that is scored against
/// many observations (horizon-invariant forecasts).
#[derive(Debug, Clone)]
pub struct CrpsTable {
    dx: f64,
    cdf: Vec<f64>,
    /// `below[k]` = trapezoid of F² over nodes `0..=k`.
    below: Vec<f64>,
    /// `above[k]` = trapezoid of (1-F)² over nodes `k..=m-1`.
    above: Vec<f64>,
}

impl CrpsTable {
    pub fn new(d: &DensityForecast) -> Self {
        let m = CRPS_GRID;
        let dx = 1.0 / (m - 1) as f64;
        let cdf: Vec<f64> = (0..m).map(|i| d.cdf(i as f64 * dx)).collect();
        let mut below = vec![0.0; m];
        for i in 1..m {
            below[i] = below[i - 1] + 0.5 * dx * (cdf[i - 1].powi(2) + cdf[i].powi(2));
        }
        let mut above = vec![0.0; m];
        for i in (0..m - 1).rev() {
            above[i] = above[i + 1] + 0.5 * dx * ((1.0 - cdf[i]).powi(2) + (1.0 - cdf[i + 1]).powi(2));
        }
        Self { dx, cdf, below, above }
    }

    /// CRPS at `y_obs` given the forecast cdf there.
    pub fn crps(&self, y_obs: f64, f_obs: f64) -> f64 {
        let m = self.cdf.len();
        let k = ((y_obs / self.dx).floor() as usize).min(m - 2);
        let xk = k as f64 * self.dx;
        let xk1 = (k + 1) as f64 * self.dx;
        let left = self.below[k] + 0.5 * (y_obs - xk) * (self.cdf[k].powi(2) + f_obs * f_obs);
        let right = self.above[k + 1] + 0.5 * (xk1 - y_obs) * ((1.0 - f_obs).powi(2) + (1.0 - self.cdf[k + 1]).powi(2));
        (left + right).max(0.0)
    }
}

/// Negative log predictive density, with the pdf floored at [`PDF_FLOOR`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NllScore {
    pub value: f64,
    pub floored: bool,
}

pub fn nll(d: &DensityForecast, y_obs: f64) -> Result<NllScore> {
    crate::transforms::check_open_unit(y_obs)?;
    let p = d.pdf(y_obs);
    Ok(NllScore {
        value: -p.max(PDF_FLOOR).ln(),
        floored: !(p >= PDF_FLOOR),
    })
}

/// Probability integral transform `F(y_obs)`.
pub fn pit(d: &DensityForecast, y_obs: f64) -> Result<f64> {
    crate::transforms::check_open_unit(y_obs)?;
    Ok(d.cdf(y_obs))
}

/// Calibration summary of a set of PIT values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitDiagnostics {
    pub n: usize,
    /// Percentage of PIT values below 0.05, 0.5, 0.95.
    pub p5: f64,
    pub p50: f64,
    pub p95: f64,
    pub dev5: f64,
    pub dev50: f64,
    pub dev95: f64,
    pub histogram_20bins: Vec<u64>,
    /// Kolmogorov–Smirnov distance to U(0,1) and its asymptotic p-value.
    pub ks_stat: f64,
    pub ks_pvalue: f64,
    /// Pearson χ² of the 20-bin histogram against uniform (19 df).
    pub chi2_stat: f64,
    pub chi2_pvalue: f64,
    pub low_power: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pit_values: Vec<f64>,
}

impl PitDiagnostics {
    /// First plus last histogram bin relative to their uniform expectation.
    pub fn tail_ratio(&self) -> f64 {
        let h = &self.histogram_20bins;
        (h[0] + h[19]) as f64 / (2.0 * self.n as f64 / 20.0)
    }
}

pub fn pit_deviations(pit_values: &[f64]) -> Result<PitDiagnostics> {
    if pit_values.is_empty() {
        return Err(Error::Empty);
    }
    let n = pit_values.len();
    let pct = |k: f64| 100.0 * pit_values.iter().filter(|p| **p < k).count() as f64 / n as f64;
    let (p5, p50, p95) = (pct(0.05), pct(0.5), pct(0.95));
    let mut hist = vec![0u64; 20];
    for &p in pit_values {
        hist[((p * 20.0).floor().max(0.0) as usize).min(19)] += 1;
    }
    let mut sorted = pit_values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let nf = n as f64;
    let ks = sorted
        .iter()
        .enumerate()
        .map(|(i, &u)| ((i + 1) as f64 / nf - u).max(u - i as f64 / nf))
        .fold(0.0, f64::max);
    let expected = nf / 20.0;
    let chi2: f64 = hist.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    Ok(PitDiagnostics {
        n,
        p5,
        p50,
        p95,
        dev5: p5 - 5.0,
        dev50: p50 - 50.0,
        dev95: p95 - 95.0,
        histogram_20bins: hist,
        ks_stat: ks,
        ks_pvalue: ks_pvalue(ks, n),
        chi2_stat: chi2,
        chi2_pvalue: chi2_sf(chi2, 19.0),
        low_power: n < MIN_SUBSET,
        pit_values: Vec::new(),
    })
}

/// Asymptotic Kolmogorov p-value with Stephens' small-sample adjustment.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Upper tail of the χ² distribution.
pub fn chi2_sf(x: f64, df: f64) -> f64 {
    ChiSquared::new(df).map_or(f64::NAN, |d| d.sf(x))
}

/// Diagnostics on origins whose variance is in the top decile: the
/// `⌈0.1 n⌉` largest, plus any ties with the smallest of them.
pub fn conditional_pit_top_decile(pit_values: &[f64], variances: &[f64]) -> Result<PitDiagnostics> {
    if pit_values.len() != variances.len() {
        return Err(Error::InvalidParameter(format!(
            "{} PIT values but {} variances",
            pit_values.len(),
            variances.len()
        )));
    }
    let subset = top_decile_indices(variances)?;
    let sel: Vec<f64> = subset.iter().map(|&i| pit_values[i]).collect();
    pit_deviations(&sel)
}

/// Indices in the top variance decile, ties included, in ascending order.
pub fn top_decile_indices(variances: &[f64]) -> Result<Vec<usize>> {
    if variances.is_empty() {
        return Err(Error::Empty);
    }
    let k = (variances.len() as f64 * 0.1).ceil() as usize;
    let mut sorted = variances.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let threshold = sorted[k - 1];
    Ok((0..variances.len()).filter(|&i| variances[i] >= threshold).collect())
}

/// Scores of one forecast/observation pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellScore {
    pub error: f64,
    pub crps: f64,
    pub nll: f64,
    pub pit: f64,
    #[serde(default)]
    pub nll_floored: bool,
}

/// Per-horizon averages over a backtest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub horizon: usize,
    pub mae: f64,
    pub rmse: f64,
    pub mean_crps: f64,
    pub mean_nll: f64,
    pub n: usize,
    /// Cells whose pdf hit the NLL floor.
    #[serde(default)]
    pub nll_floored: usize,
}

impl ScoreReport {
    /// Aggregates cells; every mean is a sorted sum, so the result is exactly
    /// invariant to the order of `cells`.
    pub fn from_cells(horizon: usize, cells: &[CellScore]) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::Empty);
        }
        let n = cells.len() as f64;
        let errors: Vec<f64> = cells.iter().map(|c| c.error).collect();
        Ok(Self {
            horizon,
            mae: mae(&errors)?,
            rmse: rmse(&errors)?,
            mean_crps: sorted_sum(cells.iter().map(|c| c.crps).collect()) / n,
            mean_nll: sorted_sum(cells.iter().map(|c| c.nll).collect()) / n,
            n: cells.len(),
            nll_floored: cells.iter().filter(|c| c.nll_floored).count(),
        })
    }
}

/// Scores one density against one observation.
pub fn score_cell(d: &DensityForecast, y_obs: f64) -> Result<CellScore> {
    let point = point_forecast(d)?;
    let n = nll(d, y_obs)?;
    Ok(CellScore {
        error: y_obs - point,
        crps: crps(d, y_obs)?,
        nll: n.value,
        pit: pit(d, y_obs)?,
        nll_floored: n.floored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::GriddedDensity;
    use crate::transforms::LogisticNormal;
    use crate::truncnorm::TruncNorm;

    fn uniform() -> DensityForecast {
        GriddedDensity::uniform(512).unwrap().into()
    }

    #[test]
    fn point_forecast_examples() {
        let t: DensityForecast = TruncNorm::new(0.5, 0.04).unwrap().into();
        assert!((point_forecast(&t).unwrap() - 0.5).abs() < 1e-14);
        assert!((point_forecast(&uniform()).unwrap() - 0.5).abs() < 1e-6);
        let l: DensityForecast = LogisticNormal::new(0.0, 1.0).unwrap().into();
        assert!((point_forecast(&l).unwrap() - 0.5).abs() < 1e-8);
    }

    #[test]
    fn error_metrics() {
        assert_eq!(mae(&[0.0; 3]).unwrap(), 0.0);
        assert_eq!(rmse(&[0.0; 3]).unwrap(), 0.0);
        assert_eq!(mae(&[3.0, -4.0]).unwrap(), 3.5);
        assert!((rmse(&[3.0, -4.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
        assert!(mae(&[]).is_err());
    }

    #[test]
    fn crps_uniform_closed_form() {
        for y in [0.2, 0.5, 0.8, 0.013, 0.999] {
            let exact = (y * y * y + (1.0 - y) * (1.0 - y) * (1.0 - y)) / 3.0;
            assert!((crps(&uniform(), y).unwrap() - exact).abs() < 1e-6, "y={y}");
        }
    }

    #[test]
    fn crps_point_mass_is_absolute_error() {
        for (mu, y) in [(0.3, 0.3), (0.3, 0.5), (0.8, 0.1)] {
            let d: DensityForecast = TruncNorm::new(mu, 1e-8).unwrap().into();
            assert!((crps(&d, y).unwrap() - (y - mu).abs()).abs() < 1e-3);
        }
    }

    #[test]
    fn crps_table_matches_direct() {
        for d in [
            DensityForecast::from(TruncNorm::new(0.4, 0.01).unwrap()),
            DensityForecast::from(LogisticNormal::new(-0.5, 2.0).unwrap()),
            uniform(),
        ] {
            let table = CrpsTable::new(&d);
            for y in [0.01, 0.3, 0.4, 0.77, 0.999] {
                let direct = crps(&d, y).unwrap();
                assert!((table.crps(y, d.cdf(y)) - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn crps_refinement_agrees() {
        let d: DensityForecast = TruncNorm::new(0.2, 0.0025).unwrap().into();
        assert!(crps_refined(&d, 0.27).is_ok());
    }

    #[test]
    fn nll_and_pit_examples() {
        assert!(nll(&uniform(), 0.3).unwrap().value.abs() < 1e-12);
        assert!((pit(&uniform(), 0.3).unwrap() - 0.3).abs() < 1e-12);
        let t: DensityForecast = TruncNorm::new(0.4, 0.01).unwrap().into();
        assert!((pit(&t, t.quantile(0.5)).unwrap() - 0.5).abs() < 1e-9);
        let sharp: DensityForecast = TruncNorm::new(0.1, 1e-8).unwrap().into();
        let far = nll(&sharp, 0.9).unwrap();
        assert!(far.floored && (far.value - 300.0 * 10f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn pit_deviation_examples() {
        let grid: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let d = pit_deviations(&grid).unwrap();
        assert!(d.dev5.abs() <= 0.1 && d.dev50.abs() <= 0.1 && d.dev95.abs() <= 0.1);
        assert!(d.histogram_20bins.iter().all(|c| *c == 50));
        let point = pit_deviations(&[0.49; 100]).unwrap();
        assert_eq!((point.dev5, point.dev50, point.dev95), (-5.0, 50.0, 5.0));
        assert!(pit_deviations(&[]).is_err());
    }

    #[test]
    fn ks_pvalue_sanity() {
        assert!(ks_pvalue(0.0, 100) == 1.0);
        assert!((ks_pvalue(1.36 / 1000f64.sqrt(), 1000) - 0.05).abs() < 0.01);
        assert!(ks_pvalue(0.2, 1000) < 1e-10);
        assert!((chi2_sf(30.1435, 19.0) - 0.05).abs() < 1e-3);
    }

    #[test]
    fn top_decile_selection() {
        let v: Vec<f64> = (0..95).map(|i| i as f64).collect();
        assert_eq!(top_decile_indices(&v).unwrap(), (85..95).collect::<Vec<_>>());
        let mut tied = v.clone();
        tied[10] = 85.0;
        assert_eq!(top_decile_indices(&tied).unwrap().len(), 11);
        let d = conditional_pit_top_decile(&vec![0.5; 95], &v).unwrap();
        assert!(d.low_power && d.n == 10);
    }

    #[test]
    fn report_is_order_invariant() {
        let cells: Vec<CellScore> = (0..200)
            .map(|i| {
                let x = (i as f64 * 0.37).sin();
                CellScore {
                    error: x * 0.1,
                    crps: x.abs() * 0.03 + 1e-3,
                    nll: -x,
                    pit: 0.5 + 0.4 * x,
                    nll_floored: false,
                }
            })
            .collect();
        let a = ScoreReport::from_cells(1, &cells).unwrap();
        let mut rev = cells.clone();
        rev.reverse();
        rev.swap(3, 150);
        assert_eq!(a, ScoreReport::from_cells(1, &rev).unwrap());
        assert!(a.rmse >= a.mae);
    }
}
