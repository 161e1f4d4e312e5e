//! Standard normal helpers and Gauss–Legendre quadrature.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::OnceLock;

use libm::erfc;
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};

/// `1/sqrt(2π)`.
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// `sqrt(2/π)`, the mean of `|Z|` for standard normal `Z`.
pub const MEAN_ABS_NORMAL: f64 = 0.797_884_560_802_865_4;

/// Standard normal density.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function, through `erfc` so both tails keep
/// full relative precision.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `1 - Φ(x)`.
#[inline]
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Standard normal quantile function, polished with Newton steps on the
/// accurate cdf.
pub fn norm_ppf(p: f64) -> f64 {
    let mut x = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    if !x.is_finite() {
        return x;
    }
    for _ in 0..2 {
        let err = if x < 0.0 { norm_cdf(x) - p } else { (1.0 - p) - norm_sf(x) };
        let d = norm_pdf(x);
        if d > 0.0 {
            x -= err / d;
        }
    }
    x
}

/// `Φ(b) - Φ(a)` for `a <= b`, evaluated on whichever tail keeps precision.
#[inline]
pub fn norm_interval(a: f64, b: f64) -> f64 {
    if a > 0.0 {
        norm_sf(a) - norm_sf(b)
    } else if b < 0.0 {
        norm_cdf(b) - norm_cdf(a)
    } else {
        1.0 - norm_cdf(a) - norm_sf(b)
    }
}

/// Logistic function `1/(1+e^{-z})`, stable for large `|z|`.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// Composite 16-point Gauss–Legendre estimate of `∫_a^b f` on `panels` equal panels.
pub fn gl_composite<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let (nodes, weights) = gl16();
    let width = (b - a) / panels as f64;
    let half = 0.5 * width;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * width;
        let mut s = 0.0;
        for (x, w) in nodes.iter().zip(weights) {
            s += w * f(mid + half * x);
        }
        total += s * half;
    }
    total
}

/// Composite Gauss–Legendre with panel doubling, starting from `min_panels`,
/// until two successive estimates differ by less than `tol`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    min_panels: usize,
) -> Result<f64> {
    const MAX_PANELS: usize = 1 << 14;
    let mut panels = min_panels.max(1);
    let mut prev = gl_composite(&f, a, b, panels);
    let mut change = f64::INFINITY;
    while panels < MAX_PANELS {
        panels *= 2;
        let next = gl_composite(&f, a, b, panels);
        change = (next - prev).abs();
        if change < tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Quadrature {
        last_change: change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(16);
        let sum_w: f64 = w.iter().sum();
        assert!((sum_w - 2.0).abs() < 1e-14);
        // x^30 is degree 30 < 32.
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((v - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn normal_cdf_reference_values() {
        assert!((norm_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((norm_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        // Φ(-8) from high-precision tables.
        let r = norm_cdf(-8.0) / 6.220_960_574_271_785e-16;
        assert!((r - 1.0).abs() < 1e-12);
        assert!((norm_sf(8.0) / norm_cdf(-8.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for p in [1e-10, 0.01, 0.3, 0.5, 0.9, 1.0 - 1e-9] {
            assert!((norm_cdf(norm_ppf(p)) / p - 1.0).abs() < 1e-9, "p={p}");
        }
    }

    #[test]
    fn interval_uses_the_precise_tail() {
        let v = norm_interval(9.0, 10.0);
        let expected = norm_sf(9.0) - norm_sf(10.0);
        assert!(v > 0.0 && (v / expected - 1.0).abs() < 1e-14);
        assert!((norm_interval(-1.0, 1.0) - 0.682_689_492_137_085_9).abs() < 1e-15);
    }

    #[test]
    fn composite_integration_of_gaussian() {
        let v = integrate(norm_pdf, -12.0, 12.0, 1e-12, 2).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(800.0) == 1.0 && sigmoid(-800.0) >= 0.0);
        assert!((sigmoid(-40.0) - (-40f64).exp() / (1.0 + (-40f64).exp())).abs() < 1e-30);
    }
}
