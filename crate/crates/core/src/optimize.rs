//! Derivative-free maximization shared by every likelihood fit.
//!
//! Nelder–Mead runs in an unconstrained space; each coordinate is mapped
//! into its admissible set by a [`ParamTransform`], so every point the
//! objective sees is feasible. Several starts (caller supplied plus a Halton
//! sequence over the transformed unit box) are searched independently and the
//! best result wins.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::sigmoid;

/// Per-coordinate map from the real line onto an admissible set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ParamTransform {
    /// Open interval `(lo, hi)` via a scaled logistic.
    Interval { lo: f64, hi: f64 },
    /// `(0, ∞)` via `exp`.
    Positive,
    Unbounded,
}

impl ParamTransform {
    pub fn to_constrained(&self, xi: f64) -> f64 {
        match *self {
            ParamTransform::Interval { lo, hi } => {
                let x = lo + (hi - lo) * sigmoid(xi);
                if x <= lo {
                    lo.next_up()
                } else if x >= hi {
                    hi.next_down()
                } else {
                    x
                }
            }
            ParamTransform::Positive => xi.exp().clamp(f64::MIN_POSITIVE, f64::MAX),
            ParamTransform::Unbounded => xi,
        }
    }

    pub fn to_unconstrained(&self, x: f64) -> f64 {
        match *self {
            ParamTransform::Interval { lo, hi } => {
                let u = ((x - lo) / (hi - lo)).clamp(1e-12, 1.0 - 1e-12);
                (u / (1.0 - u)).ln()
            }
            ParamTransform::Positive => x.max(f64::MIN_POSITIVE).ln(),
            ParamTransform::Unbounded => x,
        }
    }

    fn from_unit(&self, u: f64) -> f64 {
        let xi = (u / (1.0 - u)).ln();
        self.to_constrained(xi)
    }
}

/// Maps partial autocorrelations in (-1,1) to the coefficients of a stable
/// polynomial `1 - Σ c_j B^j` (Durbin–Levinson recursion).
pub fn pacf_to_coefficients(pacf: &[f64]) -> Vec<f64> {
    let mut coef: Vec<f64> = Vec::with_capacity(pacf.len());
    for (k, &r) in pacf.iter().enumerate() {
        let prev = coef.clone();
        for j in 0..k {
            coef[j] = prev[j] - r * prev[k - 1 - j];
        }
        coef.push(r);
    }
    coef
}

/// Inverse of [`pacf_to_coefficients`]. Returns `None` when the polynomial is
/// not stable (some partial autocorrelation reaches ±1).
pub fn coefficients_to_pacf(coef: &[f64]) -> Option<Vec<f64>> {
    let p = coef.len();
    let mut cur = coef.to_vec();
    let mut pacf = vec![0.0; p];
    for k in (0..p).rev() {
        let r = cur[k];
        if !(r.abs() < 1.0) {
            return None;
        }
        pacf[k] = r;
        let denom = 1.0 - r * r;
        let prev: Vec<f64> = (0..k).map(|j| (cur[j] + r * cur[k - 1 - j]) / denom).collect();
        cur = prev;
    }
    Some(pacf)
}

/// True when `1 - Σ c_j B^j` has all roots outside the unit circle.
pub fn is_stable(coef: &[f64]) -> bool {
    coefficients_to_pacf(coef).is_some()
}

/// A maximization problem over a box-like feasible set.
pub struct OptProblem<F> {
    pub objective: F,
    pub transforms: Vec<ParamTransform>,
    /// Starting points in the constrained space.
    pub starts: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptOptions {
    /// Simplex diameter and relative value-spread tolerance.
    pub tol: f64,
    /// Iteration cap per start.
    pub max_iter: usize,
    /// Extra starts drawn from a Halton sequence over the unit box.
    pub halton_starts: usize,
    /// Fresh-simplex restarts after the first convergence.
    pub restarts: usize,
}

impl Default for OptOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 5000,
            halton_starts: 5,
            restarts: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    /// Maximizer in the constrained space.
    pub argmax: Vec<f64>,
    pub value: f64,
    pub converged: bool,
    pub evaluations: usize,
    /// Which start produced the result.
    pub start_index: usize,
}

/// Maximizes with default options, overriding tolerance and iteration cap.
pub fn maximize<F>(problem: &OptProblem<F>, tol: f64, max_iter: usize) -> Result<OptResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    maximize_with(
        problem,
        &OptOptions {
            tol,
            max_iter,
            ..OptOptions::default()
        },
    )
}

pub fn maximize_with<F>(problem: &OptProblem<F>, opts: &OptOptions) -> Result<OptResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let dim = problem.transforms.len();
    if dim == 0 {
        return Err(Error::InvalidParameter("optimization problem has no coordinates".into()));
    }
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for s in &problem.starts {
        if s.len() != dim {
            return Err(Error::InvalidParameter(format!(
                "start has {} coordinates, problem has {dim}",
                s.len()
            )));
        }
        starts.push(s.iter().zip(&problem.transforms).map(|(x, t)| t.to_unconstrained(*x)).collect());
    }
    for i in 0..opts.halton_starts {
        let u = halton(i + 1, dim);
        starts.push(
            u.iter()
                .zip(&problem.transforms)
                .map(|(u, t)| t.to_unconstrained(t.from_unit(*u)))
                .collect(),
        );
    }
    if starts.is_empty() {
        return Err(Error::InvalidParameter("no starting points".into()));
    }

    let neg = |xi: &[f64]| -> f64 {
        let x: Vec<f64> = xi.iter().zip(&problem.transforms).map(|(v, t)| t.to_constrained(*v)).collect();
        let v = (problem.objective)(&x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            -v
        }
    };

    let runs: Vec<Simplex> = starts
        .par_iter()
        .map(|s| nelder_mead(&neg, s.clone(), opts))
        .collect();

    let mut best: Option<(usize, &Simplex)> = None;
    for (i, r) in runs.iter().enumerate() {
        if best.is_none_or(|(_, b)| r.value < b.value) {
            best = Some((i, r));
        }
    }
    let (idx, run) = best.expect("at least one start");
    if !run.value.is_finite() {
        return Err(Error::NoFiniteStart);
    }
    Ok(OptResult {
        argmax: run.x.iter().zip(&problem.transforms).map(|(v, t)| t.to_constrained(*v)).collect(),
        value: -run.value,
        converged: run.converged,
        evaluations: runs.iter().map(|r| r.evaluations).sum(),
        start_index: idx,
    })
}

struct Simplex {
    x: Vec<f64>,
    value: f64,
    converged: bool,
    evaluations: usize,
}

/// Minimizes `f` from `x0` in the unconstrained space.
fn nelder_mead<G: Fn(&[f64]) -> f64>(f: &G, x0: Vec<f64>, opts: &OptOptions) -> Simplex {
    const REFLECT: f64 = 1.0;
    const EXPAND: f64 = 2.0;
    const CONTRACT: f64 = 0.5;
    const SHRINK: f64 = 0.5;

    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64]| {
        evals += 1;
        f(x)
    };

    let mut best_x = x0;
    let mut best_v = eval(&best_x);
    let mut iters = 0usize;
    let mut converged = false;

    for round in 0..=opts.restarts {
        let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        pts.push(best_x.clone());
        for i in 0..n {
            let mut p = best_x.clone();
            p[i] += 0.1 * p[i].abs().max(1.0);
            pts.push(p);
        }
        let mut vals: Vec<f64> = Vec::with_capacity(n + 1);
        vals.push(best_v);
        for p in &pts[1..] {
            vals.push(eval(p));
        }
        converged = false;

        while iters < opts.max_iter {
            iters += 1;
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
            pts = order.iter().map(|&i| pts[i].clone()).collect();
            vals = order.iter().map(|&i| vals[i]).collect();

            let diameter = pts[1..]
                .iter()
                .flat_map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            let spread = vals[n] - vals[0];
            if diameter < opts.tol && spread <= opts.tol * (1.0 + vals[0].abs()) {
                converged = true;
                break;
            }

            let mut centroid = vec![0.0; n];
            for p in &pts[..n] {
                for (c, v) in centroid.iter_mut().zip(p) {
                    *c += v / n as f64;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                centroid.iter().zip(&pts[n]).map(|(c, w)| c + t * (c - w)).collect()
            };

            let xr = along(REFLECT);
            let vr = eval(&xr);
            if vr < vals[0] {
                let xe = along(REFLECT * EXPAND);
                let ve = eval(&xe);
                if ve < vr {
                    pts[n] = xe;
                    vals[n] = ve;
                } else {
                    pts[n] = xr;
                    vals[n] = vr;
                }
                continue;
            }
            if vr < vals[n - 1] {
                pts[n] = xr;
                vals[n] = vr;
                continue;
            }
            let (xc, vc) = if vr < vals[n] {
                let xc = along(REFLECT * CONTRACT);
                let vc = eval(&xc);
                (xc, vc)
            } else {
                let xc = along(-CONTRACT);
                let vc = eval(&xc);
                (xc, vc)
            };
            if vc < vals[n].min(vr) {
                pts[n] = xc;
                vals[n] = vc;
                continue;
            }
            for i in 1..=n {
                let p: Vec<f64> = pts[0].iter().zip(&pts[i]).map(|(b, x)| b + SHRINK * (x - b)).collect();
                vals[i] = eval(&p);
                pts[i] = p;
            }
        }

        let (bi, bv) = vals
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, v)| if *v < acc.1 { (i, *v) } else { acc });
        let improved = bv < best_v - opts.tol * (1.0 + best_v.abs());
        if bv <= best_v {
            best_x = pts[bi].clone();
            best_v = bv;
        }
        if !converged || (round > 0 && !improved) || iters >= opts.max_iter {
            break;
        }
    }

    Simplex {
        x: best_x,
        value: best_v,
        converged,
        evaluations: evals,
    }
}

const PRIMES: [usize; 20] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71];

/// The `index`-th point of the Halton sequence in `dim` dimensions.
pub fn halton(index: usize, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|d| {
            let base = PRIMES[d % PRIMES.len()];
            let mut f = 1.0;
            let mut r = 0.0;
            let mut i = index;
            while i > 0 {
                f /= base as f64;
                r += f * (i % base) as f64;
                i /= base;
            }
            r
        })
        .collect()
}
