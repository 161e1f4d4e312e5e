//! Gaussian ARIMA(p,1,q)–GARCH(r,s) on the logistic-transformed series.
//!
//! The increments `w_t = z_t - z_{t-1}` follow
//!
//! ```text
//! w_t = μ + Σ φ_i w_{t-i} + Σ θ_j ε_{t-j} + ε_t,    ε_t | F_{t-1} ~ N(0, σ²_t)
//! σ²_t = ω + Σ α_i ε²_{t-i} + Σ β_j σ²_{t-j}
//! ```
//!
//! Fitting maximizes the conditional likelihood (pre-sample innovations 0,
//! pre-sample variances set to the sample variance of `w`). Forecasts iterate
//! the conditional mean with future innovations at zero and combine GARCH
//! variance forecasts with the ψ-weights of the MA representation of `z`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::{self, OptOptions, OptProblem, ParamTransform};
use crate::transforms::LogisticNormal;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Orders of an ARIMA(p,d,q)–GARCH(r,s) model. `d` is 1 unless the
/// stationary (ARMA on levels) path is explicitly requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArimaGarchSpec {
    pub p: usize,
    pub q: usize,
    pub r: usize,
    pub s: usize,
    #[serde(default = "one")]
    pub d: u8,
}

fn one() -> u8 {
    1
}

impl ArimaGarchSpec {
    pub fn arima(p: usize, q: usize) -> Self {
        Self { p, q, r: 0, s: 0, d: 1 }
    }

    pub fn arima_garch(p: usize, q: usize, r: usize, s: usize) -> Self {
        Self { p, q, r, s, d: 1 }
    }

    /// Same orders on undifferenced data.
    pub fn stationary(self) -> Self {
        Self { d: 0, ..self }
    }

    pub fn constant_variance(&self) -> bool {
        self.r == 0 && self.s == 0
    }

    /// Free coefficients: μ, φ, θ, ω (or σ²), α, β.
    pub fn n_params(&self) -> usize {
        2 + self.p + self.q + self.r + self.s
    }

    fn burn_in(&self) -> usize {
        self.p.max(self.q).max(self.r).max(self.s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p > 6 || self.q > 6 || self.r > 2 || self.s > 2 {
            return Err(Error::InvalidParameter(format!(
                "orders {self:?} exceed p,q <= 6 and r,s <= 2"
            )));
        }
        if self.r == 0 && self.s > 0 {
            return Err(Error::InvalidParameter("GARCH with s > 0 needs r > 0".into()));
        }
        if self.d > 1 {
            return Err(Error::InvalidParameter("only d = 0 or d = 1 is supported".into()));
        }
        Ok(())
    }

    /// p, q in 0..=4 crossed with the listed variance orders.
    pub fn default_grid(variance_orders: &[(usize, usize)]) -> Vec<Self> {
        let mut grid = Vec::new();
        for &(r, s) in variance_orders {
            for p in 0..=4 {
                for q in 0..=4 {
                    grid.push(Self::arima_garch(p, q, r, s));
                }
            }
        }
        grid
    }
}

impl std::fmt::Display for ArimaGarchSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.d == 1 {
            write!(f, "ARIMA({},1,{})", self.p, self.q)?;
        } else {
            write!(f, "ARMA({},{})", self.p, self.q)?;
        }
        if !self.constant_variance() {
            write!(f, "-GARCH({},{})", self.r, self.s)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaGarchParams {
    pub mu: f64,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    /// GARCH intercept; the constant innovation variance when r = s = 0.
    pub omega: f64,
    pub alpha_g: Vec<f64>,
    pub beta_g: Vec<f64>,
}

impl ArimaGarchParams {
    /// Random walk with drift `mu` and innovation variance `sigma2`.
    pub fn random_walk(mu: f64, sigma2: f64) -> Self {
        Self {
            mu,
            phi: vec![],
            theta: vec![],
            omega: sigma2,
            alpha_g: vec![],
            beta_g: vec![],
        }
    }

    /// The constant innovation variance, if the model has no GARCH terms.
    pub fn sigma2_const(&self) -> Option<f64> {
        (self.alpha_g.is_empty() && self.beta_g.is_empty()).then_some(self.omega)
    }

    pub fn spec(&self, d: u8) -> ArimaGarchSpec {
        ArimaGarchSpec {
            p: self.phi.len(),
            q: self.theta.len(),
            r: self.alpha_g.len(),
            s: self.beta_g.len(),
            d,
        }
    }

    pub fn validate(&self, spec: &ArimaGarchSpec) -> Result<()> {
        spec.validate()?;
        if self.phi.len() != spec.p
            || self.theta.len() != spec.q
            || self.alpha_g.len() != spec.r
            || self.beta_g.len() != spec.s
        {
            return Err(Error::InvalidParameter("coefficient counts do not match the orders".into()));
        }
        let all = [self.mu, self.omega]
            .into_iter()
            .chain(self.phi.iter().copied())
            .chain(self.theta.iter().copied())
            .chain(self.alpha_g.iter().copied())
            .chain(self.beta_g.iter().copied());
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coefficient".into()));
        }
        if !optimize::is_stable(&self.phi) {
            return Err(Error::InvalidParameter("AR polynomial is not stationary".into()));
        }
        let neg_theta: Vec<f64> = self.theta.iter().map(|t| -t).collect();
        if !optimize::is_stable(&neg_theta) {
            return Err(Error::InvalidParameter("MA polynomial is not invertible".into()));
        }
        if !(self.omega > 0.0) {
            return Err(Error::InvalidParameter("omega must be positive".into()));
        }
        if self.alpha_g.iter().chain(&self.beta_g).any(|v| *v < 0.0) {
            return Err(Error::InvalidParameter("GARCH coefficients must be nonnegative".into()));
        }
        let persistence: f64 = self.alpha_g.iter().chain(&self.beta_g).sum();
        if persistence >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "GARCH persistence {persistence} is not below 1"
            )));
        }
        Ok(())
    }
}

/// Outcome of a likelihood fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub loglik: f64,
    pub bic: f64,
    pub n_params: usize,
    pub n_obs: usize,
    pub converged: bool,
}

impl FitReport {
    pub fn new(loglik: f64, n_params: usize, n_obs: usize, converged: bool) -> Self {
        Self {
            loglik,
            bic: n_params as f64 * (n_obs as f64).ln() - 2.0 * loglik,
            n_params,
            n_obs,
            converged,
        }
    }
}

/// Residuals and conditional variances from one pass over the sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput {
    pub eps: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub loglik: f64,
    /// Terms in the likelihood sum.
    pub n_obs: usize,
    /// Pre-sample variance.
    pub presample_var: f64,
}

/// Population variance, the default pre-sample variance.
pub fn sample_var(w: &[f64]) -> f64 {
    let n = w.len() as f64;
    let m = w.iter().sum::<f64>() / n;
    w.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n
}

/// A spec with its coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaGarchModel {
    pub spec: ArimaGarchSpec,
    pub params: ArimaGarchParams,
}

impl ArimaGarchModel {
    pub fn new(spec: ArimaGarchSpec, params: ArimaGarchParams) -> Result<Self> {
        params.validate(&spec)?;
        Ok(Self { spec, params })
    }

    /// The series the ARMA recursion runs on: increments when `d = 1`.
    pub fn working_series(&self, z: &[f64]) -> Vec<f64> {
        if self.spec.d == 1 {
            z.windows(2).map(|v| v[1] - v[0]).collect()
        } else {
            z.to_vec()
        }
    }

    /// Runs the recursion over `w`. The log-likelihood is `-∞` when a
    /// conditional variance is not positive.
    pub fn filter(&self, w: &[f64]) -> FilterOutput {
        filter_raw(&self.spec, &self.params, w, sample_var(w))
    }

    /// As [`filter`](Self::filter) with an explicit pre-sample variance, so
    /// a pass over training and test data can reuse the training value.
    pub fn filter_with_presample(&self, w: &[f64], presample_var: f64) -> FilterOutput {
        filter_raw(&self.spec, &self.params, w, presample_var)
    }

    /// Mean and variance forecasts of `z` for horizons `1..=h` issued after
    /// the last element of `z`.
    pub fn forecast(&self, z: &[f64], h: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let w = self.working_series(z);
        let need = self.spec.p.max(self.spec.q).max(self.spec.r).max(self.spec.s) + 1;
        if w.len() < need {
            return Err(Error::NotEnoughData { needed: need + self.spec.d as usize, got: z.len() });
        }
        let f = self.filter(&w);
        let origin = w.len() - 1;
        Ok(self.forecast_from(*z.last().expect("nonempty"), &w, &f, origin, h))
    }

    /// Forecasts from position `origin` of an already-filtered working series.
    /// Only `w[..=origin]` and the filter state up to `origin` are used.
    pub fn forecast_from(
        &self,
        level: f64,
        w: &[f64],
        f: &FilterOutput,
        origin: usize,
        h: usize,
    ) -> (Vec<f64>, Vec<f64>) {
        let means = self.mean_path(level, &w[..=origin], &f.eps[..=origin], h);
        let next = self.next_sigma2(&f.eps[..=origin], &f.sigma2[..=origin], f.presample_var);
        let innov = self.innovation_variance_path(next, h);
        let psi = psi_weights(&self.spec, &self.params, h);
        let vars = (1..=h)
            .map(|hh| (1..=hh).map(|j| psi[hh - j].powi(2) * innov[j - 1]).sum())
            .collect();
        (means, vars)
    }

    /// Iterated conditional means with future innovations at zero. `w_hist`
    /// and `eps_hist` end at the forecast origin; `level` is `z` there.
    pub fn mean_path(&self, level: f64, w_hist: &[f64], eps_hist: &[f64], h: usize) -> Vec<f64> {
        let (p, q) = (self.spec.p, self.spec.q);
        let pr = &self.params;
        let mut wbuf: Vec<f64> = w_hist[w_hist.len().saturating_sub(p)..].to_vec();
        let mut ebuf: Vec<f64> = eps_hist[eps_hist.len().saturating_sub(q)..].to_vec();
        let mut out = Vec::with_capacity(h);
        let mut z = level;
        for _ in 0..h {
            let mut next = pr.mu;
            for i in 1..=p {
                if let Some(v) = wbuf.len().checked_sub(i).map(|k| wbuf[k]) {
                    next += pr.phi[i - 1] * v;
                }
            }
            for j in 1..=q {
                if let Some(v) = ebuf.len().checked_sub(j).map(|k| ebuf[k]) {
                    next += pr.theta[j - 1] * v;
                }
            }
            wbuf.push(next);
            ebuf.push(0.0);
            if self.spec.d == 1 {
                z += next;
                out.push(z);
            } else {
                out.push(next);
            }
        }
        out
    }

    /// One-step conditional variance after the last filtered point.
    fn next_sigma2(&self, eps: &[f64], sigma2: &[f64], v0: f64) -> f64 {
        let pr = &self.params;
        if self.spec.constant_variance() {
            return pr.omega;
        }
        let n = eps.len();
        let lag = |buf: &[f64], k: usize, sq: bool| -> f64 {
            if k > n || n - k < self.spec.p {
                v0
            } else {
                let v = buf[n - k];
                if sq {
                    v * v
                } else {
                    v
                }
            }
        };
        let mut s2 = pr.omega;
        for (i, a) in pr.alpha_g.iter().enumerate() {
            s2 += a * lag(eps, i + 1, true);
        }
        for (j, b) in pr.beta_g.iter().enumerate() {
            s2 += b * lag(sigma2, j + 1, false);
        }
        s2
    }

    /// `σ²_{t+j|t}` for j = 1..=h given the one-step value; beyond one step
    /// squared innovations are replaced by their conditional expectation.
    pub fn innovation_variance_path(&self, first: f64, h: usize) -> Vec<f64> {
        let pr = &self.params;
        if self.spec.constant_variance() {
            return vec![pr.omega; h];
        }
        let mut path: Vec<f64> = Vec::with_capacity(h);
        path.push(first);
        // Known pre-origin terms only enter the first step; afterwards both
        // α and β terms act on forecast variances, apart from lags that reach
        // back before the origin, which we approximate with the first value.
        for j in 1..h {
            let mut s2 = pr.omega;
            for (i, a) in pr.alpha_g.iter().enumerate() {
                s2 += a * if j > i { path[j - 1 - i] } else { first };
            }
            for (k, b) in pr.beta_g.iter().enumerate() {
                s2 += b * if j > k { path[j - 1 - k] } else { first };
            }
            path.push(s2);
        }
        path
    }
}

/// ψ-weights of the MA(∞) representation of the modeled series: for `d = 1`
/// the cumulated weights of the ARMA increments, so `Var[z_{t+h}|F_t] =
/// Σ_{j=1}^h ψ²_{h-j} σ²_{t+j|t}`.
pub fn psi_weights(spec: &ArimaGarchSpec, params: &ArimaGarchParams, h: usize) -> Vec<f64> {
    let mut psi = vec![0.0; h.max(1)];
    psi[0] = 1.0;
    for k in 1..psi.len() {
        let mut v = if k <= spec.q { params.theta[k - 1] } else { 0.0 };
        for i in 1..=spec.p.min(k) {
            v += params.phi[i - 1] * psi[k - i];
        }
        psi[k] = v;
    }
    if spec.d == 1 {
        let mut acc = 0.0;
        for v in &mut psi {
            acc += *v;
            *v = acc;
        }
    }
    psi
}

fn filter_raw(spec: &ArimaGarchSpec, pr: &ArimaGarchParams, w: &[f64], v0: f64) -> FilterOutput {
    let n = w.len();
    let (p, q) = (spec.p, spec.q);
    let burn = spec.burn_in();
    let garch = !spec.constant_variance();
    let mut eps = vec![0.0; n];
    let mut sigma2 = vec![v0; n];
    let mut ll = 0.0;
    let mut count = 0usize;
    for t in 0..n {
        if t < p {
            continue;
        }
        let mut e = w[t] - pr.mu;
        for i in 1..=p {
            e -= pr.phi[i - 1] * w[t - i];
        }
        for j in 1..=q.min(t) {
            e -= pr.theta[j - 1] * eps[t - j];
        }
        eps[t] = e;
        let s2 = if garch {
            let mut s2 = pr.omega;
            for (i, a) in pr.alpha_g.iter().enumerate() {
                let k = i + 1;
                let e2 = if t >= k && t - k >= p { eps[t - k] * eps[t - k] } else { v0 };
                s2 += a * e2;
            }
            for (j, b) in pr.beta_g.iter().enumerate() {
                let k = j + 1;
                let prev = if t >= k && t - k >= p { sigma2[t - k] } else { v0 };
                s2 += b * prev;
            }
            s2
        } else {
            pr.omega
        };
        sigma2[t] = s2;
        if t >= burn {
            if !(s2 > 0.0) || !s2.is_finite() {
                ll = f64::NEG_INFINITY;
            } else if ll.is_finite() {
                ll -= 0.5 * (LN_2PI + s2.ln() + e * e / s2);
            }
            count += 1;
        }
    }
    FilterOutput {
        eps,
        sigma2,
        loglik: ll,
        n_obs: count,
        presample_var: v0,
    }
}

fn check_length(spec: &ArimaGarchSpec, w: &[f64]) -> Result<()> {
    let need = spec.p + spec.q + spec.r.max(spec.s) + 11;
    if w.len() < need {
        return Err(Error::NotEnoughData { needed: need, got: w.len() });
    }
    Ok(())
}

/// Conditional Gaussian log-likelihood of `w`; `-∞` if some conditional
/// variance is not positive.
pub fn loglik(spec: &ArimaGarchSpec, params: &ArimaGarchParams, w: &[f64]) -> Result<f64> {
    params.validate(spec)?;
    check_length(spec, w)?;
    Ok(filter_raw(spec, params, w, sample_var(w)).loglik)
}

/// Unconstrained coordinates `[μ/sd, atanh(pacf φ).., atanh(pacf -θ).., ln(ω/var), ln c_α.., ln c_β..]`
/// with `α_i = c_i/(1+Σc)`, `β_j = c_j/(1+Σc)`.
struct Reparam {
    spec: ArimaGarchSpec,
    sd: f64,
    var: f64,
}

impl Reparam {
    fn dim(&self) -> usize {
        self.spec.n_params()
    }

    fn decode(&self, xi: &[f64]) -> ArimaGarchParams {
        let s = &self.spec;
        let mut k = 0;
        let mut take = |n: usize| {
            let out = &xi[k..k + n];
            k += n;
            out
        };
        let mu = take(1)[0] * self.sd;
        let phi = optimize::pacf_to_coefficients(&take(s.p).iter().map(|v| v.tanh()).collect::<Vec<_>>());
        let theta: Vec<f64> = optimize::pacf_to_coefficients(&take(s.q).iter().map(|v| v.tanh()).collect::<Vec<_>>())
            .into_iter()
            .map(|c| -c)
            .collect();
        let omega = (take(1)[0].exp() * self.var).max(f64::MIN_POSITIVE);
        let ca: Vec<f64> = take(s.r).iter().map(|v| v.exp()).collect();
        let cb: Vec<f64> = take(s.s).iter().map(|v| v.exp()).collect();
        let denom = 1.0 + ca.iter().chain(&cb).sum::<f64>();
        ArimaGarchParams {
            mu,
            phi,
            theta,
            omega,
            alpha_g: ca.iter().map(|c| c / denom).collect(),
            beta_g: cb.iter().map(|c| c / denom).collect(),
        }
    }

    fn encode(&self, p: &ArimaGarchParams) -> Option<Vec<f64>> {
        let mut xi = vec![p.mu / self.sd];
        xi.extend(optimize::coefficients_to_pacf(&p.phi)?.iter().map(|r| r.atanh()));
        let neg: Vec<f64> = p.theta.iter().map(|t| -t).collect();
        xi.extend(optimize::coefficients_to_pacf(&neg)?.iter().map(|r| r.atanh()));
        xi.push((p.omega / self.var).ln());
        let persist: f64 = p.alpha_g.iter().chain(&p.beta_g).sum();
        for v in p.alpha_g.iter().chain(&p.beta_g) {
            xi.push((v.max(1e-8) / (1.0 - persist)).ln());
        }
        Some(xi)
    }
}

/// Maximum-likelihood fit of one spec on the working series `w`.
pub fn fit(spec: &ArimaGarchSpec, w: &[f64]) -> Result<(ArimaGarchParams, FitReport)> {
    spec.validate()?;
    check_length(spec, w)?;
    let var = sample_var(w);
    if !(var > 0.0) {
        return Err(Error::Degenerate("working series has zero variance"));
    }
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    let rp = Reparam {
        spec: *spec,
        sd: var.sqrt(),
        var,
    };
    let base = ArimaGarchParams {
        mu: if spec.p == 0 { mean } else { 0.0 },
        phi: vec![0.0; spec.p],
        theta: vec![0.0; spec.q],
        omega: var,
        alpha_g: vec![],
        beta_g: vec![],
    };
    let mut starts = Vec::new();
    if spec.constant_variance() {
        starts.push(rp.encode(&base).expect("zero coefficients are stable"));
    } else {
        for (a, b) in [(0.05, 0.90), (0.15, 0.6)] {
            let alpha = a / spec.r as f64;
            let beta = if spec.s > 0 { b / spec.s as f64 } else { 0.0 };
            let persist = alpha * spec.r as f64 + beta * spec.s as f64;
            let start = ArimaGarchParams {
                omega: var * (1.0 - persist),
                alpha_g: vec![alpha; spec.r],
                beta_g: vec![beta; spec.s],
                ..base.clone()
            };
            starts.push(rp.encode(&start).expect("start is valid"));
        }
    }
    let problem = OptProblem {
        objective: |xi: &[f64]| {
            let p = rp.decode(xi);
            filter_raw(spec, &p, w, var).loglik
        },
        transforms: vec![ParamTransform::Unbounded; rp.dim()],
        starts,
    };
    let res = optimize::maximize_with(
        &problem,
        &OptOptions {
            tol: 1e-7,
            max_iter: 5000,
            halton_starts: 2,
            restarts: 2,
        },
    )?;
    let params = rp.decode(&res.argmax);
    let f = filter_raw(spec, &params, w, var);
    Ok((params, FitReport::new(f.loglik, spec.n_params(), f.n_obs, res.converged)))
}

/// Fits every spec and keeps the converged one with the smallest BIC; ties go
/// to fewer parameters, then to the lexicographically smaller `(p,q,r,s)`.
pub fn select_bic(
    grid: &[ArimaGarchSpec],
    w: &[f64],
) -> Result<(ArimaGarchSpec, ArimaGarchParams, FitReport)> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty model grid".into()));
    }
    let fits: Vec<_> = grid.par_iter().map(|s| (s, fit(s, w))).collect();
    let mut best: Option<(ArimaGarchSpec, ArimaGarchParams, FitReport)> = None;
    for (spec, res) in fits {
        let Ok((params, report)) = res else { continue };
        if !report.converged || !report.bic.is_finite() {
            continue;
        }
        let better = match &best {
            None => true,
            Some((bs, _, br)) => {
                let key = (report.bic, report.n_params, (spec.p, spec.q, spec.r, spec.s));
                let bkey = (br.bic, br.n_params, (bs.p, bs.q, bs.r, bs.s));
                key.0 < bkey.0 || (key.0 == bkey.0 && (key.1, key.2) < (bkey.1, bkey.2))
            }
        };
        if better {
            best = Some((*spec, params, report));
        }
    }
    best.ok_or(Error::AllFitsFailed)
}

pub fn forecast_mean(spec: &ArimaGarchSpec, params: &ArimaGarchParams, z: &[f64], h: usize) -> Result<Vec<f64>> {
    let m = ArimaGarchModel::new(*spec, params.clone())?;
    Ok(m.forecast(z, h)?.0)
}

pub fn forecast_variance(spec: &ArimaGarchSpec, params: &ArimaGarchParams, z: &[f64], h: usize) -> Result<Vec<f64>> {
    let m = ArimaGarchModel::new(*spec, params.clone())?;
    Ok(m.forecast(z, h)?.1)
}

pub fn forecast_density(
    spec: &ArimaGarchSpec,
    params: &ArimaGarchParams,
    z: &[f64],
    h: usize,
) -> Result<Vec<LogisticNormal>> {
    let m = ArimaGarchModel::new(*spec, params.clone())?;
    let (means, vars) = m.forecast(z, h)?;
    means
        .into_iter()
        .zip(vars)
        .map(|(m, v)| LogisticNormal::new(m, v))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn white_noise_loglik_matches_entropy() {
        let w = normals(10_000, 1);
        let spec = ArimaGarchSpec::arima(0, 0);
        let ll = loglik(&spec, &ArimaGarchParams::random_walk(0.0, 1.0), &w).unwrap();
        assert!((ll / 10_000.0 + 1.418_938_533_204_672_7).abs() < 0.02);
        let w2: Vec<f64> = w.iter().map(|v| 2.0 * v).collect();
        let ll2 = loglik(&spec, &ArimaGarchParams::random_walk(0.0, 1.0), &w2).unwrap();
        assert!(ll2 < ll);
    }

    #[test]
    fn garch_free_recursion_is_constant_variance_arma() {
        let w = normals(500, 2);
        let spec = ArimaGarchSpec::arima(1, 1);
        let p = ArimaGarchParams {
            mu: 0.1,
            phi: vec![0.4],
            theta: vec![-0.2],
            omega: 1.3,
            alpha_g: vec![],
            beta_g: vec![],
        };
        let ll = loglik(&spec, &p, &w).unwrap();
        let mut eps = vec![0.0; w.len()];
        let mut direct = 0.0;
        for t in 1..w.len() {
            eps[t] = w[t] - 0.1 - 0.4 * w[t - 1] + 0.2 * eps[t - 1];
            direct += -0.5 * (LN_2PI + 1.3f64.ln() + eps[t] * eps[t] / 1.3);
        }
        assert!((ll - direct).abs() < 1e-9 * direct.abs());
    }

    #[test]
    fn invariant_violations_are_rejected() {
        let w = normals(100, 3);
        let mut p = ArimaGarchParams::random_walk(0.0, 1.0);
        p.phi = vec![1.1];
        assert!(loglik(&ArimaGarchSpec::arima(1, 0), &p, &w).is_err());
        let p = ArimaGarchParams {
            alpha_g: vec![0.5],
            beta_g: vec![0.6],
            ..ArimaGarchParams::random_walk(0.0, 1.0)
        };
        assert!(loglik(&ArimaGarchSpec::arima_garch(0, 0, 1, 1), &p, &w).is_err());
        assert!(fit(&ArimaGarchSpec::arima(0, 0), &[0.0; 200]).is_err());
    }

    #[test]
    fn random_walk_forecasts() {
        let z = [0.1, 0.3, 0.2, 0.5];
        let spec = ArimaGarchSpec::arima(0, 0);
        let m = forecast_mean(&spec, &ArimaGarchParams::random_walk(0.0, 0.04), &z, 5).unwrap();
        assert!(m.iter().all(|v| *v == 0.5));
        let v = forecast_variance(&spec, &ArimaGarchParams::random_walk(0.0, 0.04), &z, 5).unwrap();
        for (h, vh) in v.iter().enumerate() {
            assert!((vh - 0.04 * (h + 1) as f64).abs() < 1e-15);
        }
        let m = forecast_mean(&spec, &ArimaGarchParams::random_walk(0.02, 0.04), &z, 3).unwrap();
        for (h, mh) in m.iter().enumerate() {
            assert!((mh - (0.5 + 0.02 * (h + 1) as f64)).abs() < 1e-15);
        }
        let d = forecast_density(&spec, &ArimaGarchParams::random_walk(0.0, 0.04), &z, 1).unwrap();
        assert_eq!(d[0].z_mean, 0.5);
    }

    #[test]
    fn ar1_one_step_uses_last_increment() {
        let z = [0.0, 0.2, 0.5, 0.4, 0.9];
        let spec = ArimaGarchSpec::arima(1, 0);
        let p = ArimaGarchParams {
            phi: vec![0.5],
            ..ArimaGarchParams::random_walk(0.0, 1.0)
        };
        let m = forecast_mean(&spec, &p, &z, 2).unwrap();
        assert!((m[0] - (0.9 + 0.5 * 0.5)).abs() < 1e-15);
        assert!((m[1] - (m[0] + 0.25 * 0.5)).abs() < 1e-15);
    }

    #[test]
    fn psi_weights_match_closed_form() {
        let (phi, theta) = (0.6, -0.35);
        let spec = ArimaGarchSpec::arima(1, 1);
        let p = ArimaGarchParams {
            phi: vec![phi],
            theta: vec![theta],
            ..ArimaGarchParams::random_walk(0.0, 1.0)
        };
        let psi = psi_weights(&spec, &p, 50);
        for (h, v) in psi.iter().enumerate() {
            let hf = h as i32;
            let closed = phi.powi(hf) + (1.0 + theta) * (1.0 - phi.powi(hf)) / (1.0 - phi);
            assert!((v - closed).abs() < 1e-13, "h={h}");
        }
    }

    #[test]
    fn garch_variance_forecast_converges_to_unconditional() {
        let spec = ArimaGarchSpec::arima_garch(0, 0, 1, 1);
        let p = ArimaGarchParams {
            omega: 0.05,
            alpha_g: vec![0.1],
            beta_g: vec![0.85],
            ..ArimaGarchParams::random_walk(0.0, 0.05)
        };
        let m = ArimaGarchModel::new(spec, p).unwrap();
        let path = m.innovation_variance_path(9.0, 500);
        assert!((path[499] / 1.0 - 1.0).abs() < 0.01);
    }

    #[test]
    fn variance_nondecreasing_in_horizon() {
        for phi in [-0.5, 0.0, 0.7] {
            for theta in [-0.6, 0.0, 0.4] {
                for (a, b) in [(0.0, 0.0), (0.1, 0.8)] {
                    let spec = if a == 0.0 {
                        ArimaGarchSpec::arima(1, 1)
                    } else {
                        ArimaGarchSpec::arima_garch(1, 1, 1, 1)
                    };
                    let p = ArimaGarchParams {
                        mu: 0.0,
                        phi: vec![phi],
                        theta: vec![theta],
                        omega: 0.1,
                        alpha_g: if a == 0.0 { vec![] } else { vec![a] },
                        beta_g: if a == 0.0 { vec![] } else { vec![b] },
                    };
                    let z = sim::cumulative(&normals(300, 5));
                    let v = forecast_variance(&spec, &p, &z, 96).unwrap();
                    assert!(v.windows(2).all(|w| w[1] >= w[0] - 1e-15));
                }
            }
        }
    }

    #[test]
    fn selection_with_single_candidate() {
        let w = normals(400, 9);
        let (s, _, r) = select_bic(&[ArimaGarchSpec::arima(1, 0)], &w).unwrap();
        assert_eq!(s, ArimaGarchSpec::arima(1, 0));
        assert!((r.bic - (3.0 * (r.n_obs as f64).ln() - 2.0 * r.loglik)).abs() < 1e-9);
        assert!(select_bic(&[], &w).is_err());
    }

    #[test]
    fn spec_bounds() {
        assert!(ArimaGarchSpec::arima(7, 0).validate().is_err());
        assert!(ArimaGarchSpec::arima_garch(0, 0, 0, 1).validate().is_err());
        assert_eq!(ArimaGarchSpec::default_grid(&[(0, 0), (1, 1)]).len(), 50);
        assert_eq!(ArimaGarchSpec::arima_garch(4, 3, 1, 1).to_string(), "ARIMA(4,1,3)-GARCH(1,1)");
    }
}
