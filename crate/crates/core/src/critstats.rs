//! Expected numbers of critical points of random sections of `O(N)` over
//! `CP^m`: exact formulas for the smallest index, asymptotic growth rates,
//! and Monte Carlo estimators over the `(m+1)`-dimensional Wishart ensemble.
//!
//! Counts are indexed the way the Wishart side sees them: `k` in `0..=m`
//! refers to the `(k+1)`-th largest Wishart eigenvalue and to critical
//! points of Morse index `2m - k`. Windows are in units of the normalized
//! critical value `||s(z)||_h^2 / (m+1)`; the Wishart side is evaluated on
//! the window scaled by `N/(N-1)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::estimate::CountEstimate;
use crate::mp;
use crate::rng::RngStream;
use crate::tridiag::LaguerreTridiagonal;
use crate::wishart::{self, Sampler};

/// Half-open interval `[lower, upper)` of normalized critical values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lower: f64,
    pub upper: f64,
}

impl Window {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower >= 0.0) || !(lower < upper) || lower.is_infinite() {
            return Err(domain(format!("invalid window [{lower}, {upper})")));
        }
        Ok(Self { lower, upper })
    }

    /// `[0, inf)`.
    pub fn all() -> Self {
        Self { lower: 0.0, upper: f64::INFINITY }
    }

    /// `[x, inf)`.
    pub fn above(x: f64) -> Result<Self> {
        Self::new(x, f64::INFINITY)
    }

    /// `[0, x)`.
    pub fn below(x: f64) -> Result<Self> {
        Self::new(0.0, x)
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lower && v < self.upper
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { lower: self.lower * factor, upper: self.upper * factor }
    }
}

fn check_degree(degree: u32) -> Result<f64> {
    if degree < 2 {
        return Err(domain(format!("degree N = {degree} is degenerate; counts need N >= 2")));
    }
    Ok(degree as f64)
}

fn check_dim(m: usize) -> Result<f64> {
    if m == 0 {
        return Err(domain("projective dimension m must be at least 1"));
    }
    Ok(m as f64)
}

/// `N / (N - 1)`, the factor between critical-value windows and Wishart
/// eigenvalue windows.
pub fn window_scale(degree: u32) -> Result<f64> {
    let n = check_degree(degree)?;
    Ok(n / (n - 1.0))
}

/// Decay rate `(m+1) N / (2(N-1)) (2 - 2/N + m)` of the index-`m` density.
fn index_m_decay(m: f64, n: f64) -> f64 {
    (m + 1.0) * n / (2.0 * (n - 1.0)) * (2.0 - 2.0 / n + m)
}

/// Log of the density of normalized critical values of index `m`:
/// `log[(N-1)^m (m+1)^2] - (m+1)N/(2(N-1)) (2 - 2/N + m) x`.
pub fn log_density_index_m(m: usize, degree: u32, x: f64) -> Result<f64> {
    let mf = check_dim(m)?;
    let n = check_degree(degree)?;
    if !(x >= 0.0) {
        return Err(domain(format!("critical values are nonnegative, got {x}")));
    }
    Ok(mf * (n - 1.0).ln() + 2.0 * (mf + 1.0).ln() - index_m_decay(mf, n) * x)
}

/// `p_{m,m,N}(x)`, density of normalized critical values of index `m`.
pub fn density_index_m(m: usize, degree: u32, x: f64) -> Result<f64> {
    Ok(log_density_index_m(m, degree, x)?.exp())
}

/// `log E N_{m,m,N}(R_+) = log[2(m+1)/(2(N-1)+mN)] + (m+1) log(N-1)`.
pub fn log_expected_index_m_total(m: usize, degree: u32) -> Result<f64> {
    let mf = check_dim(m)?;
    let n = check_degree(degree)?;
    Ok((2.0 * (mf + 1.0) / (2.0 * (n - 1.0) + mf * n)).ln() + (mf + 1.0) * (n - 1.0).ln())
}

/// Expected number of index-`m` critical points.
pub fn expected_index_m_total(m: usize, degree: u32) -> Result<f64> {
    Ok(log_expected_index_m_total(m, degree)?.exp())
}

/// Log of `E N_{m,m,N}[x, inf)`, the integral of [`density_index_m`] over
/// `[x, inf)`.
pub fn log_expected_index_m_tail(m: usize, degree: u32, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(domain(format!("critical values are nonnegative, got {x}")));
    }
    let base = log_expected_index_m_total(m, degree)?;
    Ok(base - index_m_decay(m as f64, degree as f64) * x)
}

/// `E N_{m,m,N}[x, inf) = 2(m+1)(N-1)^{m+1} / (2(N-1)+mN) * exp(-c x)`.
pub fn expected_index_m_tail(m: usize, degree: u32, x: f64) -> Result<f64> {
    Ok(log_expected_index_m_tail(m, degree, x)?.exp())
}

/// `log[2 (N-1)^{m+1} / N]`, the deterministic factor of the Wishart
/// representation.
pub fn log_prefactor(m: usize, degree: u32) -> Result<f64> {
    let mf = check_dim(m)?;
    let n = check_degree(degree)?;
    Ok((2.0 / n).ln() + (mf + 1.0) * (n - 1.0).ln())
}

/// Coefficient of `lambda` in the exponential weight,
/// `(1 - 2/N) (m+1) / 2`.
fn weight_rate(m: usize, degree: u32) -> f64 {
    (1.0 - 2.0 / degree as f64) * (m as f64 + 1.0) / 2.0
}

/// Monte Carlo estimate of `E N_{m,2m-k,N}(window)`:
/// `2(N-1)^{m+1}/N E_{m+1}[exp(-(1-2/N)(m+1)/2 lambda_{k+1}); lambda_{k+1} in N/(N-1) window]`.
pub fn mc_expected_count_index(m: usize, k: usize, degree: u32, window: Window, n: usize, stream: RngStream) -> Result<CountEstimate> {
    mc_expected_count_index_with(m, k, degree, window, n, stream, Sampler::Dense)
}

pub fn mc_expected_count_index_with(
    m: usize,
    k: usize,
    degree: u32,
    window: Window,
    n: usize,
    stream: RngStream,
    sampler: Sampler,
) -> Result<CountEstimate> {
    if k > m {
        return Err(domain(format!("k = {k} exceeds m = {m}")));
    }
    if n == 0 {
        return Err(domain("need at least one sample"));
    }
    let logp = log_prefactor(m, degree)?;
    let scaled = window.scaled(window_scale(degree)?);
    let rate = weight_rate(m, degree);
    let weights: Vec<f64> = (0..n as u64)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let sub = stream.substream(i);
            let lambda = match sampler {
                Sampler::Dense => wishart::sample_spectrum(m + 1, &sub)?.kth(k + 1),
                Sampler::Tridiagonal => LaguerreTridiagonal::sample(m + 1, &mut sub.rng()).kth_largest(k + 1),
            };
            Ok(if scaled.contains(lambda) { (-rate * lambda).exp() } else { 0.0 })
        })
        .collect::<Result<_>>()?;
    Ok(CountEstimate::from_weights(&weights, logp, stream))
}

/// Monte Carlo estimate of the total count `E N_{m,N}(window)`, averaging
/// `sum_i exp(-(1-2/N)(m+1)/2 lambda_i) 1[lambda_i in N/(N-1) window]`.
pub fn mc_expected_count_total(m: usize, degree: u32, window: Window, n: usize, stream: RngStream) -> Result<CountEstimate> {
    mc_expected_count_total_with(m, degree, window, n, stream, Sampler::Dense)
}

pub fn mc_expected_count_total_with(
    m: usize,
    degree: u32,
    window: Window,
    n: usize,
    stream: RngStream,
    sampler: Sampler,
) -> Result<CountEstimate> {
    if n == 0 {
        return Err(domain("need at least one sample"));
    }
    let logp = log_prefactor(m, degree)?;
    let scaled = window.scaled(window_scale(degree)?);
    let rate = weight_rate(m, degree);
    let weights: Vec<f64> = (0..n as u64)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let sub = stream.substream(i);
            let in_window: Vec<f64> = match sampler {
                Sampler::Dense => {
                    wishart::sample_spectrum(m + 1, &sub)?.eigenvalues().iter().copied().filter(|&l| scaled.contains(l)).collect()
                }
                Sampler::Tridiagonal => LaguerreTridiagonal::sample(m + 1, &mut sub.rng()).eigenvalues_in(scaled.lower, scaled.upper),
            };
            Ok(in_window.iter().map(|&l| (-rate * l).exp()).sum())
        })
        .collect::<Result<_>>()?;
    Ok(CountEstimate::from_weights(&weights, logp, stream))
}

/// Total-count estimator with the top eigenvalue integrated out.
///
/// The contribution of `lambda_1` is replaced by its conditional expectation
/// given `lambda_2, ..., lambda_{m+1}` (a one-dimensional log-concave
/// integral); the other eigenvalues contribute as in the plain estimator.
/// The result is unbiased and keeps a finite log-mean even when the window
/// sits so deep in the large-deviation tail that plain sampling never hits
/// it, which is the regime of the growth-rate checks.
pub fn mc_expected_count_total_conditional(m: usize, degree: u32, window: Window, n: usize, stream: RngStream) -> Result<CountEstimate> {
    if n == 0 {
        return Err(domain("need at least one sample"));
    }
    let logp = log_prefactor(m, degree)?;
    let scaled = window.scaled(window_scale(degree)?);
    let rate = weight_rate(m, degree);
    let logs: Vec<f64> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let t = LaguerreTridiagonal::sample(m + 1, &mut stream.substream(i).rng());
            let top = (t.kth_largest(1), t.kth_largest(2));
            let (num, den) = t.conditional_top_log_integrals(top, scaled.lower, scaled.upper, rate);
            let top_term = num - den;
            let rest: f64 = t
                .eigenvalues_in(scaled.lower, scaled.upper)
                .iter()
                .skip(usize::from(scaled.contains(top.0)))
                .map(|&l| (-rate * l).exp())
                .sum();
            log_add(top_term, if rest > 0.0 { rest.ln() } else { f64::NEG_INFINITY })
        })
        .collect();
    Ok(CountEstimate::from_log_weights(&logs, logp, stream))
}

fn log_add(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + ((a - hi).exp() + (b - hi).exp()).ln()
}

/// Per-index and total estimates from one shared set of spectra.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexSweep {
    /// `per_k[k]` estimates `E N_{m,2m-k,N}(window)`.
    pub per_k: Vec<CountEstimate>,
    pub total: CountEstimate,
}

/// Estimates every index `k = 0..=m` and the total with common random
/// numbers (dense sampler).
pub fn mc_index_sweep(m: usize, degree: u32, window: Window, n: usize, stream: RngStream) -> Result<IndexSweep> {
    if n == 0 {
        return Err(domain("need at least one sample"));
    }
    let logp = log_prefactor(m, degree)?;
    let scaled = window.scaled(window_scale(degree)?);
    let rate = weight_rate(m, degree);
    let per_sample: Vec<Vec<f64>> = (0..n as u64)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let s = wishart::sample_spectrum(m + 1, &stream.substream(i))?;
            Ok(s.eigenvalues().iter().map(|&l| if scaled.contains(l) { (-rate * l).exp() } else { 0.0 }).collect())
        })
        .collect::<Result<_>>()?;
    let per_k = (0..=m)
        .map(|k| {
            let w: Vec<f64> = per_sample.iter().map(|row| row[k]).collect();
            CountEstimate::from_weights(&w, logp, stream)
        })
        .collect();
    let totals: Vec<f64> = per_sample.iter().map(|row| row.iter().sum()).collect();
    Ok(IndexSweep { per_k, total: CountEstimate::from_weights(&totals, logp, stream) })
}

/// Which side of the threshold a fixed-index window lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `[x, inf)`
    Above,
    /// `[0, x)`
    Below,
}

/// What a growth rate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateTarget {
    /// Index `2m - k` for fixed `k`, on a one-sided window.
    FixedK { k: usize, side: Side },
    /// Index `2m - k(m)` with `k(m)/m -> gamma`, all critical values.
    LinearGamma { gamma: f64 },
    /// All indices on `[x, inf)`.
    Total,
    /// Index `m` on `[0, inf)`.
    IndexM,
}

/// One point of a growth-rate curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub degree: u32,
    pub target: RateTarget,
    pub x: Option<f64>,
    /// Finite dimension the empirical rate was measured at.
    pub m: Option<usize>,
    pub analytic_rate: f64,
    pub empirical_rate: Option<f64>,
    /// The Monte Carlo estimate behind `empirical_rate` had no hits
    /// (the empirical rate is then `-inf`).
    pub zero_hits: bool,
}

impl RatePoint {
    fn analytic(degree: u32, target: RateTarget, x: Option<f64>, analytic_rate: f64) -> Self {
        Self { degree, target, x, m: None, analytic_rate, empirical_rate: None, zero_hits: false }
    }
}

/// `psi(t) = log(N-1) - (1 - 2/N) t / 2`.
pub fn psi(degree: u32, t: f64) -> Result<f64> {
    let n = check_degree(degree)?;
    Ok((n - 1.0).ln() - (1.0 - 2.0 / n) * t / 2.0)
}

/// Growth rate of `E N_{m,2m-k,N}` on `[x, inf)` (`Above`) or `[0, x)`
/// (`Below`) for fixed `k`, with `x_N = N x / (N-1)`.
pub fn rate_fixed_k(degree: u32, k: usize, x: f64, side: Side) -> Result<RatePoint> {
    let n = check_degree(degree)?;
    if !(x >= 0.0) {
        return Err(domain(format!("threshold must be nonnegative, got {x}")));
    }
    let xn = n / (n - 1.0) * x;
    let edge_rate = psi(degree, mp::EDGE)?;
    let value = match side {
        Side::Above if xn >= mp::EDGE => psi(degree, xn)? - (k as f64 + 1.0) * mp::rate(xn),
        Side::Above => edge_rate,
        Side::Below if xn >= mp::EDGE => edge_rate,
        Side::Below => f64::NEG_INFINITY,
    };
    Ok(RatePoint::analytic(degree, RateTarget::FixedK { k, side }, Some(x), value))
}

/// Growth rate for linearly growing `k(m)/m -> gamma` over all critical
/// values: `log(N-1) - (1 - 2/N) s_gamma / 2`.
pub fn rate_linear_gamma(degree: u32, gamma: f64) -> Result<RatePoint> {
    let s = mp::tail_quantile(gamma)?;
    Ok(RatePoint::analytic(degree, RateTarget::LinearGamma { gamma }, None, psi(degree, s)?))
}

/// Growth rate of the total count on `[x, inf)`: `psi(x_N) - I_MP(x_N)` when
/// `x_N >= 4`, `psi(x_N)` below the edge.
pub fn rate_total(degree: u32, x: f64) -> Result<RatePoint> {
    let n = check_degree(degree)?;
    if !(x >= 0.0) {
        return Err(domain(format!("threshold must be nonnegative, got {x}")));
    }
    let xn = n / (n - 1.0) * x;
    let mut value = psi(degree, xn)?;
    if xn >= mp::EDGE {
        value -= mp::rate(xn);
    }
    Ok(RatePoint::analytic(degree, RateTarget::Total, Some(x), value))
}

/// Limit `log(N-1)` of `(1/m) log E N_{m,m,N}(R_+)`.
pub fn rate_index_m(degree: u32) -> Result<RatePoint> {
    Ok(RatePoint::analytic(degree, RateTarget::IndexM, None, psi(degree, 0.0)?))
}

/// `k(m)` for the linear-index regime: `round(gamma m)` clamped to `[1, m-1]`.
pub fn linear_index(m: usize, gamma: f64) -> usize {
    ((gamma * m as f64).round() as usize).clamp(1, m.saturating_sub(1).max(1))
}

/// Finite-`m` growth rates `(1/m) log(estimate)` next to the limit.
///
/// `IndexM` uses the exact formula; `Total` uses the conditional estimator
/// on `[x, inf)`; fixed and linear `k` use the plain index estimator on the
/// tridiagonal sampler. `x` is ignored for `IndexM` and `LinearGamma`.
pub fn empirical_rate_curve(
    degree: u32,
    target: RateTarget,
    x: f64,
    m_list: &[usize],
    n: usize,
    stream: RngStream,
) -> Result<Vec<RatePoint>> {
    if m_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(domain("dimension list must be strictly ascending"));
    }
    let base = match target {
        RateTarget::FixedK { k, side } => rate_fixed_k(degree, k, x, side)?,
        RateTarget::LinearGamma { gamma } => rate_linear_gamma(degree, gamma)?,
        RateTarget::Total => rate_total(degree, x)?,
        RateTarget::IndexM => rate_index_m(degree)?,
    };
    m_list
        .iter()
        .enumerate()
        .map(|(j, &m)| {
            let sub = stream.substream(j as u64);
            let (log_value, zero_hits) = match target {
                RateTarget::IndexM => (log_expected_index_m_total(m, degree)?, false),
                RateTarget::Total => {
                    let e = mc_expected_count_total_conditional(m, degree, Window::above(x)?, n, sub)?;
                    (e.log_mean, e.zero_hits)
                }
                RateTarget::FixedK { k, side } => {
                    if k > m {
                        return Err(domain(format!("k = {k} exceeds m = {m}")));
                    }
                    let w = match side {
                        Side::Above => Window::above(x)?,
                        Side::Below => Window::below(x)?,
                    };
                    let e = mc_expected_count_index_with(m, k, degree, w, n, sub, Sampler::Tridiagonal)?;
                    (e.log_mean, e.zero_hits)
                }
                RateTarget::LinearGamma { gamma } => {
                    let k = linear_index(m, gamma);
                    let e = mc_expected_count_index_with(m, k, degree, Window::all(), n, sub, Sampler::Tridiagonal)?;
                    (e.log_mean, e.zero_hits)
                }
            };
            Ok(RatePoint { m: Some(m), empirical_rate: Some(log_value / m as f64), zero_hits, ..base.clone() })
        })
        .collect()
}
