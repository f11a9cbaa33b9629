//! The real Wishart ensemble `W = X^T X`, `X` an `(m+1) x m` matrix of
//! independent `N(0, 1/m)` entries: sampling, exact eigenvalue laws and
//! empirical checks of its large deviations.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::estimate::CountEstimate;
use crate::mp::{self, DiscreteMeasure};
use crate::rng::RngStream;
use crate::stats;
use crate::tridiag::LaguerreTridiagonal;

const EIGEN_ATTEMPTS: usize = 3;
const CLAMP_TOL: f64 = 1e-12;

/// Eigenvalues of one Wishart draw, in descending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    m: usize,
    eigenvalues: Vec<f64>,
}

impl Spectrum {
    /// Wraps a list of eigenvalues, sorting it into descending order.
    pub fn new(mut eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(domain("a spectrum needs at least one eigenvalue"));
        }
        if eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(domain("non-finite eigenvalue"));
        }
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { m: eigenvalues.len(), eigenvalues })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `lambda_k`, 1-based, `lambda_1` the largest.
    pub fn kth(&self, k: usize) -> f64 {
        self.eigenvalues[k - 1]
    }

    pub fn largest(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn smallest(&self) -> f64 {
        self.eigenvalues[self.m - 1]
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// The empirical spectral measure `L_m`.
    pub fn empirical_measure(&self) -> DiscreteMeasure {
        DiscreteMeasure::uniform(self.eigenvalues.clone()).expect("spectra are finite and nonnegative")
    }
}

/// How spectra are produced.
///
/// `Dense` forms `X` and `W` and runs a dense symmetric eigensolver
/// (Householder tridiagonalization plus implicit QL). `Tridiagonal` samples
/// the equivalent chi-distributed tridiagonal model directly, which is
/// `O(m)` per draw and is what the large-`m` estimators use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Sampler {
    #[default]
    Dense,
    Tridiagonal,
}

/// Draws one spectrum of the `m`-dimensional ensemble from the given stream.
pub fn sample_spectrum(m: usize, stream: &RngStream) -> Result<Spectrum> {
    sample_spectrum_with(m, &mut stream.rng())
}

pub fn sample_spectrum_with<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<Spectrum> {
    if m == 0 {
        return Err(domain("ensemble dimension must be at least 1"));
    }
    let sd = (1.0 / m as f64).sqrt();
    for _ in 0..EIGEN_ATTEMPTS {
        let x = DMatrix::<f64>::from_fn(m + 1, m, |_, _| sd * rng.sample::<f64, _>(StandardNormal));
        let w = x.tr_mul(&x);
        if let Some(eig) = SymmetricEigen::try_new(w, f64::EPSILON, 10_000) {
            let eigenvalues = eig
                .eigenvalues
                .iter()
                .map(|&v| {
                    debug_assert!(v >= -CLAMP_TOL * (1.0 + v.abs()), "Gram eigenvalue {v}");
                    v.max(0.0)
                })
                .collect();
            return Spectrum::new(eigenvalues);
        }
    }
    Err(Error::EigenNoConvergence { attempts: EIGEN_ATTEMPTS })
}

/// Draws one spectrum with the chosen sampler.
pub fn sample_with(sampler: Sampler, m: usize, stream: &RngStream) -> Result<Spectrum> {
    match sampler {
        Sampler::Dense => sample_spectrum(m, stream),
        Sampler::Tridiagonal => {
            if m == 0 {
                return Err(domain("ensemble dimension must be at least 1"));
            }
            Spectrum::new(LaguerreTridiagonal::sample(m, &mut stream.rng()).eigenvalues())
        }
    }
}

/// `log Z_W(m) = m log 2 - m(m+1)/2 log m + sum_{j<=m} log j!`.
///
/// This constant normalizes `Delta(lambda) exp(-m/2 sum lambda)` over the
/// whole orthant `R_+^m` (with `|Delta|`); the normalizer of the descending
/// cone alone is `Z_W(m) / m!`.
pub fn log_normalizer(m: usize) -> f64 {
    let mf = m as f64;
    let mut log_fact = 0.0;
    let mut sum_log_fact = 0.0;
    for j in 1..=m {
        log_fact += (j as f64).ln();
        sum_log_fact += log_fact;
    }
    mf * std::f64::consts::LN_2 - 0.5 * mf * (mf + 1.0) * mf.ln() + sum_log_fact
}

/// `sum_{i<j} log(lambda_i - lambda_j) - (m/2) sum lambda_i - log Z_W(m)`.
///
/// This is the joint density of the eigenvalues listed in exchangeable
/// (uniformly random) order, evaluated at a descending vector; on the
/// descending cone the density is `m!` times larger. Ties or nonpositive
/// entries give `-inf`.
pub fn log_joint_density(spec: &Spectrum) -> f64 {
    let l = spec.eigenvalues();
    let m = l.len();
    if l.iter().any(|&v| v <= 0.0) {
        return f64::NEG_INFINITY;
    }
    let mut vandermonde = 0.0;
    for i in 0..m {
        for j in (i + 1)..m {
            let d = l[i] - l[j];
            if d <= 0.0 {
                return f64::NEG_INFINITY;
            }
            vandermonde += d.ln();
        }
    }
    vandermonde - 0.5 * m as f64 * spec.trace() - log_normalizer(m)
}

/// `P((m/2) lambda_m >= x) = e^{-m x}`.
pub fn smallest_tail_exact(m: usize, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        (-(m as f64) * x).exp()
    }
}

/// Plain Monte Carlo estimate of `P(lambda_k >= x)` with binomial standard
/// error. Uses the tridiagonal model and a bisection for `lambda_k`.
pub fn estimate_kth_tail(m: usize, k: usize, x: f64, n: usize, stream: RngStream) -> Result<CountEstimate> {
    if m == 0 || k == 0 || k > m {
        return Err(domain(format!("need 1 <= k <= m, got k={k}, m={m}")));
    }
    if !(x > 0.0) || n == 0 {
        return Err(domain("need x > 0 and n >= 1"));
    }
    let hits: Vec<f64> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let t = LaguerreTridiagonal::sample(m, &mut stream.substream(i).rng());
            // lambda_k >= x  iff  at least k eigenvalues lie at or above x.
            if t.count_above(x) >= k {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(CountEstimate::from_weights(&hits, 0.0, stream))
}

/// Conditional Monte Carlo estimate of `P(lambda_1 >= x)`.
///
/// Averages `P(lambda_1 >= x | lambda_2, ..., lambda_m)`, computed by a
/// one-dimensional integral over the conditional law of the top eigenvalue.
/// Unbiased like the plain estimator, but it never returns zero hits and
/// stays usable when the probability is far below `1/n`.
pub fn estimate_top_tail_conditional(m: usize, x: f64, n: usize, stream: RngStream) -> Result<CountEstimate> {
    if m < 2 || !(x > 0.0) || n == 0 {
        return Err(domain("need m >= 2, x > 0 and n >= 1"));
    }
    let logs: Vec<f64> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let t = LaguerreTridiagonal::sample(m, &mut stream.substream(i).rng());
            let top = (t.kth_largest(1), t.kth_largest(2));
            let (num, den) = t.conditional_top_log_integrals(top, x, f64::INFINITY, 0.0);
            (num - den).min(0.0)
        })
        .collect();
    Ok(CountEstimate::from_log_weights(&logs, 0.0, stream))
}

/// Kolmogorov-Smirnov distance between the pooled empirical spectral
/// distribution of `spectra` and the Marchenko-Pastur CDF.
pub fn ks_distance_to_mp(spectra: &[Spectrum]) -> Result<f64> {
    if spectra.is_empty() {
        return Err(domain("need at least one spectrum"));
    }
    let pooled: Vec<f64> = spectra.iter().flat_map(|s| s.eigenvalues().iter().copied()).collect();
    Ok(stats::ks_one_sample(&pooled, mp::cdf))
}

/// The order statistic tracked by the concentration check:
/// `round(gamma m)` clamped to `[1, m]`.
pub fn concentration_index(m: usize, gamma: f64) -> usize {
    ((gamma * m as f64).round() as usize).clamp(1, m)
}

/// Empirical frequency over `n` draws of `lambda_k` leaving
/// `(s_gamma - eps, s_gamma + eps)`, with `k = round(gamma m)`.
pub fn concentration_check(m: usize, gamma: f64, eps: f64, n: usize, stream: RngStream) -> Result<f64> {
    if m == 0 || n == 0 || !(eps > 0.0) {
        return Err(domain("need m >= 1, n >= 1 and eps > 0"));
    }
    let s = mp::tail_quantile(gamma)?;
    let k = concentration_index(m, gamma);
    let misses: usize = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let t = LaguerreTridiagonal::sample(m, &mut stream.substream(i).rng());
            let v = t.kth_largest(k);
            usize::from(!(v > s - eps && v < s + eps))
        })
        .sum();
    Ok(misses as f64 / n as f64)
}

/// Draws `n` spectra in parallel, one substream per draw.
pub fn sample_many(sampler: Sampler, m: usize, n: usize, stream: RngStream) -> Result<Vec<Spectrum>> {
    (0..n as u64).into_par_iter().map(|i| sample_with(sampler, m, &stream.substream(i))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_is_sorted_and_nonnegative() {
        let stream = RngStream::new(1);
        for m in [1, 2, 7, 40] {
            let s = sample_spectrum(m, &stream.substream(m as u64)).unwrap();
            assert_eq!(s.m(), m);
            assert!(s.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
            assert!(s.smallest() >= 0.0);
        }
        assert!(sample_spectrum(0, &stream).is_err());
    }

    #[test]
    fn same_stream_same_spectrum() {
        let s = RngStream::with_stream(9, 4);
        assert_eq!(sample_spectrum(6, &s).unwrap(), sample_spectrum(6, &s).unwrap());
    }

    #[test]
    fn normalizer_small_cases() {
        assert!((log_normalizer(1) - 2f64.ln()).abs() < 1e-15);
        assert!(log_normalizer(2).abs() < 1e-15);
        assert!(log_normalizer(10_000).is_finite());
    }

    #[test]
    fn joint_density_small_cases() {
        let one = Spectrum::new(vec![3.0]).unwrap();
        assert!((log_joint_density(&one) - (-1.5 - 2f64.ln())).abs() < 1e-14);
        let two = Spectrum::new(vec![3.0, 1.0]).unwrap();
        assert!((log_joint_density(&two) - (2f64.ln() - 4.0)).abs() < 1e-14);
        let tie = Spectrum::new(vec![2.0, 2.0]).unwrap();
        assert_eq!(log_joint_density(&tie), f64::NEG_INFINITY);
        let zero = Spectrum::new(vec![2.0, 0.0]).unwrap();
        assert_eq!(log_joint_density(&zero), f64::NEG_INFINITY);
    }

    #[test]
    fn smallest_tail_values() {
        assert_eq!(smallest_tail_exact(5, 0.0), 1.0);
        assert!((smallest_tail_exact(10, 0.1) - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn ks_degenerate_inputs() {
        let zeros = Spectrum::new(vec![0.0; 5]).unwrap();
        assert!((ks_distance_to_mp(&[zeros]).unwrap() - 1.0).abs() < 1e-15);
        assert!(ks_distance_to_mp(&[]).is_err());
        // Empirical CDF built from MP quantiles.
        let k = 1000;
        let atoms: Vec<f64> = (0..k).map(|i| mp::tail_quantile(1.0 - (i as f64 + 0.5) / k as f64).unwrap()).collect();
        let d = ks_distance_to_mp(&[Spectrum::new(atoms).unwrap()]).unwrap();
        assert!(d <= 1.0 / k as f64 + 1e-9, "{d}");
    }

    #[test]
    fn concentration_covers_support_with_huge_eps() {
        assert_eq!(concentration_check(20, 0.5, 4.0, 50, RngStream::new(2)).unwrap(), 0.0);
        assert_eq!(concentration_index(10, 0.01), 1);
        assert_eq!(concentration_index(10, 0.99), 10);
    }

    #[test]
    fn kth_tail_trivial_regimes() {
        let e = estimate_kth_tail(20, 1, 0.01, 500, RngStream::new(5)).unwrap();
        assert_eq!(e.mean, 1.0);
        let e = estimate_kth_tail(50, 50, 4.0, 500, RngStream::new(5)).unwrap();
        assert_eq!(e.mean, 0.0);
        assert!(e.zero_hits);
        assert!(estimate_kth_tail(5, 6, 1.0, 10, RngStream::new(5)).is_err());
    }
}
