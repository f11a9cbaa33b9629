use serde::{Deserialize, Serialize};

use crate::rng::RngStream;

/// Result of a Monte Carlo estimate of a nonnegative expectation.
///
/// The estimators work with raw per-sample weights times a (possibly huge)
/// deterministic prefactor kept in log form. `mean`/`stderr` hold the linear
/// scale values when they fit in an `f64`; otherwise `overflow` is set and
/// only the `log_*` fields are meaningful.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub log_mean: f64,
    pub log_stderr: f64,
    pub n: usize,
    pub seed: RngStream,
    /// Every sample weight was zero. The mean is then 0 with stderr 0, and
    /// the true value is only bounded above (one-sided, roughly 3/n of the
    /// prefactor at 95%).
    pub zero_hits: bool,
    pub overflow: bool,
}

impl CountEstimate {
    /// Builds the estimate from per-sample weights on the linear scale.
    pub fn from_weights(weights: &[f64], log_prefactor: f64, seed: RngStream) -> Self {
        let logs: Vec<f64> = weights.iter().map(|&w| if w > 0.0 { w.ln() } else { f64::NEG_INFINITY }).collect();
        Self::from_log_weights(&logs, log_prefactor, seed)
    }

    /// Builds the estimate from per-sample log-weights (`-inf` for a zero
    /// weight). Summation runs in index order, so the result is independent
    /// of how the weights were produced.
    pub fn from_log_weights(log_weights: &[f64], log_prefactor: f64, seed: RngStream) -> Self {
        let n = log_weights.len();
        let shift = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if n == 0 || shift == f64::NEG_INFINITY {
            return Self {
                mean: 0.0,
                stderr: 0.0,
                log_mean: f64::NEG_INFINITY,
                log_stderr: f64::NEG_INFINITY,
                n,
                seed,
                zero_hits: true,
                overflow: false,
            };
        }
        let scaled: Vec<f64> = log_weights.iter().map(|&l| (l - shift).exp()).collect();
        let nf = n as f64;
        let mean = scaled.iter().sum::<f64>() / nf;
        let var = if n > 1 { scaled.iter().map(|w| (w - mean) * (w - mean)).sum::<f64>() / (nf - 1.0) } else { 0.0 };
        let log_mean = mean.ln() + shift + log_prefactor;
        let log_stderr = if var > 0.0 { 0.5 * (var / nf).ln() + shift + log_prefactor } else { f64::NEG_INFINITY };
        let overflow = log_mean > 700.0;
        Self {
            mean: if overflow { f64::INFINITY } else { log_mean.exp() },
            stderr: if overflow { f64::INFINITY } else { log_stderr.exp() },
            log_mean,
            log_stderr,
            n,
            seed,
            zero_hits: false,
            overflow,
        }
    }

    /// Standardized deviation of the estimate from an exact value.
    pub fn z_score(&self, exact: f64) -> f64 {
        z_of(self.mean - exact, self.stderr)
    }

    /// Standardized difference of two independent estimates.
    pub fn combined_z(&self, other: &CountEstimate) -> f64 {
        z_of(self.mean - other.mean, self.stderr.hypot(other.stderr))
    }
}

fn z_of(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}
