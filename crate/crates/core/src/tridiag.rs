//! Tridiagonal model of the real Wishart ensemble.
//!
//! Householder bidiagonalization of an `(m+1) x m` Gaussian matrix leaves an
//! upper bidiagonal matrix with independent chi-distributed entries
//! (diagonal `chi_{m+1}, ..., chi_2`, superdiagonal `chi_{m-1}, ..., chi_1`),
//! so `W = X^T X` has the spectrum of the symmetric tridiagonal `B^T B`.
//! Sampling costs `O(m)` and Sturm sequences give eigenvalue counts,
//! individual order statistics and `log |det(t - W)|` in `O(m)` each, which
//! is what the large-`m` estimators need.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution};

/// Symmetric tridiagonal matrix with the Wishart spectrum.
#[derive(Debug, Clone)]
pub struct LaguerreTridiagonal {
    diag: Vec<f64>,
    /// Squares of the off-diagonal entries; `off_sq[i]` couples `i` and `i+1`.
    off_sq: Vec<f64>,
}

impl LaguerreTridiagonal {
    /// Draws the tridiagonal model of the `m`-dimensional ensemble
    /// (entry variance `1/m`, `m+1` rows).
    pub fn sample<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Self {
        assert!(m >= 1, "ensemble dimension must be positive");
        let scale = 1.0 / m as f64;
        // a_i^2 ~ chi^2_{m+1-i}, b_i^2 ~ chi^2_{m-1-i}, i = 0-based.
        let a2: Vec<f64> = (0..m).map(|i| chi_squared(rng, (m + 1 - i) as f64) * scale).collect();
        let b2: Vec<f64> = (0..m.saturating_sub(1)).map(|i| chi_squared(rng, (m - 1 - i) as f64) * scale).collect();
        let diag = (0..m).map(|i| a2[i] + if i > 0 { b2[i - 1] } else { 0.0 }).collect();
        let off_sq = (0..m.saturating_sub(1)).map(|i| a2[i] * b2[i]).collect();
        Self { diag, off_sq }
    }

    /// Builds the matrix from its diagonal and off-diagonal.
    pub fn from_parts(diag: Vec<f64>, off: &[f64]) -> Self {
        assert_eq!(off.len() + 1, diag.len());
        Self { diag, off_sq: off.iter().map(|e| e * e).collect() }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn trace(&self) -> f64 {
        self.diag.iter().sum()
    }

    /// Gershgorin upper bound on the spectrum.
    pub fn upper_bound(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let left = if i > 0 { self.off_sq[i - 1].sqrt() } else { 0.0 };
                let right = if i + 1 < n { self.off_sq[i].sqrt() } else { 0.0 };
                self.diag[i] + left + right
            })
            .fold(0.0, f64::max)
    }

    /// Number of eigenvalues strictly below `t` (Sturm count).
    pub fn count_below(&self, t: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.dim() {
            let coupling = if i > 0 { self.off_sq[i - 1] / q } else { 0.0 };
            q = self.diag[i] - t - coupling;
            if q == 0.0 {
                q = -f64::EPSILON * (1.0 + t.abs());
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    pub fn count_above(&self, t: f64) -> usize {
        self.dim() - self.count_below(t)
    }

    /// The `k`-th largest eigenvalue (1-based) by bisection.
    pub fn kth_largest(&self, k: usize) -> f64 {
        let n = self.dim();
        assert!((1..=n).contains(&k), "order statistic {k} out of 1..={n}");
        // Eigenvalue index from below is n - k; find t with count_below(t) crossing it.
        let target = n - k;
        let (mut lo, mut hi) = (0.0_f64, self.upper_bound() * (1.0 + 1e-12) + 1e-300);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 1e-15 * hi.max(1e-300) {
                break;
            }
            if self.count_below(mid) > target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// All eigenvalues in `[lo, hi)`, descending.
    pub fn eigenvalues_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let above_lo = self.count_above(lo);
        let above_hi = if hi.is_finite() { self.count_above(hi) } else { 0 };
        ((above_hi + 1)..=above_lo).map(|k| self.kth_largest(k)).collect()
    }

    /// The full spectrum, descending. `O(m^2)`; fine for small dimensions.
    pub fn eigenvalues(&self) -> Vec<f64> {
        (1..=self.dim()).map(|k| self.kth_largest(k)).collect()
    }

    /// `log |det(t I - W)|` and its derivative `sum_j 1/(t - lambda_j)`.
    pub fn log_abs_char(&self, t: f64) -> (f64, f64) {
        let mut log_acc = 0.0;
        let mut prod = 1.0_f64;
        let mut deriv = 0.0;
        let (mut q, mut dq) = (1.0_f64, 0.0_f64);
        for i in 0..self.dim() {
            let (coupling, dcoupling) = if i > 0 {
                let r = self.off_sq[i - 1] / q;
                (r, -r * dq / q)
            } else {
                (0.0, 0.0)
            };
            q = self.diag[i] - t - coupling;
            dq = -1.0 - dcoupling;
            if q == 0.0 {
                q = -f64::EPSILON * (1.0 + t.abs());
            }
            deriv += dq / q;
            prod *= q;
            let a = prod.abs();
            if !(1e-150..=1e150).contains(&a) {
                log_acc += a.ln();
                prod = prod.signum();
            }
        }
        // d/dt log|det(W - t)| = sum dq/q = -sum 1/(lambda_j - t)
        (log_acc + prod.abs().ln(), deriv)
    }

    /// Log-integrals for the conditional law of the top eigenvalue given the
    /// rest of the spectrum.
    ///
    /// Conditioned on `lambda_2 > ... > lambda_m`, the top eigenvalue has
    /// density proportional to `prod_{j>=2} (t - lambda_j) e^{-m t / 2}` on
    /// `(lambda_2, inf)`. Returns `(log int_{[lo,hi) ∩ (lambda_2,inf)} e^{-extra t} g,
    /// log int_{lambda_2}^inf g)`, using the eigenvalues `top = (lambda_1, lambda_2)`.
    pub fn conditional_top_log_integrals(&self, top: (f64, f64), lo: f64, hi: f64, extra_rate: f64) -> (f64, f64) {
        let (lambda1, lambda2) = top;
        let half_dim = self.dim() as f64 / 2.0;
        let rest = |t: f64| -> (f64, f64) {
            let (l, d) = self.log_abs_char(t);
            let gap = t - lambda1;
            (l - gap.abs().ln(), d - 1.0 / gap)
        };
        let den = log_integrate_concave(
            |t| {
                let (l, d) = rest(t);
                (l - half_dim * t, d - half_dim)
            },
            lambda2,
            f64::INFINITY,
            1.0 / self.dim() as f64,
        );
        let a = lo.max(lambda2);
        let num = if a >= hi {
            f64::NEG_INFINITY
        } else {
            log_integrate_concave(
                |t| {
                    let (l, d) = rest(t);
                    (l - (half_dim + extra_rate) * t, d - half_dim - extra_rate)
                },
                a,
                hi,
                1.0 / self.dim() as f64,
            )
        };
        (num, den)
    }
}

fn chi_squared<R: Rng + ?Sized>(rng: &mut R, dof: f64) -> f64 {
    ChiSquared::new(dof).expect("positive degrees of freedom").sample(rng)
}

/// `log int_a^b exp(h(t)) dt` for a concave `h` given with its derivative
/// (`h_and_slope(t) = (h(t), h'(t))`). `scale` is a rough width hint.
///
/// The integration range is trimmed to where `h` is within 45 nats of its
/// maximum and covered with 15-point Kronrod panels in log-sum-exp form.
pub fn log_integrate_concave<F: Fn(f64) -> (f64, f64)>(h_and_slope: F, a: f64, b: f64, scale: f64) -> f64 {
    const DROP: f64 = 45.0;
    const PANELS: usize = 4;
    let h = |t: f64| h_and_slope(t).0;
    let slope = |t: f64| h_and_slope(t).1;

    // Locate the mode. A tiny offset keeps us off a zero of the integrand at a.
    let eps_a = a + scale * 1e-9;
    let mode = if slope(eps_a) <= 0.0 {
        a
    } else {
        let mut step = scale;
        let mut hi = (a + step).min(b);
        while slope(hi) > 0.0 && hi < b {
            step *= 2.0;
            hi = (a + step).min(b);
        }
        if hi >= b && slope(hi) > 0.0 {
            b
        } else {
            let mut lo = a;
            for _ in 0..50 {
                let mid = 0.5 * (lo + hi);
                if slope(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-3 * scale {
                    break;
                }
            }
            0.5 * (lo + hi)
        }
    };
    let peak = h(mode.max(eps_a).min(if b.is_finite() { b } else { f64::MAX }));

    // Cut-offs on either side of the mode.
    let mut right = mode;
    if mode < b {
        let mut step = scale;
        loop {
            let t = (mode + step).min(b);
            right = t;
            if t >= b || h(t) < peak - DROP {
                break;
            }
            step *= 2.0;
        }
    }
    let mut left = mode;
    if mode > a {
        let mut step = scale;
        loop {
            let t = (mode - step).max(a);
            left = t;
            if t <= a || h(t) < peak - DROP {
                break;
            }
            step *= 2.0;
        }
    }

    let mut sum = 0.0;
    for (lo, hi) in [(left, mode), (mode, right)] {
        if hi <= lo {
            continue;
        }
        let width = (hi - lo) / PANELS as f64;
        for p in 0..PANELS {
            let pa = lo + p as f64 * width;
            for (t, w) in crate::quad::gk15_nodes(pa, pa + width) {
                let v = h(t) - peak;
                if v.is_finite() {
                    sum += w * v.exp();
                }
            }
        }
    }
    if sum > 0.0 {
        peak + sum.ln()
    } else {
        f64::NEG_INFINITY
    }
}
