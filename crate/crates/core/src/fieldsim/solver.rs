use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::geometry::{curvature, log_gradient, log_norm_sqr, morse_from_derivs, real_gradient, SINGULAR_NORM};
use super::section::{chordal_distance, eval_derivs, fs_uniform, ChartPoint, Derivatives, SectionSample};
use crate::critstats::{self, Window};
use crate::error::{domain, Result};
use crate::estimate::CountEstimate;
use crate::rng::RngStream;

/// Largest projective dimension supported by the direct counter.
pub const MAX_DIRECT_M: usize = 3;

/// Critical point search settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Size of the first batch of starts; `None` uses
    /// [`default_starts`] for the section's `(m, N)`.
    pub starts: Option<usize>,
    /// Cap on the total number of starts per section.
    pub max_starts: usize,
    /// Convergence threshold on `|d log ||s||_h^2 / dz|`.
    pub tol: f64,
    pub max_iter: usize,
    /// Chordal radius within which two converged points are the same.
    pub dedup: f64,
    /// Express every start in this chart instead of its best chart.
    pub start_chart: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { starts: None, max_starts: 10_000, tol: 1e-10, max_iter: 100, dedup: 1e-6, start_chart: None }
    }
}

/// A critical point of `||s||_h` with its critical value and Morse data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub location: ChartPoint,
    /// `||s(z)||_h^2 / (m + 1)`.
    pub normalized_value: f64,
    pub index: usize,
    /// `|d log ||s||_h^2 / dz|` at the returned location.
    pub residual: f64,
    pub degenerate: bool,
}

/// Critical points of one section and the bookkeeping of the search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionCritical {
    pub points: Vec<CriticalPoint>,
    pub starts_used: usize,
    /// The last doubling found nothing new and the Euler characteristic
    /// check holds. Unstable sections are flagged, not counted.
    pub stable: bool,
}

impl SectionCritical {
    /// `sum (-1)^index` over the critical points.
    pub fn euler_sum(&self) -> i64 {
        self.points.iter().map(|p| if p.index % 2 == 0 { 1 } else { -1 }).sum()
    }

    /// Number of nondegenerate critical points of Morse index `index` with
    /// normalized value in `window`.
    pub fn count(&self, index: usize, window: &Window) -> usize {
        self.points.iter().filter(|p| !p.degenerate && p.index == index && window.contains(p.normalized_value)).count()
    }
}

/// Euler characteristic of the complement of a smooth degree-`N`
/// hypersurface in `CP^m`: `(1 - (1-N)^{m+1}) / N`. By Morse theory it
/// equals `sum (-1)^index` over the critical points of `||s||_h`.
pub fn euler_target(m: usize, degree: u32) -> i64 {
    let n = degree as i64;
    (1 - (1 - n).pow(m as u32 + 1)) / n
}

/// Default first batch: 50 times the expected total number of critical
/// points, within `[100, 10^4]`. The expectation comes from a small fixed
/// seed Wishart estimate.
pub fn default_starts(m: usize, degree: u32) -> Result<usize> {
    let e = critstats::mc_expected_count_total(m, degree, Window::all(), 4000, RngStream::new(0x5eed))?;
    Ok(((50.0 * e.mean).ceil() as usize).clamp(100, 10_000))
}

/// Real Jacobian of the covariant gradient `G_j = f_j - f N zbar_j / s`,
/// `s = 1 + |z|^2`, in coordinates `(x, y)`. With `P = dG/dz` and
/// `Q = dG/dzbar = -f Theta_N` the blocks are `Re(P+Q)`, `-Im(P-Q)`,
/// `Im(P+Q)`, `Re(P-Q)`.
fn covariant_jacobian(d: &Derivatives, p: &ChartPoint, degree: u32) -> DMatrix<f64> {
    let m = p.m();
    let s = 1.0 + p.norm_sqr();
    let n = degree as f64;
    let theta = curvature(&p.z, degree);
    let mut j = DMatrix::zeros(2 * m, 2 * m);
    for a in 0..m {
        for b in 0..m {
            let zb = p.z[a].conj();
            let pp = d.hess[(a, b)] - d.grad[b] * zb * (n / s) + d.f * zb * p.z[b].conj() * (n / (s * s));
            let qq = -d.f * theta[(a, b)];
            j[(a, b)] = (pp + qq).re;
            j[(a, m + b)] = -(pp - qq).im;
            j[(m + a, b)] = (pp + qq).im;
            j[(m + a, m + b)] = (pp - qq).re;
        }
    }
    j
}

/// Damped Newton iteration on the covariant gradient, switching to the best
/// chart whenever a coordinate leaves the unit disc.
///
/// The covariant gradient is smooth across the zero divisor, unlike the
/// gradient of `log ||s||_h^2`, whose singularity at zeros of `f` shrinks
/// the basins of critical points with small values. Convergence is judged
/// on `|G| / |f|`, the gradient of `log ||s||_h^2`.
fn newton(sample: &SectionSample, mut p: ChartPoint, cfg: &SolverConfig) -> Option<(ChartPoint, f64)> {
    let m = sample.m();
    let degree = sample.degree();
    let n = degree as f64;
    for _ in 0..cfg.max_iter {
        let d = eval_derivs(sample, &p);
        let s = 1.0 + p.norm_sqr();
        let g: Vec<Complex64> = d.grad.iter().zip(&p.z).map(|(&gj, &z)| gj - d.f * z.conj() * (n / s)).collect();
        if (0.5 * log_norm_sqr(d.f, &p, degree)).exp() >= SINGULAR_NORM {
            let res = g.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt() / d.f.norm();
            if res <= cfg.tol {
                return Some((p, res));
            }
        }
        let mut rhs = DVector::zeros(2 * m);
        for j in 0..m {
            rhs[j] = -g[j].re;
            rhs[m + j] = -g[j].im;
        }
        let mut step = covariant_jacobian(&d, &p, degree).lu().solve(&rhs)?;
        let len = step.norm();
        if !len.is_finite() {
            return None;
        }
        if len > 0.5 {
            step *= 0.5 / len;
        }
        for j in 0..m {
            p.z[j] += Complex64::new(step[j], step[m + j]);
        }
        if p.sup_norm() > 1.0 {
            p = p.rechart();
        }
    }
    None
}

fn start_point<R: Rng + ?Sized>(m: usize, cfg: &SolverConfig, rng: &mut R) -> ChartPoint {
    let p = fs_uniform(m, rng);
    match cfg.start_chart {
        Some(c) if c <= m => ChartPoint::from_homogeneous(&p.homogeneous(), c).unwrap_or(p),
        _ => p,
    }
}

/// Runs `count` Newton starts and merges converged points into `found`.
/// Returns the number of new points.
fn run_batch<R: Rng + ?Sized>(
    sample: &SectionSample,
    cfg: &SolverConfig,
    count: usize,
    rng: &mut R,
    found: &mut Vec<(ChartPoint, f64)>,
) -> usize {
    let mut new = 0;
    for _ in 0..count {
        let start = start_point(sample.m(), cfg, rng);
        if let Some((p, res)) = newton(sample, start, cfg) {
            let p = p.rechart();
            if !found.iter().any(|(q, _)| chordal_distance(&p, q) <= cfg.dedup) {
                found.push((p, res));
                new += 1;
            }
        }
    }
    new
}

/// Finds the critical points of `||s||_h` by multistart Newton.
///
/// Starts are Fubini-Study uniform. After the first batch the number of
/// starts is doubled until a doubling finds no new point and the Euler
/// characteristic check holds; a section that is still changing at
/// `max_starts` is returned with `stable = false`.
pub fn find_critical_points<R: Rng + ?Sized>(sample: &SectionSample, cfg: &SolverConfig, rng: &mut R) -> Result<SectionCritical> {
    let m = sample.m();
    if m > MAX_DIRECT_M {
        return Err(domain(format!("direct counting supports m <= {MAX_DIRECT_M}, got m = {m}")));
    }
    if sample.degree() < 2 {
        return Err(domain("direct counting needs N >= 2"));
    }
    let first = match cfg.starts {
        Some(s) => s.max(1),
        None => default_starts(m, sample.degree())?,
    };
    let target = euler_target(m, sample.degree());
    let mut found = Vec::new();
    run_batch(sample, cfg, first, rng, &mut found);
    let mut used = first;
    let mut stable = false;
    while used < cfg.max_starts {
        let batch = used.min(cfg.max_starts - used);
        let new = run_batch(sample, cfg, batch, rng, &mut found);
        used += batch;
        if new == 0 {
            let provisional = classify(sample, &found)?;
            if provisional.iter().map(|p| if p.index % 2 == 0 { 1 } else { -1 }).sum::<i64>() == target {
                stable = true;
                return Ok(SectionCritical { points: provisional, starts_used: used, stable });
            }
        }
    }
    let points = classify(sample, &found)?;
    Ok(SectionCritical { points, starts_used: used, stable })
}

fn classify(sample: &SectionSample, found: &[(ChartPoint, f64)]) -> Result<Vec<CriticalPoint>> {
    let degree = sample.degree();
    let m1 = sample.m() as f64 + 1.0;
    found
        .iter()
        .map(|(p, res)| {
            let d = eval_derivs(sample, p);
            let info = morse_from_derivs(&d, p, degree)?;
            Ok(CriticalPoint {
                location: p.clone(),
                normalized_value: log_norm_sqr(d.f, p, degree).exp() / m1,
                index: info.index,
                residual: *res,
                degenerate: info.degenerate,
            })
        })
        .collect()
}

/// Critical points of `nsections` independent random sections.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirectSurvey {
    pub m: usize,
    pub degree: u32,
    pub config: SolverConfig,
    pub seed: RngStream,
    /// One entry per section, in section order.
    pub sections: Vec<SectionCritical>,
}

/// A direct count: the estimate over stable sections plus how many
/// sections were excluded as unstable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirectEstimate {
    pub estimate: CountEstimate,
    pub flagged: usize,
}

impl DirectSurvey {
    /// Number of sections whose search did not stabilize.
    pub fn flagged(&self) -> usize {
        self.sections.iter().filter(|s| !s.stable).count()
    }

    fn stable_counts<F: Fn(&SectionCritical) -> usize>(&self, count: F) -> DirectEstimate {
        let w: Vec<f64> = self.sections.iter().filter(|s| s.stable).map(|s| count(s) as f64).collect();
        DirectEstimate { estimate: CountEstimate::from_weights(&w, 0.0, self.seed), flagged: self.flagged() }
    }

    /// Mean number of critical points of index `2m - k` with normalized
    /// value in `window`.
    pub fn count_estimate(&self, k: usize, window: Window) -> Result<DirectEstimate> {
        if k > self.m {
            return Err(domain(format!("k = {k} exceeds m = {}", self.m)));
        }
        let index = 2 * self.m - k;
        Ok(self.stable_counts(|s| s.count(index, &window)))
    }

    /// Mean number of critical points of any index in `window`.
    pub fn total_estimate(&self, window: Window) -> DirectEstimate {
        self.stable_counts(|s| (self.m..=2 * self.m).map(|i| s.count(i, &window)).sum())
    }

    /// Fraction of sections flagged unstable.
    pub fn instability_rate(&self) -> f64 {
        self.flagged() as f64 / self.sections.len().max(1) as f64
    }
}

/// Samples `nsections` sections (section `i` from `stream.substream(i)`)
/// and finds their critical points in parallel.
pub fn direct_survey(m: usize, degree: u32, nsections: usize, cfg: SolverConfig, stream: RngStream) -> Result<DirectSurvey> {
    if m == 0 || m > MAX_DIRECT_M {
        return Err(domain(format!("direct counting supports 1 <= m <= {MAX_DIRECT_M}, got m = {m}")));
    }
    if degree < 2 {
        return Err(domain("direct counting needs N >= 2"));
    }
    let mut cfg = cfg;
    if cfg.starts.is_none() {
        cfg.starts = Some(default_starts(m, degree)?);
    }
    let sections = (0..nsections as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.substream(i).rng();
            let sample = SectionSample::sample_with(m, degree, &mut rng)?;
            find_critical_points(&sample, &cfg, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DirectSurvey { m, degree, config: cfg, seed: stream, sections })
}

/// Direct Monte Carlo estimate of `E N_{m, 2m-k, N}(window)`.
pub fn direct_count_estimate(
    m: usize,
    degree: u32,
    k: usize,
    window: Window,
    nsections: usize,
    stream: RngStream,
) -> Result<DirectEstimate> {
    direct_survey(m, degree, nsections, SolverConfig::default(), stream)?.count_estimate(k, window)
}

/// Real Hessian by central differences of the real gradient, for
/// validation of the analytic one.
pub fn finite_difference_hessian(sample: &SectionSample, point: &ChartPoint, h: f64) -> DMatrix<f64> {
    let m = point.m();
    let degree = sample.degree();
    let grad_at = |p: &ChartPoint| real_gradient(&log_gradient(&eval_derivs(sample, p), p, degree));
    let mut out = DMatrix::zeros(2 * m, 2 * m);
    for c in 0..2 * m {
        let shift = if c < m { Complex64::new(h, 0.0) } else { Complex64::new(0.0, h) };
        let mut plus = point.clone();
        let mut minus = point.clone();
        plus.z[c % m] += shift;
        minus.z[c % m] -= shift;
        let (gp, gm) = (grad_at(&plus), grad_at(&minus));
        for r in 0..2 * m {
            out[(r, c)] = (gp[r] - gm[r]) / (2.0 * h);
        }
    }
    out
}
