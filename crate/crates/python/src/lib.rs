//! Python bindings: the `critpoints_py` extension module.
//!
//! Windows are passed as `(lo, hi)` tuples with `hi = float("inf")` for an
//! unbounded window; seeds are plain integers. Long computations release
//! the interpreter lock.

use critpoints::critstats::{self, RateTarget, Side, Window};
use critpoints::fieldsim::{self, SolverConfig};
use critpoints::verify::Check;
use critpoints::wishart::{self, Sampler};
use critpoints::{mp, RngStream};
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: critpoints::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// `(lo, hi)` to a window; `None` is `[0, inf)`.
pub fn parse_window(w: Option<(f64, f64)>) -> Result<Window, String> {
    match w {
        None => Ok(Window::all()),
        Some((lo, hi)) => Window::new(lo, hi).map_err(|e| e.to_string()),
    }
}

pub fn parse_sampler(s: &str) -> Result<Sampler, String> {
    match s {
        "dense" => Ok(Sampler::Dense),
        "tridiagonal" => Ok(Sampler::Tridiagonal),
        _ => Err(format!("unknown sampler {s:?}; use \"dense\" or \"tridiagonal\"")),
    }
}

pub fn parse_target(kind: &str, k: Option<usize>, side: &str, gamma: f64) -> Result<RateTarget, String> {
    let side = match side {
        "above" => Side::Above,
        "below" => Side::Below,
        _ => return Err(format!("unknown side {side:?}; use \"above\" or \"below\"")),
    };
    match kind {
        "total" => Ok(RateTarget::Total),
        "index-m" => Ok(RateTarget::IndexM),
        "fixed-k" => k.map(|k| RateTarget::FixedK { k, side }).ok_or_else(|| "fixed-k needs k".to_string()),
        "linear-gamma" => Ok(RateTarget::LinearGamma { gamma }),
        _ => Err(format!("unknown rate target {kind:?}")),
    }
}

fn value_err(s: String) -> PyErr {
    PyValueError::new_err(s)
}

/// A Monte Carlo estimate. When `overflow` is set only the `log_*` fields
/// are meaningful.
#[pyclass(name = "CountEstimate", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyCountEstimate {
    #[pyo3(get)]
    pub mean: f64,
    #[pyo3(get)]
    pub stderr: f64,
    #[pyo3(get)]
    pub log_mean: f64,
    #[pyo3(get)]
    pub log_stderr: f64,
    #[pyo3(get)]
    pub n: usize,
    #[pyo3(get)]
    pub seed: u64,
    #[pyo3(get)]
    pub zero_hits: bool,
    #[pyo3(get)]
    pub overflow: bool,
    inner: critpoints::CountEstimate,
}

impl From<critpoints::CountEstimate> for PyCountEstimate {
    fn from(e: critpoints::CountEstimate) -> Self {
        Self {
            mean: e.mean,
            stderr: e.stderr,
            log_mean: e.log_mean,
            log_stderr: e.log_stderr,
            n: e.n,
            seed: e.seed.seed,
            zero_hits: e.zero_hits,
            overflow: e.overflow,
            inner: e,
        }
    }
}

#[pymethods]
impl PyCountEstimate {
    fn z_score(&self, exact: f64) -> f64 {
        self.inner.z_score(exact)
    }

    fn combined_z(&self, other: &PyCountEstimate) -> f64 {
        self.inner.combined_z(&other.inner)
    }

    fn __repr__(&self) -> String {
        format!("CountEstimate(mean={}, stderr={}, n={})", self.mean, self.stderr, self.n)
    }
}

/// Eigenvalues of one Wishart draw, in decreasing order.
#[pyclass(name = "Spectrum", frozen)]
pub struct PySpectrum(wishart::Spectrum);

#[pymethods]
impl PySpectrum {
    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.0.eigenvalues().to_vec()
    }

    #[getter]
    fn m(&self) -> usize {
        self.0.m()
    }

    /// The `k`-th largest eigenvalue, 1-based.
    fn kth(&self, k: usize) -> PyResult<f64> {
        if k == 0 || k > self.0.m() {
            return Err(value_err(format!("k must be in 1..={}", self.0.m())));
        }
        Ok(self.0.kth(k))
    }

    fn largest(&self) -> f64 {
        self.0.largest()
    }

    fn smallest(&self) -> f64 {
        self.0.smallest()
    }

    fn trace(&self) -> f64 {
        self.0.trace()
    }

    fn __len__(&self) -> usize {
        self.0.m()
    }
}

#[pyclass(name = "RatePoint", get_all, frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyRatePoint {
    pub degree: u32,
    pub x: Option<f64>,
    pub m: Option<usize>,
    pub analytic_rate: f64,
    pub empirical_rate: Option<f64>,
    pub zero_hits: bool,
}

impl From<critstats::RatePoint> for PyRatePoint {
    fn from(p: critstats::RatePoint) -> Self {
        Self { degree: p.degree, x: p.x, m: p.m, analytic_rate: p.analytic_rate, empirical_rate: p.empirical_rate, zero_hits: p.zero_hits }
    }
}

/// A random section of `O(N)` over `CP^m`.
#[pyclass(name = "Section", frozen)]
pub struct PySection(fieldsim::SectionSample);

#[pyclass(name = "CriticalPoint", get_all, frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyCriticalPoint {
    /// Homogeneous coordinates, `1` in the chart coordinate.
    pub homogeneous: Vec<Complex64>,
    pub chart: usize,
    pub normalized_value: f64,
    pub index: usize,
    pub residual: f64,
    pub degenerate: bool,
}

#[pymethods]
impl PySection {
    #[staticmethod]
    #[pyo3(signature = (m, degree, seed, stream = 0))]
    fn sample(m: usize, degree: u32, seed: u64, stream: u64) -> PyResult<Self> {
        fieldsim::SectionSample::sample(m, degree, &RngStream::with_stream(seed, stream)).map(Self).map_err(err)
    }

    #[getter]
    fn m(&self) -> usize {
        self.0.m()
    }

    #[getter]
    fn degree(&self) -> u32 {
        self.0.degree()
    }

    /// Value of the homogeneous polynomial at `zh` (length `m + 1`).
    fn eval(&self, zh: Vec<Complex64>) -> PyResult<Complex64> {
        if zh.len() != self.0.m() + 1 {
            return Err(value_err(format!("expected {} homogeneous coordinates", self.0.m() + 1)));
        }
        Ok(self.0.eval_homogeneous(&zh))
    }

    /// All critical points of the pointwise norm, found by Newton's method
    /// from random starts. Returns `(points, stable)`.
    #[pyo3(signature = (seed = 0, starts = None))]
    fn critical_points(&self, py: Python<'_>, seed: u64, starts: Option<usize>) -> PyResult<(Vec<PyCriticalPoint>, bool)> {
        let cfg = SolverConfig { starts, ..Default::default() };
        let r = py.detach(|| fieldsim::find_critical_points(&self.0, &cfg, &mut RngStream::new(seed).rng())).map_err(err)?;
        let pts = r
            .points
            .iter()
            .map(|p| PyCriticalPoint {
                homogeneous: p.location.homogeneous(),
                chart: p.location.chart,
                normalized_value: p.normalized_value,
                index: p.index,
                residual: p.residual,
                degenerate: p.degenerate,
            })
            .collect();
        Ok((pts, r.stable))
    }
}

/// Critical points of many sampled sections.
#[pyclass(name = "DirectSurvey", frozen)]
pub struct PyDirectSurvey(fieldsim::DirectSurvey);

#[pymethods]
impl PyDirectSurvey {
    /// Mean number of critical points of index `2m - k` in `window`.
    #[pyo3(signature = (k, window = None))]
    fn count_estimate(&self, k: usize, window: Option<(f64, f64)>) -> PyResult<PyCountEstimate> {
        let w = parse_window(window).map_err(value_err)?;
        Ok(self.0.count_estimate(k, w).map_err(err)?.estimate.into())
    }

    #[pyo3(signature = (window = None))]
    fn total_estimate(&self, window: Option<(f64, f64)>) -> PyResult<PyCountEstimate> {
        let w = parse_window(window).map_err(value_err)?;
        Ok(self.0.total_estimate(w).estimate.into())
    }

    #[getter]
    fn flagged(&self) -> usize {
        self.0.flagged()
    }

    #[getter]
    fn instability_rate(&self) -> f64 {
        self.0.instability_rate()
    }

    /// Critical point indices of each section.
    #[getter]
    fn indices(&self) -> Vec<Vec<usize>> {
        self.0.sections.iter().map(|s| s.points.iter().map(|p| p.index).collect()).collect()
    }
}

#[pyclass(name = "CheckResult", get_all, frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyCheckResult {
    pub name: String,
    pub passed: bool,
    pub summary: String,
    /// `(label, value, rule, pass)` per measurement.
    pub measurements: Vec<(String, f64, String, bool)>,
    pub seconds: f64,
}

// Marchenko-Pastur law.

#[pyfunction]
fn mp_density(x: f64) -> f64 {
    mp::density(x)
}

#[pyfunction]
fn mp_cdf(x: f64) -> f64 {
    mp::cdf(x)
}

#[pyfunction]
fn mp_tail_mass(s: f64) -> f64 {
    mp::tail_mass(s)
}

#[pyfunction]
fn mp_tail_quantile(gamma: f64) -> PyResult<f64> {
    mp::tail_quantile(gamma).map_err(err)
}

#[pyfunction]
fn mp_rate(x: f64) -> f64 {
    mp::rate(x)
}

#[pyfunction]
fn mp_log_potential(x: f64) -> PyResult<f64> {
    mp::log_potential_mp(x).map_err(err)
}

// Wishart ensemble.

#[pyfunction]
#[pyo3(signature = (m, seed, stream = 0, sampler = "dense"))]
fn sample_spectrum(m: usize, seed: u64, stream: u64, sampler: &str) -> PyResult<PySpectrum> {
    let s = parse_sampler(sampler).map_err(value_err)?;
    wishart::sample_with(s, m, &RngStream::with_stream(seed, stream)).map(PySpectrum).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (m, n, seed, sampler = "dense"))]
fn sample_spectra(py: Python<'_>, m: usize, n: usize, seed: u64, sampler: &str) -> PyResult<Vec<PySpectrum>> {
    let s = parse_sampler(sampler).map_err(value_err)?;
    let v = py.detach(|| wishart::sample_many(s, m, n, RngStream::new(seed))).map_err(err)?;
    Ok(v.into_iter().map(PySpectrum).collect())
}

#[pyfunction]
fn wishart_log_normalizer(m: usize) -> f64 {
    wishart::log_normalizer(m)
}

#[pyfunction]
fn smallest_tail_exact(m: usize, x: f64) -> f64 {
    wishart::smallest_tail_exact(m, x)
}

// Exact and Monte Carlo counts.

#[pyfunction]
fn expected_index_m_total(m: usize, degree: u32) -> PyResult<f64> {
    critstats::expected_index_m_total(m, degree).map_err(err)
}

#[pyfunction]
fn log_expected_index_m_total(m: usize, degree: u32) -> PyResult<f64> {
    critstats::log_expected_index_m_total(m, degree).map_err(err)
}

#[pyfunction]
fn expected_index_m_tail(m: usize, degree: u32, x: f64) -> PyResult<f64> {
    critstats::expected_index_m_tail(m, degree, x).map_err(err)
}

#[pyfunction]
fn density_index_m(m: usize, degree: u32, x: f64) -> PyResult<f64> {
    critstats::density_index_m(m, degree, x).map_err(err)
}

/// Expected number of critical points of index `2m - k` with normalized
/// value in `window`.
#[pyfunction]
#[pyo3(signature = (m, k, degree, n, seed, window = None, sampler = "dense"))]
#[allow(clippy::too_many_arguments)]
fn mc_expected_count_index(
    py: Python<'_>,
    m: usize,
    k: usize,
    degree: u32,
    n: usize,
    seed: u64,
    window: Option<(f64, f64)>,
    sampler: &str,
) -> PyResult<PyCountEstimate> {
    let w = parse_window(window).map_err(value_err)?;
    let s = parse_sampler(sampler).map_err(value_err)?;
    let e = py.detach(|| critstats::mc_expected_count_index_with(m, k, degree, w, n, RngStream::new(seed), s)).map_err(err)?;
    Ok(e.into())
}

/// Expected total number of critical points with normalized value in
/// `window`. `conditional=True` uses the estimator built for deep tails.
#[pyfunction]
#[pyo3(signature = (m, degree, n, seed, window = None, sampler = "dense", conditional = false))]
#[allow(clippy::too_many_arguments)]
fn mc_expected_count_total(
    py: Python<'_>,
    m: usize,
    degree: u32,
    n: usize,
    seed: u64,
    window: Option<(f64, f64)>,
    sampler: &str,
    conditional: bool,
) -> PyResult<PyCountEstimate> {
    let w = parse_window(window).map_err(value_err)?;
    let s = parse_sampler(sampler).map_err(value_err)?;
    let stream = RngStream::new(seed);
    let e = py
        .detach(|| {
            if conditional {
                critstats::mc_expected_count_total_conditional(m, degree, w, n, stream)
            } else {
                critstats::mc_expected_count_total_with(m, degree, w, n, stream, s)
            }
        })
        .map_err(err)?;
    Ok(e.into())
}

/// Limiting growth rate `lim (1/m) log E[count]`. `target` is one of
/// `"total"`, `"index-m"`, `"fixed-k"`, `"linear-gamma"`.
#[pyfunction]
#[pyo3(signature = (degree, target, x = 0.0, k = None, side = "above", gamma = 0.5))]
fn analytic_rate(degree: u32, target: &str, x: f64, k: Option<usize>, side: &str, gamma: f64) -> PyResult<PyRatePoint> {
    let p = match parse_target(target, k, side, gamma).map_err(value_err)? {
        RateTarget::Total => critstats::rate_total(degree, x),
        RateTarget::IndexM => critstats::rate_index_m(degree),
        RateTarget::FixedK { k, side } => critstats::rate_fixed_k(degree, k, x, side),
        RateTarget::LinearGamma { gamma } => critstats::rate_linear_gamma(degree, gamma),
    };
    Ok(p.map_err(err)?.into())
}

/// Finite-`m` growth rates over an ascending list of dimensions.
#[pyfunction]
#[pyo3(signature = (degree, target, ms, n, seed, x = 0.0, k = None, side = "above", gamma = 0.5))]
#[allow(clippy::too_many_arguments)]
fn empirical_rate_curve(
    py: Python<'_>,
    degree: u32,
    target: &str,
    ms: Vec<usize>,
    n: usize,
    seed: u64,
    x: f64,
    k: Option<usize>,
    side: &str,
    gamma: f64,
) -> PyResult<Vec<PyRatePoint>> {
    let t = parse_target(target, k, side, gamma).map_err(value_err)?;
    let pts = py.detach(|| critstats::empirical_rate_curve(degree, t, x, &ms, n, RngStream::new(seed))).map_err(err)?;
    Ok(pts.into_iter().map(Into::into).collect())
}

// Direct simulation.

#[pyfunction]
#[pyo3(signature = (m, degree, sections, seed, starts = None))]
fn direct_survey(py: Python<'_>, m: usize, degree: u32, sections: usize, seed: u64, starts: Option<usize>) -> PyResult<PyDirectSurvey> {
    let cfg = SolverConfig { starts, ..Default::default() };
    py.detach(|| fieldsim::direct_survey(m, degree, sections, cfg, RngStream::new(seed))).map(PyDirectSurvey).map_err(err)
}

#[pyfunction]
fn euler_target(m: usize, degree: u32) -> i64 {
    fieldsim::euler_target(m, degree)
}

type CovarianceRow = (String, String, Complex64, Complex64, f64);

/// Empirical covariances at the origin against their exact values, as
/// `(identity, cell, empirical, exact, z)` rows.
#[pyfunction]
fn covariance_table(py: Python<'_>, m: usize, degree: u32, n: usize, seed: u64) -> PyResult<Vec<CovarianceRow>> {
    let r = py.detach(|| fieldsim::covariance_selftest(m, degree, n, RngStream::new(seed))).map_err(err)?;
    Ok(r.cells.into_iter().map(|c| (c.identity, c.label, c.empirical, c.exact, c.z)).collect())
}

// Verification checks.

#[pyfunction]
fn check_names() -> Vec<&'static str> {
    Check::ALL.iter().map(|c| c.name()).collect()
}

#[pyfunction]
#[pyo3(signature = (name, seed = critpoints::verify::DEFAULT_SEED))]
fn run_check(py: Python<'_>, name: &str, seed: u64) -> PyResult<PyCheckResult> {
    let check = Check::from_name(name).ok_or_else(|| value_err(format!("unknown check {name:?}")))?;
    let r = py.detach(|| check.run(seed)).map_err(err)?;
    Ok(PyCheckResult {
        summary: r.summary_line(),
        name: r.name,
        passed: r.pass,
        measurements: r.measurements.into_iter().map(|m| (m.label, m.value, m.rule, m.pass)).collect(),
        seconds: r.seconds,
    })
}

#[pymodule]
fn critpoints_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCountEstimate>()?;
    m.add_class::<PySpectrum>()?;
    m.add_class::<PyRatePoint>()?;
    m.add_class::<PySection>()?;
    m.add_class::<PyCriticalPoint>()?;
    m.add_class::<PyDirectSurvey>()?;
    m.add_class::<PyCheckResult>()?;
    m.add_function(wrap_pyfunction!(mp_density, m)?)?;
    m.add_function(wrap_pyfunction!(mp_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(mp_tail_mass, m)?)?;
    m.add_function(wrap_pyfunction!(mp_tail_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(mp_rate, m)?)?;
    m.add_function(wrap_pyfunction!(mp_log_potential, m)?)?;
    m.add_function(wrap_pyfunction!(sample_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(sample_spectra, m)?)?;
    m.add_function(wrap_pyfunction!(wishart_log_normalizer, m)?)?;
    m.add_function(wrap_pyfunction!(smallest_tail_exact, m)?)?;
    m.add_function(wrap_pyfunction!(expected_index_m_total, m)?)?;
    m.add_function(wrap_pyfunction!(log_expected_index_m_total, m)?)?;
    m.add_function(wrap_pyfunction!(expected_index_m_tail, m)?)?;
    m.add_function(wrap_pyfunction!(density_index_m, m)?)?;
    m.add_function(wrap_pyfunction!(mc_expected_count_index, m)?)?;
    m.add_function(wrap_pyfunction!(mc_expected_count_total, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_rate, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_rate_curve, m)?)?;
    m.add_function(wrap_pyfunction!(direct_survey, m)?)?;
    m.add_function(wrap_pyfunction!(euler_target, m)?)?;
    m.add_function(wrap_pyfunction!(covariance_table, m)?)?;
    m.add_function(wrap_pyfunction!(check_names, m)?)?;
    m.add_function(wrap_pyfunction!(run_check, m)?)?;
    m.add("DEFAULT_SEED", critpoints::verify::DEFAULT_SEED)?;
    Ok(())
}
