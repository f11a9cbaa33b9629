use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::section::{eval_derivs, ChartPoint, Derivatives, SectionSample};
use crate::error::{domain, Result};
use crate::rng::RngStream;
use crate::stats;
use crate::wishart;

/// One empirical second moment `E X conj(Y)` against its exact value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceCell {
    /// Which identity the cell belongs to, e.g. `"ddf.ddf"`.
    pub identity: String,
    /// Derivative indices, 1-based, e.g. `"11,12"`.
    pub label: String,
    pub empirical: Complex64,
    pub exact: Complex64,
    /// `sqrt(E|Z - EZ|^2 / n)` with `Z = X conj(Y)`.
    pub stderr: f64,
    /// `|empirical - exact| / stderr`.
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub m: usize,
    pub degree: u32,
    pub n: usize,
    pub cells: Vec<CovarianceCell>,
    /// Gaussian density of `df(0)` at the origin from the empirical
    /// covariance, `1 / (pi^m det Sigma)`.
    pub gradient_density: f64,
    /// `1 / (N pi)^m`.
    pub gradient_density_exact: f64,
}

impl CovarianceReport {
    pub fn max_z(&self) -> f64 {
        self.cells.iter().map(|c| c.z).fold(0.0, f64::max)
    }

    pub fn gradient_density_rel_err(&self) -> f64 {
        (self.gradient_density / self.gradient_density_exact - 1.0).abs()
    }

    /// Every cell within `z_max` standard errors and the gradient density
    /// within `rel_tol`.
    pub fn passes(&self, z_max: f64, rel_tol: f64) -> bool {
        self.max_z() <= z_max && self.gradient_density_rel_err() <= rel_tol
    }
}

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// Value derivatives at the origin of chart 0: `f`, `df` and `d^2 f`.
fn origin_derivs(m: usize, degree: u32, stream: &RngStream) -> Result<Derivatives> {
    let s = SectionSample::sample(m, degree, stream)?;
    Ok(eval_derivs(&s, &ChartPoint::origin(m)))
}

/// Empirical second moments of `(f, df, d^2 f)` at the origin against the
/// exact kernel identities
///
/// * `E f conj(f) = 1`
/// * `E f_i conj(f_j) = N delta_ij`
/// * `E f_ij conj(f_kl) = N(N-1)(delta_il delta_jk + delta_ik delta_jl)`
/// * `E f conj(f_i) = E f conj(f_ij) = E f_i conj(f_jk) = 0`
///
/// plus the density of `df(0)` at the origin.
pub fn covariance_selftest(m: usize, degree: u32, n: usize, stream: RngStream) -> Result<CovarianceReport> {
    if n < 2 {
        return Err(domain("need at least two draws"));
    }
    let draws: Vec<Derivatives> =
        (0..n as u64).into_par_iter().map(|i| origin_derivs(m, degree, &stream.substream(i))).collect::<Result<_>>()?;
    let nf = degree as f64;
    let c = nf * (nf - 1.0);
    let mut cells = Vec::new();
    let mut push =
        |identity: &str, label: String, x: &dyn Fn(&Derivatives) -> Complex64, y: &dyn Fn(&Derivatives) -> Complex64, exact: f64| {
            let zs: Vec<Complex64> = draws.iter().map(|d| x(d) * y(d).conj()).collect();
            let mean = zs.iter().sum::<Complex64>() / n as f64;
            let var = zs.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / (n as f64 - 1.0);
            let stderr = (var / n as f64).sqrt();
            let exact = Complex64::new(exact, 0.0);
            let z = if stderr > 0.0 { (mean - exact).norm() / stderr } else { 0.0 };
            cells.push(CovarianceCell { identity: identity.into(), label, empirical: mean, exact, stderr, z });
        };
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i..m).map(move |j| (i, j))).collect();
    push("f.f", String::new(), &|d| d.f, &|d| d.f, 1.0);
    for i in 0..m {
        for j in 0..m {
            push("df.df", format!("{},{}", i + 1, j + 1), &|d| d.grad[i], &|d| d.grad[j], nf * delta(i, j));
        }
    }
    for &(i, j) in &pairs {
        for &(k, l) in &pairs {
            let exact = c * (delta(i, l) * delta(j, k) + delta(i, k) * delta(j, l));
            push("ddf.ddf", format!("{}{},{}{}", i + 1, j + 1, k + 1, l + 1), &|d| d.hess[(i, j)], &|d| d.hess[(k, l)], exact);
        }
    }
    for i in 0..m {
        push("f.df", format!("{}", i + 1), &|d| d.f, &|d| d.grad[i], 0.0);
    }
    for &(i, j) in &pairs {
        push("f.ddf", format!("{}{}", i + 1, j + 1), &|d| d.f, &|d| d.hess[(i, j)], 0.0);
    }
    for i in 0..m {
        for &(j, k) in &pairs {
            push("df.ddf", format!("{},{}{}", i + 1, j + 1, k + 1), &|d| d.grad[i], &|d| d.hess[(j, k)], 0.0);
        }
    }
    let mut sigma = DMatrix::<Complex64>::zeros(m, m);
    for d in &draws {
        for i in 0..m {
            for j in 0..m {
                sigma[(i, j)] += d.grad[i] * d.grad[j].conj();
            }
        }
    }
    sigma /= Complex64::new(n as f64, 0.0);
    let det = sigma.determinant().re;
    let pi_m = std::f64::consts::PI.powi(m as i32);
    Ok(CovarianceReport {
        m,
        degree,
        n,
        cells,
        gradient_density: 1.0 / (pi_m * det),
        gradient_density_exact: 1.0 / (nf * std::f64::consts::PI).powi(m as i32),
    })
}

/// Field Hessian spectra against Wishart spectra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianSpectrumReport {
    pub m: usize,
    pub degree: u32,
    pub n: usize,
    /// Two-sample KS distance between the pooled eigenvalues.
    pub ks: f64,
    pub field_mean: f64,
    pub wishart_mean: f64,
    pub mean_z: f64,
    pub field_second_moment: f64,
    pub wishart_second_moment: f64,
    pub second_moment_z: f64,
}

/// Eigenvalues of `Y Y^* / (m N (N-1))`, `Y = (d^2 f(0))`.
pub fn field_hessian_spectrum(m: usize, degree: u32, stream: &RngStream) -> Result<Vec<f64>> {
    if degree < 2 {
        return Err(domain("the Hessian vanishes identically for N < 2"));
    }
    let y = origin_derivs(m, degree, stream)?.hess;
    let scale = m as f64 * degree as f64 * (degree as f64 - 1.0);
    let w = &y * y.adjoint() / Complex64::new(scale, 0.0);
    Ok(SymmetricEigen::new(w).eigenvalues.iter().map(|v| v.max(0.0)).collect())
}

fn per_draw_moments(spectra: &[Vec<f64>], power: i32) -> Vec<f64> {
    spectra.iter().map(|s| s.iter().map(|v| v.powi(power)).sum::<f64>() / s.len() as f64).collect()
}

/// Compares pooled eigenvalues of `Y Y^*/(mN(N-1))` with pooled spectra of
/// the `m`-dimensional Wishart ensemble: two-sample KS distance and the
/// first two spectral moments (per-draw averages, so the standard errors
/// respect the dependence inside one draw).
pub fn hessian_spectrum_selftest(m: usize, degree: u32, n: usize, stream: RngStream) -> Result<HessianSpectrumReport> {
    if m == 0 || m > 50 {
        return Err(domain(format!("Hessian self-test supports 1 <= m <= 50, got {m}")));
    }
    if n < 2 {
        return Err(domain("need at least two draws"));
    }
    let field_stream = stream.substream(0);
    let wishart_stream = stream.substream(1);
    let field: Vec<Vec<f64>> =
        (0..n as u64).into_par_iter().map(|i| field_hessian_spectrum(m, degree, &field_stream.substream(i))).collect::<Result<_>>()?;
    let wish: Vec<Vec<f64>> = (0..n as u64)
        .into_par_iter()
        .map(|i| Ok(wishart::sample_spectrum(m, &wishart_stream.substream(i))?.eigenvalues().to_vec()))
        .collect::<Result<_>>()?;
    let pooled_f: Vec<f64> = field.iter().flatten().copied().collect();
    let pooled_w: Vec<f64> = wish.iter().flatten().copied().collect();
    let ks = stats::ks_two_sample(&pooled_f, &pooled_w);
    let compare = |p: i32| {
        let (mf, sf) = stats::mean_stderr(&per_draw_moments(&field, p));
        let (mw, sw) = stats::mean_stderr(&per_draw_moments(&wish, p));
        (mf, mw, (mf - mw) / sf.hypot(sw))
    };
    let (field_mean, wishart_mean, mean_z) = compare(1);
    let (field_second_moment, wishart_second_moment, second_moment_z) = compare(2);
    Ok(HessianSpectrumReport {
        m,
        degree,
        n,
        ks,
        field_mean,
        wishart_mean,
        mean_z,
        field_second_moment,
        wishart_second_moment,
        second_moment_z,
    })
}
