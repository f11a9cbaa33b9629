//! Metric quantities of `O(N)` in an affine chart.
//!
//! With the Fubini-Study weight `K_N = N log(1 + |z|^2)` the pointwise norm
//! is `||s||_h^2 = |f|^2 e^{-K_N}`, and critical points of `||s||_h` away
//! from the zero divisor are the critical points of
//! `g = log |f|^2 - K_N`. The Chern connection of `h = e^{-K_N}` is
//! `nabla s = (df - f dK_N) (x) e^N`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::section::{eval_derivs, ChartPoint, Derivatives, SectionSample};
use crate::error::{Error, Result};

/// Below this pointwise norm `||s||_h` a point is treated as lying on the
/// zero divisor.
pub const SINGULAR_NORM: f64 = 1e-12;

/// Eigenvalues of the real Hessian smaller than this in modulus make a
/// critical point degenerate.
pub const DEGENERATE_EIG: f64 = 1e-9;

/// Everything second-order at a point: the holomorphic Hessian of `f`, the
/// curvature block `Theta_N = (d^2 K_N / dz_i dzbar_j)` and `f` itself.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianData {
    pub holo_hess: DMatrix<Complex64>,
    pub mixed: DMatrix<Complex64>,
    pub f_value: Complex64,
}

/// `Theta_N = N [(1 + |z|^2) delta_ij - zbar_i z_j] / (1 + |z|^2)^2`.
pub fn curvature(z: &[Complex64], degree: u32) -> DMatrix<Complex64> {
    let n = degree as f64;
    let s = 1.0 + z.iter().map(|c| c.norm_sqr()).sum::<f64>();
    DMatrix::from_fn(z.len(), z.len(), |i, j| {
        let delta = if i == j { s } else { 0.0 };
        (Complex64::new(delta, 0.0) - z[i].conj() * z[j]) * (n / (s * s))
    })
}

/// `log ||s(z)||_h^2 = log|f|^2 - N log(1 + |z|^2)`.
pub fn log_norm_sqr(f: Complex64, point: &ChartPoint, degree: u32) -> f64 {
    f.norm_sqr().ln() - degree as f64 * point.norm_sqr().ln_1p()
}

pub fn hessian_data(sample: &SectionSample, point: &ChartPoint) -> HessianData {
    let d = eval_derivs(sample, point);
    HessianData { holo_hess: d.hess, mixed: curvature(&point.z, sample.degree()), f_value: d.f }
}

/// Components `df_j - f N zbar_j / (1 + |z|^2)` of the covariant derivative.
pub fn covariant_gradient(sample: &SectionSample, point: &ChartPoint) -> Vec<Complex64> {
    let d = eval_derivs(sample, point);
    let s = 1.0 + point.norm_sqr();
    let n = sample.degree() as f64;
    d.grad.iter().zip(&point.z).map(|(&g, &z)| g - d.f * z.conj() * (n / s)).collect()
}

/// `dg/dz_j = f_j / f - N zbar_j / (1 + |z|^2)`: the covariant derivative
/// divided by `f`, which is scale free and vanishes exactly at critical
/// points off the zero divisor.
pub fn log_gradient(d: &Derivatives, point: &ChartPoint, degree: u32) -> Vec<Complex64> {
    let s = 1.0 + point.norm_sqr();
    let n = degree as f64;
    d.grad.iter().zip(&point.z).map(|(&g, &z)| g / d.f - z.conj() * (n / s)).collect()
}

/// Real gradient of `g` in coordinates `(x_1..x_m, y_1..y_m)`.
pub fn real_gradient(dg: &[Complex64]) -> Vec<f64> {
    let mut r: Vec<f64> = dg.iter().map(|c| 2.0 * c.re).collect();
    r.extend(dg.iter().map(|c| -2.0 * c.im));
    r
}

/// Real `2m x 2m` Hessian of `g` in coordinates `(x, y)`.
///
/// With `A = d^2 g / dz dz = f''/f - f' f'^T / f^2 + N zbar zbar^T/(1+|z|^2)^2`
/// and `B = d^2 g / dz dzbar = -Theta_N`:
/// `g_xx = 2 Re(A + B)`, `g_yy = 2 Re(B - A)`, `g_xy = 2 Im(B - A)`.
pub fn real_hessian(d: &Derivatives, point: &ChartPoint, degree: u32) -> DMatrix<f64> {
    let m = point.m();
    let s = 1.0 + point.norm_sqr();
    let n = degree as f64;
    let theta = curvature(&point.z, degree);
    let mut h = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            let gi = d.grad[i] / d.f;
            let gj = d.grad[j] / d.f;
            let a = d.hess[(i, j)] / d.f - gi * gj + point.z[i].conj() * point.z[j].conj() * (n / (s * s));
            let b = -theta[(i, j)];
            h[(i, j)] = 2.0 * (a + b).re;
            h[(m + i, m + j)] = 2.0 * (b - a).re;
            h[(i, m + j)] = 2.0 * (b - a).im;
            h[(m + j, i)] = 2.0 * (b - a).im;
        }
    }
    h
}

/// Morse data of a critical point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorseInfo {
    /// Number of negative eigenvalues of the real Hessian of `log ||s||_h^2`.
    pub index: usize,
    /// Smallest eigenvalue modulus of the real Hessian.
    pub min_abs_eig: f64,
    pub degenerate: bool,
}

/// Morse index of `||s||_h` at a critical point, from the real Hessian of
/// `log ||s||_h^2`; it lies in `[m, 2m]` for holomorphic sections.
pub fn morse_index(sample: &SectionSample, point: &ChartPoint) -> Result<MorseInfo> {
    let d = eval_derivs(sample, point);
    morse_from_derivs(&d, point, sample.degree())
}

pub(crate) fn morse_from_derivs(d: &Derivatives, point: &ChartPoint, degree: u32) -> Result<MorseInfo> {
    let norm = (0.5 * log_norm_sqr(d.f, point, degree)).exp();
    if !(norm >= SINGULAR_NORM) {
        return Err(Error::NearSingular(norm));
    }
    let eig = SymmetricEigen::new(real_hessian(d, point, degree)).eigenvalues;
    let index = eig.iter().filter(|&&v| v < 0.0).count();
    let min_abs_eig = eig.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    Ok(MorseInfo { index, min_abs_eig, degenerate: min_abs_eig < DEGENERATE_EIG })
}
