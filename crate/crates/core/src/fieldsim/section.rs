use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::rng::RngStream;

/// One random section, stored as the homogeneous polynomial
/// `F(Z) = sum_alpha c_alpha Z^alpha` of degree `N` in `m+1` variables.
///
/// The random model uses `c_alpha = a_alpha sqrt(N! / alpha!)` with unit
/// complex Gaussians `a_alpha`, so in every affine chart the local function
/// has covariance kernel `E f(z) conj(f(w)) = (1 + z.conj(w))^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionSample {
    m: usize,
    degree: u32,
    /// Exponent vectors, `m+1` entries per monomial.
    exponents: Vec<u32>,
    coeffs: Vec<Complex64>,
}

fn multi_indices(vars: usize, degree: u32) -> Vec<u32> {
    fn rec(vars: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<u32>) {
        if vars == 1 {
            prefix.push(left);
            out.extend_from_slice(prefix);
            prefix.pop();
            return;
        }
        for e in (0..=left).rev() {
            prefix.push(e);
            rec(vars - 1, left - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(vars, degree, &mut Vec::with_capacity(vars), &mut out);
    out
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// A standard circularly symmetric complex Gaussian, `E|a|^2 = 1`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    Complex64::new(x, y) * std::f64::consts::FRAC_1_SQRT_2
}

impl SectionSample {
    /// Draws a random section from the stream.
    pub fn sample(m: usize, degree: u32, stream: &RngStream) -> Result<Self> {
        Self::sample_with(m, degree, &mut stream.rng())
    }

    pub fn sample_with<R: Rng + ?Sized>(m: usize, degree: u32, rng: &mut R) -> Result<Self> {
        if m == 0 || degree == 0 {
            return Err(domain(format!("need m >= 1 and N >= 1, got m = {m}, N = {degree}")));
        }
        let exponents = multi_indices(m + 1, degree);
        let lnf = ln_factorial(degree);
        let coeffs = exponents
            .chunks(m + 1)
            .map(|alpha| {
                let w = (lnf - alpha.iter().map(|&a| ln_factorial(a)).sum::<f64>()).exp().sqrt();
                complex_gaussian(rng) * w
            })
            .collect();
        Ok(Self { m, degree, exponents, coeffs })
    }

    /// A deterministic section from explicit homogeneous terms
    /// `(alpha, c_alpha)`; exponents must have length `m+1` and sum to `N`.
    pub fn from_terms(m: usize, degree: u32, terms: &[(Vec<u32>, Complex64)]) -> Result<Self> {
        if m == 0 || degree == 0 || terms.is_empty() {
            return Err(domain("a section needs m >= 1, N >= 1 and at least one term"));
        }
        let mut exponents = Vec::with_capacity(terms.len() * (m + 1));
        let mut coeffs = Vec::with_capacity(terms.len());
        for (alpha, c) in terms {
            if alpha.len() != m + 1 || alpha.iter().sum::<u32>() != degree {
                return Err(domain(format!("exponent {alpha:?} is not homogeneous of degree {degree} in {} variables", m + 1)));
            }
            exponents.extend_from_slice(alpha);
            coeffs.push(*c);
        }
        Ok(Self { m, degree, exponents, coeffs })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Number of monomials, `C(N+m, m)` for a random sample.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Homogeneous terms `(alpha, c_alpha)`.
    pub fn terms(&self) -> impl Iterator<Item = (&[u32], Complex64)> + '_ {
        self.exponents.chunks(self.m + 1).zip(self.coeffs.iter().copied())
    }

    /// `F(Z)` at a homogeneous point.
    pub fn eval_homogeneous(&self, zh: &[Complex64]) -> Complex64 {
        self.terms().map(|(alpha, c)| alpha.iter().zip(zh).fold(c, |acc, (&a, &z)| acc * z.powu(a))).sum()
    }
}

/// A point of `CP^m` in the affine chart `Z_chart = 1`; `z` lists the other
/// homogeneous coordinates in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub chart: usize,
    pub z: Vec<Complex64>,
}

impl ChartPoint {
    pub fn new(chart: usize, z: Vec<Complex64>) -> Result<Self> {
        if chart > z.len() {
            return Err(domain(format!("chart {chart} out of range for m = {}", z.len())));
        }
        if z.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(domain("non-finite chart coordinate"));
        }
        Ok(Self { chart, z })
    }

    pub fn origin(m: usize) -> Self {
        Self { chart: 0, z: vec![Complex64::new(0.0, 0.0); m] }
    }

    pub fn m(&self) -> usize {
        self.z.len()
    }

    /// Homogeneous coordinates with `Z_chart = 1`.
    pub fn homogeneous(&self) -> Vec<Complex64> {
        let mut zh = self.z.clone();
        zh.insert(self.chart, Complex64::new(1.0, 0.0));
        zh
    }

    /// The point `zh` in a given chart (`zh[chart]` must be nonzero).
    pub fn from_homogeneous(zh: &[Complex64], chart: usize) -> Result<Self> {
        let pivot = zh.get(chart).copied().ok_or_else(|| domain("chart out of range"))?;
        if pivot.norm() == 0.0 {
            return Err(domain(format!("coordinate {chart} vanishes; point is not in that chart")));
        }
        let z = zh.iter().enumerate().filter(|&(i, _)| i != chart).map(|(_, &v)| v / pivot).collect();
        Self::new(chart, z)
    }

    /// The chart whose coordinate has the largest modulus, in which every
    /// affine coordinate has modulus at most one.
    pub fn best_chart_of(zh: &[Complex64]) -> usize {
        zh.iter().enumerate().max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr())).map(|(i, _)| i).unwrap_or(0)
    }

    /// Same point, re-expressed in its best chart.
    pub fn rechart(&self) -> Self {
        let zh = self.homogeneous();
        Self::from_homogeneous(&zh, Self::best_chart_of(&zh)).expect("largest coordinate is nonzero")
    }

    /// Largest modulus of an affine coordinate.
    pub fn sup_norm(&self) -> f64 {
        self.z.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `|z|^2`.
    pub fn norm_sqr(&self) -> f64 {
        self.z.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Fubini-Study chordal distance `|Z ^ W| / (|Z| |W|)` (the sine of the
/// angle between the lines).
pub fn chordal_distance(a: &ChartPoint, b: &ChartPoint) -> f64 {
    let (z, w) = (a.homogeneous(), b.homogeneous());
    let nz: f64 = z.iter().map(|c| c.norm_sqr()).sum();
    let nw: f64 = w.iter().map(|c| c.norm_sqr()).sum();
    let mut wedge = 0.0;
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            wedge += (z[i] * w[j] - z[j] * w[i]).norm_sqr();
        }
    }
    (wedge / (nz * nw)).sqrt()
}

/// Draws a point uniformly for the Fubini-Study volume, expressed in its
/// best chart.
pub fn fs_uniform<R: Rng + ?Sized>(m: usize, rng: &mut R) -> ChartPoint {
    let zh: Vec<Complex64> = (0..=m).map(|_| complex_gaussian(rng)).collect();
    ChartPoint::from_homogeneous(&zh, ChartPoint::best_chart_of(&zh)).expect("Gaussian coordinates are nonzero")
}

/// The local function `f` and its holomorphic derivatives at a chart point.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    pub f: Complex64,
    /// `d f / d z_i`
    pub grad: Vec<Complex64>,
    /// `d^2 f / d z_i d z_j`, symmetric.
    pub hess: DMatrix<Complex64>,
}

/// Exact evaluation of `f`, `df` and `d^2 f` in the point's chart, from
/// tables of coordinate powers.
pub fn eval_derivs(sample: &SectionSample, point: &ChartPoint) -> Derivatives {
    let m = sample.m;
    debug_assert_eq!(point.m(), m);
    let n = sample.degree as usize;
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    // pw[p][e] = z_p^e
    let pw: Vec<Vec<Complex64>> = point
        .z
        .iter()
        .map(|&z| {
            let mut row = Vec::with_capacity(n + 1);
            let mut acc = one;
            for _ in 0..=n {
                row.push(acc);
                acc *= z;
            }
            row
        })
        .collect();
    let local = |alpha: &[u32]| -> Vec<u32> { alpha.iter().enumerate().filter(|&(i, _)| i != point.chart).map(|(_, &a)| a).collect() };
    let mut f = zero;
    let mut grad = vec![zero; m];
    let mut hess = DMatrix::from_element(m, m, zero);
    let mut beta = vec![0u32; m];
    for (alpha, c) in sample.terms() {
        beta.copy_from_slice(&local(alpha));
        let term = |skip: &[usize]| -> Complex64 {
            // c * prod_p z_p^{beta_p - #(p in skip)} * falling factorials
            let mut acc = c;
            for p in 0..m {
                let drop = skip.iter().filter(|&&q| q == p).count() as u32;
                if beta[p] < drop {
                    return zero;
                }
                let mut fall = 1.0;
                for d in 0..drop {
                    fall *= (beta[p] - d) as f64;
                }
                acc *= pw[p][(beta[p] - drop) as usize] * fall;
            }
            acc
        };
        f += term(&[]);
        for i in 0..m {
            if beta[i] > 0 {
                grad[i] += term(&[i]);
                for j in i..m {
                    if beta[j] > (i == j) as u32 {
                        let v = term(&[i, j]);
                        hess[(i, j)] += v;
                        if i != j {
                            hess[(j, i)] += v;
                        }
                    }
                }
            }
        }
    }
    Derivatives { f, grad, hess }
}
