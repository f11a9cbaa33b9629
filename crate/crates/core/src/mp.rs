//! The ratio-one Marchenko-Pastur law on `[0, 4]` and the functionals built
//! on it: tail mass and tail quantile, the top-eigenvalue rate function
//! `I_MP`, and the logarithmic potential `phi(mu, z)`.
//!
//! Tail mass and rate function use closed-form antiderivatives obtained from
//! the substitutions `t = 4 sin^2(theta)` and `t = 4 cosh^2(u)`. The potential
//! of the continuous law goes through adaptive quadrature in `theta`, which
//! removes the `1/sqrt(t)` singularity of the density at the origin.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{domain, Error, Result};
use crate::quad;

/// Upper edge of the support.
pub const EDGE: f64 = 4.0;

/// Absolute tolerance used by every quadrature in this module.
pub const QUAD_TOL: f64 = 1e-10;

/// `sqrt((4 - x) x) / (2 pi x)` on `(0, 4]`, zero outside `[0, 4]`.
///
/// The density diverges like `1/(pi sqrt(x))` at the origin; `density(0.0)`
/// returns `+inf`.
pub fn density(x: f64) -> f64 {
    if !(0.0..=EDGE).contains(&x) {
        0.0
    } else if x == 0.0 {
        f64::INFINITY
    } else {
        ((EDGE - x) / x).sqrt() / (2.0 * PI)
    }
}

/// `(w - sin w)` without cancellation for small `w`.
fn w_minus_sin(w: f64) -> f64 {
    if w < 0.1 {
        let w2 = w * w;
        w * w2 / 6.0 * (1.0 - w2 / 20.0 * (1.0 - w2 / 42.0 * (1.0 - w2 / 72.0)))
    } else {
        w - w.sin()
    }
}

/// Mass of the law above `s`: `int_{max(s,0)}^4 f_MP`. Exactly 1 for
/// `s <= 0` and 0 for `s >= 4`.
pub fn tail_mass(s: f64) -> f64 {
    if s <= 0.0 {
        return 1.0;
    }
    if s >= EDGE {
        return 0.0;
    }
    // With t = 4 sin^2(theta) the density becomes (4/pi) cos^2(theta) dtheta.
    let w = 2.0 * ((EDGE - s).sqrt() / 2.0).asin();
    (w_minus_sin(w) / PI).clamp(0.0, 1.0)
}

/// Distribution function `P(X <= x)`.
pub fn cdf(x: f64) -> f64 {
    1.0 - tail_mass(x)
}

/// The point `s_gamma` with `tail_mass(s_gamma) = gamma`, by bisection.
pub fn tail_quantile(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(domain(format!("tail quantile needs 0 < gamma < 1, got {gamma}")));
    }
    let (mut lo, mut hi) = (0.0_f64, EDGE);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if tail_mass(mid) > gamma {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Top-eigenvalue rate function `I_MP(x) = int_4^x sqrt((t-4)/(4t)) dt`,
/// `+inf` below the edge.
pub fn rate(x: f64) -> f64 {
    if x < EDGE || x.is_nan() {
        return f64::INFINITY;
    }
    if x == f64::INFINITY {
        return f64::INFINITY;
    }
    // t = 4 cosh^2(u): the integral is sinh(2u) - 2u.
    let v = 2.0 * ((x - EDGE).sqrt() / 2.0).asinh();
    if v < 0.1 {
        let v2 = v * v;
        v * v2 / 6.0 * (1.0 + v2 / 20.0 * (1.0 + v2 / 42.0 * (1.0 + v2 / 72.0)))
    } else {
        v.sinh() - v
    }
}

/// A finitely supported probability measure on `[0, inf)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!("{} atoms with {} weights", atoms.len(), weights.len())));
        }
        if let Some(a) = atoms.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
            return Err(Error::InvalidMeasure(format!("atom {a} is not a finite nonnegative real")));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidMeasure(format!("weight {w} is not positive")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}")));
        }
        Ok(Self { atoms, weights })
    }

    /// Equal weights on the given atoms (an empirical measure).
    pub fn uniform(atoms: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("empty atom list".into()));
        }
        if let Some(a) = atoms.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
            return Err(Error::InvalidMeasure(format!("atom {a} is not a finite nonnegative real")));
        }
        // Weights are exactly 1/n by construction; summing n copies in
        // floating point would drift past 1e-12 for large n.
        let w = 1.0 / atoms.len() as f64;
        let n = atoms.len();
        Ok(Self { atoms, weights: vec![w; n] })
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// `phi(mu, z) = sum_i w_i log|z - y_i| - z/2`. Returns `-inf` when `z`
/// coincides with an atom.
pub fn log_potential(mu: &DiscreteMeasure, z: f64) -> f64 {
    let mut acc = 0.0;
    for (&y, &w) in mu.atoms.iter().zip(&mu.weights) {
        let d = (z - y).abs();
        if d == 0.0 {
            return f64::NEG_INFINITY;
        }
        acc += w * d.ln();
    }
    acc - z / 2.0
}

/// `phi(mu_MP, x) = int_0^4 log|x - y| f_MP(y) dy - x/2` for `x >= 4`.
pub fn log_potential_mp(x: f64) -> Result<f64> {
    if !(x >= EDGE) || !x.is_finite() {
        return Err(domain(format!("potential of the MP law is evaluated for x >= 4, got {x}")));
    }
    let gap = x - EDGE;
    let r = quad::integrate(
        |theta: f64| {
            let c = theta.cos();
            let c2 = c * c;
            (gap + EDGE * c2).ln() * c2
        },
        0.0,
        FRAC_PI_2,
        1e-13,
        0.0,
    )?;
    Ok(4.0 / PI * r.value - x / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_values() {
        assert_eq!(density(4.0), 0.0);
        assert_eq!(density(5.0), 0.0);
        assert_eq!(density(-1.0), 0.0);
        assert!((density(2.0) - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert_eq!(density(0.0), f64::INFINITY);
    }

    #[test]
    fn tail_mass_boundaries() {
        assert_eq!(tail_mass(0.0), 1.0);
        assert_eq!(tail_mass(-3.0), 1.0);
        assert_eq!(tail_mass(4.0), 0.0);
        assert_eq!(tail_mass(9.0), 0.0);
        // symmetric point of the arcsine-like parametrization
        assert!((tail_mass(2.0) - (0.5 - 1.0 / PI)).abs() < 1e-15);
    }

    #[test]
    fn quantile_edges_and_domain() {
        assert!((tail_quantile(1e-8).unwrap() - 4.0).abs() < 1e-2);
        assert!(tail_quantile(1.0 - 1e-8).unwrap().abs() < 1e-2);
        assert!(tail_quantile(0.0).is_err());
        assert!(tail_quantile(1.0).is_err());
        assert!(tail_quantile(f64::NAN).is_err());
        let s = tail_quantile(0.5).unwrap();
        assert!((tail_mass(s) - 0.5).abs() <= 1e-10);
    }

    #[test]
    fn rate_values() {
        assert_eq!(rate(4.0), 0.0);
        assert_eq!(rate(3.0), f64::INFINITY);
        let x: f64 = 8.0;
        let closed = 0.5 * (x * (x - 4.0)).sqrt() - 2.0 * (x.sqrt() / 2.0).acosh();
        assert!((rate(8.0) - closed).abs() < 1e-14);
        // series branch agrees with the direct formula where both are accurate
        let x: f64 = 4.001;
        let v = 2.0 * ((x - 4.0).sqrt() / 2.0).asinh();
        assert!((rate(x) - (v.sinh() - v)).abs() < 1e-15);
    }

    #[test]
    fn potential_of_small_measures() {
        let one = DiscreteMeasure::uniform(vec![0.0]).unwrap();
        assert!((log_potential(&one, 1.0) + 0.5).abs() < 1e-15);
        let e = std::f64::consts::E;
        assert!((log_potential(&one, e) - (1.0 - e / 2.0)).abs() < 1e-15);
        let two = DiscreteMeasure::uniform(vec![1.0, 3.0]).unwrap();
        let expect = (4f64.ln() + 2f64.ln()) / 2.0 - 2.5;
        assert!((log_potential(&two, 5.0) - expect).abs() < 1e-15);
        assert_eq!(log_potential(&two, 3.0), f64::NEG_INFINITY);
    }

    #[test]
    fn measure_validation() {
        assert!(DiscreteMeasure::new(vec![1.0], vec![0.5]).is_err());
        assert!(DiscreteMeasure::new(vec![-1.0], vec![1.0]).is_err());
        assert!(DiscreteMeasure::new(vec![1.0, 2.0], vec![1.0]).is_err());
        assert!(DiscreteMeasure::new(vec![1.0, 2.0], vec![0.0, 1.0]).is_err());
        assert!(DiscreteMeasure::uniform(vec![]).is_err());
        assert!(DiscreteMeasure::new(vec![1.0, 2.0], vec![0.25, 0.75]).is_ok());
    }

    #[test]
    fn potential_domain() {
        assert!(log_potential_mp(3.9).is_err());
        assert!(log_potential_mp(f64::NAN).is_err());
    }
}
