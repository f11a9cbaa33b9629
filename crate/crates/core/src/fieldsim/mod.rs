//! Direct simulation of Gaussian random holomorphic sections of `O(N)` over
//! `CP^m`: sampling, derivatives in affine charts, covariance and Hessian
//! self-tests, and critical point search with Morse classification.

mod geometry;
mod section;
mod selftest;
mod solver;

pub use geometry::{
    covariant_gradient, curvature, hessian_data, log_gradient, log_norm_sqr, morse_index, real_gradient, real_hessian, HessianData,
    MorseInfo, DEGENERATE_EIG, SINGULAR_NORM,
};
pub use section::{chordal_distance, complex_gaussian, eval_derivs, fs_uniform, ChartPoint, Derivatives, SectionSample};
pub use selftest::{
    covariance_selftest, field_hessian_spectrum, hessian_spectrum_selftest, CovarianceCell, CovarianceReport, HessianSpectrumReport,
};
pub use solver::{
    default_starts, direct_count_estimate, direct_survey, euler_target, find_critical_points, finite_difference_hessian, CriticalPoint,
    DirectEstimate, DirectSurvey, SectionCritical, SolverConfig, MAX_DIRECT_M,
};

/// Draws a random section (alias of [`SectionSample::sample`]).
pub fn sample_section(m: usize, degree: u32, stream: &crate::rng::RngStream) -> crate::Result<SectionSample> {
    SectionSample::sample(m, degree, stream)
}
