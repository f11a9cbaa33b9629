use critpoints::critstats::{self, RateTarget, Side, Window};
use critpoints::quad;
use critpoints::verify;
use critpoints::wishart::Sampler;
use critpoints::RngStream;
use rand::Rng;

fn density_integral(m: usize, degree: u32, from: f64) -> f64 {
    quad::integrate_to_infinity(|x| critstats::density_index_m(m, degree, x).unwrap(), from, 0.0, 1e-13).unwrap().value
}

#[test]
fn density_integrates_to_the_closed_form_total() {
    for (m, degree) in [(1, 2), (3, 3), (10, 4)] {
        let q = density_integral(m, degree, 0.0);
        let exact = critstats::expected_index_m_total(m, degree).unwrap();
        assert!((q / exact - 1.0).abs() < 1e-8, "(m,N) = ({m},{degree})");
    }
}

#[test]
fn tail_formula_is_the_integral_of_the_density() {
    for (m, degree, x) in [(1, 2, 0.0), (2, 3, 0.1), (3, 3, 0.05), (4, 7, 0.02)] {
        let q = density_integral(m, degree, x);
        let tail = critstats::expected_index_m_tail(m, degree, x).unwrap();
        assert!((q / tail - 1.0).abs() < 1e-8);
        // The alternative prefactor 2(N-1)^{m+1}(m+1)/(2 - 2/N + m) is
        // N times too large.
        let mf = m as f64;
        let n = degree as f64;
        let alt = 2.0 * (n - 1.0).powf(mf + 1.0) * (mf + 1.0) / (2.0 - 2.0 / n + mf);
        assert!((alt / critstats::expected_index_m_tail(m, degree, 0.0).unwrap() - n).abs() < 1e-12);
    }
}

#[test]
fn smallest_eigenvalue_pipeline_reproduces_the_density() {
    let mut rng = RngStream::new(1).rng();
    for _ in 0..20 {
        let m = rng.random_range(1..=40usize);
        let degree = rng.random_range(2..=12u32);
        let x = rng.random_range(0.0..0.4);
        let a = critstats::density_index_m(m, degree, x).unwrap();
        let b = verify::pipeline_density_index_m(m, degree, x).unwrap();
        assert!((a / b - 1.0).abs() < 1e-10, "(m,N,x) = ({m},{degree},{x})");
    }
}

#[test]
fn log_domain_survives_huge_dimensions() {
    let v = critstats::log_expected_index_m_total(1_000_000, 3).unwrap();
    assert!(v.is_finite() && v > 0.0);
    let m = 500;
    let gap = (critstats::log_expected_index_m_total(m, 3).unwrap() / m as f64 - 2f64.ln()).abs();
    assert!(gap <= 2.0 * ((m + 1) as f64).ln() / m as f64);
    let e = critstats::mc_expected_count_index(500, 500, 10, Window::all(), 200, RngStream::new(2)).unwrap();
    assert!(e.overflow);
    assert!(e.log_mean.is_finite());
    let exact = critstats::log_expected_index_m_total(500, 10).unwrap();
    assert!((e.log_mean - exact).abs() < 0.05, "{} vs {exact}", e.log_mean);
}

#[test]
fn smallest_index_estimates_match_exact_tails() {
    for (j, (m, degree, x)) in [(1usize, 2u32, 0.0), (2, 3, 0.2), (3, 4, 0.1)].into_iter().enumerate() {
        let w = Window::above(x).unwrap();
        let e = critstats::mc_expected_count_index(m, m, degree, w, 100_000, RngStream::new(10 + j as u64)).unwrap();
        let exact = critstats::expected_index_m_tail(m, degree, x).unwrap();
        assert!(e.z_score(exact).abs() <= 3.0, "(m,N,x) = ({m},{degree},{x}): {} vs {exact}", e.mean);
    }
    let e = critstats::mc_expected_count_index(1, 1, 2, Window::all(), 100_000, RngStream::new(3)).unwrap();
    assert!((e.mean - 1.0).abs() < 1e-12);
}

#[test]
fn index_counts_are_monotone_and_sum_to_the_total() {
    let sweep = critstats::mc_index_sweep(3, 3, Window::all(), 50_000, RngStream::new(4)).unwrap();
    for k in 0..3 {
        assert!(sweep.per_k[k].mean <= sweep.per_k[k + 1].mean);
    }
    let sum: f64 = sweep.per_k.iter().map(|e| e.mean).sum();
    assert!((sum / sweep.total.mean - 1.0).abs() < 1e-12);

    let small = critstats::mc_index_sweep(2, 3, Window::all(), 50_000, RngStream::new(5)).unwrap();
    let total = critstats::mc_expected_count_total(2, 3, Window::all(), 50_000, RngStream::new(6)).unwrap();
    assert!(small.total.combined_z(&total).abs() <= 3.0);
    for k in 0..=2 {
        assert!(total.mean >= small.per_k[k].mean);
    }
}

#[test]
fn samplers_give_the_same_index_estimates() {
    let w = Window::all();
    let dense = critstats::mc_expected_count_index_with(2, 1, 3, w, 50_000, RngStream::new(7), Sampler::Dense).unwrap();
    let tri = critstats::mc_expected_count_index_with(2, 1, 3, w, 50_000, RngStream::new(8), Sampler::Tridiagonal).unwrap();
    assert!(dense.combined_z(&tri).abs() <= 3.0);
    let dense = critstats::mc_expected_count_total_with(3, 4, w, 50_000, RngStream::new(9), Sampler::Dense).unwrap();
    let tri = critstats::mc_expected_count_total_with(3, 4, w, 50_000, RngStream::new(10), Sampler::Tridiagonal).unwrap();
    assert!(dense.combined_z(&tri).abs() <= 3.0);
}

#[test]
fn conditional_total_agrees_with_plain_total() {
    let w = Window::above(3.0).unwrap();
    let plain = critstats::mc_expected_count_total_with(5, 3, w, 200_000, RngStream::new(11), Sampler::Tridiagonal).unwrap();
    let cond = critstats::mc_expected_count_total_conditional(5, 3, w, 20_000, RngStream::new(12)).unwrap();
    assert!(!plain.zero_hits);
    assert!(plain.combined_z(&cond).abs() <= 3.0, "{} vs {}", plain.mean, cond.mean);
}

#[test]
fn window_scaling_is_applied_once() {
    // At N = 1000 the factor N/(N-1) moves the window edge by 0.1%. The
    // full window is unaffected; [0, 2) changes only through the few
    // eigenvalues crossing its upper edge.
    let all = Window::all();
    let a = critstats::mc_expected_count_total(3, 1000, all, 20_000, RngStream::new(13)).unwrap();
    let b = critstats::mc_expected_count_total(3, 1000, all.scaled(0.999), 20_000, RngStream::new(13)).unwrap();
    assert_eq!(a.mean, b.mean);
    let w = Window::below(2.0).unwrap();
    let scaled = critstats::mc_expected_count_total(3, 1000, w, 20_000, RngStream::new(13)).unwrap();
    let unscaled = critstats::mc_expected_count_total(3, 1000, w.scaled(0.999), 20_000, RngStream::new(13)).unwrap();
    assert!(scaled.mean != unscaled.mean);
    assert!((scaled.mean / unscaled.mean - 1.0).abs() < 0.002);
}

#[test]
fn degree_two_rate_curves_are_flat() {
    let target = RateTarget::FixedK { k: 0, side: Side::Above };
    let pts = critstats::empirical_rate_curve(2, target, 1.0, &[50, 100, 200], 2000, RngStream::new(14)).unwrap();
    for p in &pts {
        assert_eq!(p.analytic_rate, 0.0);
        assert!(p.empirical_rate.unwrap().abs() < 0.05);
    }
}

#[test]
fn linear_index_rate_curve_converges() {
    let target = RateTarget::LinearGamma { gamma: 0.5 };
    let pts = critstats::empirical_rate_curve(3, target, 0.0, &[25, 50, 100, 200], 2000, RngStream::new(15)).unwrap();
    let gaps: Vec<f64> = pts.iter().map(|p| (p.empirical_rate.unwrap() - p.analytic_rate).abs()).collect();
    assert!(gaps.last().unwrap() < &0.02, "{gaps:?}");
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn zero_hit_rates_are_flagged() {
    let target = RateTarget::FixedK { k: 3, side: Side::Above };
    let pts = critstats::empirical_rate_curve(3, target, 20.0, &[20], 500, RngStream::new(16)).unwrap();
    assert!(pts[0].zero_hits);
    assert_eq!(pts[0].empirical_rate, Some(f64::NEG_INFINITY));
}

#[test]
fn estimates_are_thread_count_independent() {
    let run = || critstats::mc_expected_count_total(2, 3, Window::all(), 3000, RngStream::new(17)).unwrap().mean;
    let a = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(run);
    let b = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap().install(run);
    assert_eq!(a.to_bits(), b.to_bits());
}
