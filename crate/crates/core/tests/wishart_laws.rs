use critpoints::mp;
use critpoints::stats;
use critpoints::wishart::{self, Sampler, Spectrum};
use critpoints::RngStream;
use statrs::function::gamma::ln_gamma;

fn z(p_hat: f64, se: f64, exact: f64) -> f64 {
    (p_hat - exact) / se
}

#[test]
fn one_dimensional_ensemble_is_exponential_with_mean_two() {
    let n = 100_000;
    let spectra = wishart::sample_many(Sampler::Dense, 1, n, RngStream::new(1)).unwrap();
    let halves: Vec<f64> = spectra.iter().map(|s| s.largest() / 2.0).collect();
    for x in [0.5, 1.0] {
        let hits = halves.iter().filter(|&&v| v >= x).count();
        let exact = (-x).exp();
        let (p, se) = stats::binomial(hits, n, Some(exact));
        assert!(z(p, se, exact).abs() <= 3.0, "x = {x}: {p} vs {exact}");
    }
    let d = stats::ks_one_sample(&halves[..10_000], |x| 1.0 - (-x).exp());
    assert!(stats::ks_p_value(d, 10_000) > 0.01, "KS distance {d}");
}

#[test]
fn spectra_are_sorted_and_nonnegative() {
    for m in [1, 2, 7, 30] {
        for s in wishart::sample_many(Sampler::Dense, m, 50, RngStream::new(m as u64)).unwrap() {
            assert_eq!(s.m(), m);
            assert!(s.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
            assert!(s.smallest() >= 0.0);
        }
    }
}

#[test]
fn trace_mean_is_m_plus_one() {
    let m = 50;
    let traces: Vec<f64> =
        wishart::sample_many(Sampler::Dense, m, 10_000, RngStream::new(2)).unwrap().iter().map(|s| s.trace() / m as f64).collect();
    let (mean, se) = stats::mean_stderr(&traces);
    let exact = (m as f64 + 1.0) / m as f64;
    assert!(((mean - exact) / se).abs() <= 3.0, "{mean} vs {exact}");
}

#[test]
fn normalizer_small_cases_and_log_gamma_oracle() {
    assert!((wishart::log_normalizer(1) - 2f64.ln()).abs() < 1e-15);
    assert!(wishart::log_normalizer(2).abs() < 1e-15);
    let m = 500usize;
    let mf = m as f64;
    let oracle = mf * 2f64.ln() - 0.5 * mf * (mf + 1.0) * mf.ln() + (1..=m).map(|j| ln_gamma(j as f64 + 1.0)).sum::<f64>();
    let v = wishart::log_normalizer(m);
    assert!(v.is_finite());
    assert!(((v - oracle) / oracle).abs() < 1e-9, "{v} vs {oracle}");
    assert!(wishart::log_normalizer(10_000).is_finite());
}

#[test]
fn joint_density_examples() {
    let s = Spectrum::new(vec![3.0]).unwrap();
    assert!((wishart::log_joint_density(&s) - (-1.5 - 2f64.ln())).abs() < 1e-14);
    let s = Spectrum::new(vec![3.0, 1.0]).unwrap();
    assert!((wishart::log_joint_density(&s) - (2f64.ln() - 4.0)).abs() < 1e-14);
    let s = Spectrum::new(vec![2.0, 2.0, 1.0]).unwrap();
    assert_eq!(wishart::log_joint_density(&s), f64::NEG_INFINITY);
}

#[test]
fn joint_density_integrates_to_one_at_m_2() {
    // Midpoint rule on [0, 40]^2; the density is of unordered eigenvalues,
    // so every grid cell is evaluated at its sorted pair.
    let (l, k) = (40.0, 800);
    let h = l / k as f64;
    let mut total = 0.0;
    for i in 0..k {
        for j in 0..k {
            let (a, b) = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            if i == j {
                continue;
            }
            let s = Spectrum::new(vec![a, b]).unwrap();
            total += wishart::log_joint_density(&s).exp() * h * h;
        }
    }
    assert!((total - 1.0).abs() < 0.02, "{total}");
}

#[test]
fn smallest_eigenvalue_law() {
    assert_eq!(wishart::smallest_tail_exact(7, 0.0), 1.0);
    assert!((wishart::smallest_tail_exact(10, 0.1) - (-1f64).exp()).abs() < 1e-15);
    let n = 10_000;
    let hits =
        wishart::sample_many(Sampler::Dense, 20, n, RngStream::new(3)).unwrap().iter().filter(|s| 10.0 * s.smallest() >= 0.05).count();
    let exact = (-1f64).exp();
    let (p, se) = stats::binomial(hits, n, Some(exact));
    assert!(z(p, se, exact).abs() <= 3.0);
}

#[test]
fn tridiagonal_sampler_has_the_dense_law() {
    let m = 8;
    let dense = wishart::sample_many(Sampler::Dense, m, 3000, RngStream::new(4)).unwrap();
    let tri = wishart::sample_many(Sampler::Tridiagonal, m, 3000, RngStream::new(5)).unwrap();
    for k in [1, 4, 8] {
        let a: Vec<f64> = dense.iter().map(|s| s.kth(k)).collect();
        let b: Vec<f64> = tri.iter().map(|s| s.kth(k)).collect();
        // two-sample KS 1% critical value for equal sizes: 1.63 sqrt(2/n)
        let crit = 1.63 * (2.0 / 3000.0f64).sqrt();
        assert!(stats::ks_two_sample(&a, &b) < crit, "k = {k}");
    }
}

#[test]
fn kth_tail_trivial_regimes() {
    let e = wishart::estimate_kth_tail(20, 1, 0.01, 2000, RngStream::new(6)).unwrap();
    assert_eq!(e.mean, 1.0);
    let e = wishart::estimate_kth_tail(50, 50, 4.0, 2000, RngStream::new(7)).unwrap();
    assert_eq!(e.mean, 0.0);
    assert!(e.zero_hits);
    assert!(wishart::estimate_kth_tail(5, 6, 1.0, 10, RngStream::new(0)).is_err());
}

#[test]
fn conditional_top_tail_agrees_with_plain_sampling() {
    let (m, x) = (10, 5.0);
    let plain = wishart::estimate_kth_tail(m, 1, x, 100_000, RngStream::new(8)).unwrap();
    let cond = wishart::estimate_top_tail_conditional(m, x, 20_000, RngStream::new(9)).unwrap();
    assert!(plain.mean > 0.0);
    assert!(plain.combined_z(&cond).abs() <= 3.0, "{} vs {}", plain.mean, cond.mean);
    assert!(cond.stderr < plain.stderr);
}

#[test]
fn top_eigenvalue_large_deviation_trend() {
    // P(lambda_1 >= 5) is about e^{-0.156 m}: far beyond plain sampling at
    // these sizes, so the conditional estimator is used.
    let x = 5.0;
    let target = mp::rate(x);
    let mut gaps = Vec::new();
    for (j, m) in [50usize, 100, 200].into_iter().enumerate() {
        let e = wishart::estimate_top_tail_conditional(m, x, 4000, RngStream::new(10 + j as u64)).unwrap();
        let empirical = -e.log_mean / m as f64;
        assert!(empirical > target / 2.0 && empirical < 2.0 * target, "m = {m}: {empirical} vs {target}");
        gaps.push((empirical - target).abs());
    }
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn top_eigenvalue_below_the_edge_is_never_seen() {
    // Below the edge the decay is at speed m^2, once x is several edge
    // fluctuations (about 2.5 m^{-2/3}) away: at m = 100, x = 3.5 is only
    // 4.4 of them and a few draws per thousand still land below.
    for (m, x) in [(100, 3.0), (400, 3.5)] {
        let e = wishart::estimate_kth_tail(m, 1, x, 10_000, RngStream::new(13)).unwrap();
        assert_eq!(e.mean, 1.0, "m = {m}, x = {x}");
    }
}

#[test]
fn esd_convergence_and_degenerate_inputs() {
    let spectra = wishart::sample_many(Sampler::Dense, 200, 20, RngStream::new(14)).unwrap();
    assert!(wishart::ks_distance_to_mp(&spectra).unwrap() < 0.05);
    let zeros = Spectrum::new(vec![0.0; 5]).unwrap();
    assert!((wishart::ks_distance_to_mp(&[zeros]).unwrap() - 1.0).abs() < 1e-12);
    let n = 1000;
    let quantiles: Vec<f64> = (0..n).map(|i| mp::tail_quantile(1.0 - (i as f64 + 0.5) / n as f64).unwrap()).collect();
    let d = wishart::ks_distance_to_mp(&[Spectrum::new(quantiles).unwrap()]).unwrap();
    assert!(d <= 1.0 / n as f64 + 1e-9, "{d}");
    assert!(wishart::ks_distance_to_mp(&[]).is_err());
}

#[test]
fn concentration_of_order_statistics() {
    assert!(wishart::concentration_check(200, 0.5, 0.1, 200, RngStream::new(15)).unwrap() <= 0.01);
    assert_eq!(wishart::concentration_check(30, 0.3, 4.0, 100, RngStream::new(16)).unwrap(), 0.0);
    let small = wishart::concentration_check(10, 0.5, 0.1, 2000, RngStream::new(17)).unwrap();
    let large = wishart::concentration_check(100, 0.5, 0.1, 2000, RngStream::new(18)).unwrap();
    assert!(large <= small, "{large} vs {small}");
    assert_eq!(wishart::concentration_index(10, 0.01), 1);
    assert_eq!(wishart::concentration_index(10, 0.99), 10);
}

#[test]
fn sampling_is_reproducible_and_thread_independent() {
    let run = || wishart::sample_many(Sampler::Dense, 6, 64, RngStream::new(19)).unwrap();
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(run);
    let multi = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(run);
    assert_eq!(single, multi);
    assert_ne!(single, wishart::sample_many(Sampler::Dense, 6, 64, RngStream::new(20)).unwrap());
}
