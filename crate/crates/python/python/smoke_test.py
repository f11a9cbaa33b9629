"""Smoke test for the critpoints_py extension module.

Build and install first, e.g. `pip install --no-build-isolation crates/python`
or `maturin develop -m crates/python/Cargo.toml`, then run this file.
"""

import math

import critpoints_py as cp


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    # Marchenko-Pastur law
    s = cp.mp_tail_quantile(0.5)
    assert close(cp.mp_tail_mass(s), 0.5, 1e-10)
    assert cp.mp_rate(4.0) == 0.0
    assert close(cp.mp_rate(4.5), 0.75 - math.log(2.0), 1e-14)
    assert close(cp.mp_log_potential(5.0) + cp.mp_rate(5.0) + 1.0, 0.0, 1e-6)

    # Wishart spectra
    spec = cp.sample_spectrum(5, seed=1)
    ev = spec.eigenvalues
    assert len(ev) == 5 and ev == sorted(ev, reverse=True)
    assert spec.kth(1) == spec.largest()
    spectra = cp.sample_spectra(20, 200, seed=2, sampler="tridiagonal")
    mean_trace = sum(x.trace() for x in spectra) / (20 * len(spectra))
    assert close(mean_trace, 21 / 20, 0.02), mean_trace

    # Exact count of index-m points against Monte Carlo
    exact = cp.expected_index_m_total(1, 3)
    assert close(exact, 16 / 7, 1e-12)
    est = cp.mc_expected_count_index(1, 1, 3, n=50_000, seed=3)
    assert abs(est.z_score(exact)) <= 3.0, est
    total = cp.mc_expected_count_total(2, 3, n=20_000, seed=4, window=(0.0, float("inf")))
    assert total.mean > 0 and not total.zero_hits

    # Growth rates
    rate = cp.analytic_rate(3, "total", x=3.0)
    assert close(rate.analytic_rate, -0.113706, 1e-5)
    curve = cp.empirical_rate_curve(3, "index-m", [10, 20], n=200, seed=5)
    assert [p.m for p in curve] == [10, 20]

    # Direct simulation of the random section
    sec = cp.Section.sample(1, 2, seed=6)
    points, stable = sec.critical_points(seed=7)
    assert stable and sorted(p.index for p in points) == [1, 2]
    for p in points:
        assert p.residual <= 1e-10
    survey = cp.direct_survey(1, 3, 100, seed=8)
    assert survey.flagged == 0
    d = survey.count_estimate(1)
    assert abs(d.z_score(exact)) <= 4.0, d
    assert cp.euler_target(2, 3) == 3

    rows = cp.covariance_table(1, 2, 2000, seed=9)
    assert all(z <= 5.0 for *_, z in rows)

    # One verification check
    assert "smallest-eig" in cp.check_names()
    r = cp.run_check("mp-identity")
    assert r.passed, r.summary

    print("critpoints_py smoke test passed")


if __name__ == "__main__":
    main()
