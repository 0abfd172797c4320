import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ptl.lyapunov import (calibrate_c4, corollary_expectation, event_probability, fit_D,
                          lyapunov, uniform_bounded_grid, uniform_upper_rate, wilson_interval)
from ptl.model import anderson_spec, dimer_spec


@pytest.mark.parametrize("E", [2.5, 3.0, -4.0])
def test_free_lattice_outside_band(free, E):
    # periodic chain: gamma = acosh(|E|/2)
    est = lyapunov(free, E, 2000, 2, 0)
    assert est.gamma == pytest.approx(math.acosh(abs(E) / 2), rel=1e-6)


def test_free_lattice_inside_band(free):
    assert abs(lyapunov(free, 0.7, 20000, 2, 0).gamma) < 1e-3
    assert lyapunov(free, 0.7, 20000, 2, 0, estimator="plain").gamma < 1e-3


def test_anderson_positive(anderson):
    est = lyapunov(anderson, 0.3, 20000, 8, 1)
    assert est.gamma > 10 * est.stderr > 0


def test_upper_rate_bounds_gamma(dimer, anderson):
    for spec in (dimer, anderson):
        for E in (-1.0, 0.2, 2.9):
            assert lyapunov(spec, E, 5000, 4, 3).gamma <= uniform_upper_rate(spec, E)


def test_critical_energy_small(dimer):
    est = lyapunov(dimer, 0.5, 100_000, 20, 4)
    assert abs(est.gamma) < 3 * est.stderr + 1e-4


def test_lyapunov_preconditions(dimer):
    with pytest.raises(ValueError):
        lyapunov(dimer, 0.1, 10, 2, 0)
    with pytest.raises(ValueError):
        lyapunov(dimer, 0.1, 1000, 2, 0, estimator="magic")


def test_threads_do_not_change_result(dimer):
    a = lyapunov(dimer, 0.6, 4000, 9, 8, threads=1)
    b = lyapunov(dimer, 0.6, 4000, 9, 8, threads=4)
    assert np.array_equal(a.values, b.values)


def test_fit_D_recovers_quadratic(dimer):
    fit = fit_D(dimer, 0.5, [0.05, 0.1, 0.2, 0.5], 50_000, 16, 2)
    assert fit.D_hat > 0 and not fit.flagged
    with pytest.raises(ValueError):
        fit_D(dimer, 0.5, [0.1, 0.2], 1000, 2, 0)


def test_wilson_interval():
    lo, hi = wilson_interval(5, 10)
    assert (lo, hi) == pytest.approx((0.2366, 0.7634), abs=1e-4)
    assert wilson_interval(0, 10)[0] == 0.0
    assert wilson_interval(10, 10)[1] == 1.0


@given(k=st.integers(0, 200), extra=st.integers(0, 200))
def test_wilson_contains_estimate(k, extra):
    n = k + extra
    if n == 0:
        return
    lo, hi = wilson_interval(k, n)
    assert 0.0 <= lo <= k / n <= hi <= 1.0


def test_events_trivial_thresholds(dimer):
    lo = event_probability(dimer, "norm_exceeds", 0.3, 200, -1.0, 50, 0)
    hi = event_probability(dimer, "running_max_exceeds", 0.3, 200, 1e6, 50, 0)
    assert lo.p_hat == 1.0 and hi.p_hat == 0.0
    ub = event_probability(dimer, "uniform_bounded", 0.5, 200, 50.0, 20, 0)
    assert ub.p_hat == 1.0
    with pytest.raises(ValueError):
        event_probability(dimer, "sometimes", 0.3, 100, 1.0, 2, 0)


def test_running_max_dominates_endpoint(anderson):
    a = event_probability(anderson, "norm_exceeds", 0.3, 300, 8.0, 200, 5)
    b = event_probability(anderson, "running_max_exceeds", 0.3, 300, 8.0, 200, 5)
    assert b.count >= a.count


def test_uniform_bounded_agrees_with_direct_maximum(dimer):
    from ptl import kernels
    from ptl.model import sample_realization
    N, c4 = 120, 1.2
    grid = uniform_bounded_grid(0.5, N, 0.25, 1.0)
    ev = event_probability(dimer, "uniform_bounded", 0.5, N, c4, 30, 9)
    direct = 0
    for i in range(30):
        r = sample_realization(dimer, 9, i, N)
        m = max(kernels.max_pair_log_norm(complex(z), r.v, r.t, r.window, N) for z in grid)
        direct += m <= c4
    assert ev.count == direct


def test_uniform_grid_shape():
    g = uniform_bounded_grid(0.5, 100, 0.25, 1.0, 5, 2)
    assert len(g) == 10
    assert np.max(np.abs(g.real - 0.5)) == pytest.approx(100 ** -0.75)
    assert g.imag.min() == 0 and g.imag.max() == pytest.approx(0.01)


def test_calibrate_c4_quantiles(dimer):
    lo = calibrate_c4(dimer, 0.5, 100, 40, 1, quantile=0.2)
    hi = calibrate_c4(dimer, 0.5, 100, 40, 1, quantile=0.8)
    assert 0 < lo <= hi


def test_corollary_expectation(dimer):
    v = corollary_expectation(dimer, 0.3, 200, 20, 0)
    assert 0 < v <= 0.5     # ||T(0,0)||_F^2 = 2
    lv = corollary_expectation(dimer, 0.3, 200, 20, 0, log=True)
    assert lv == pytest.approx(math.log(v))
    assert corollary_expectation(anderson_spec(), 0.3, 2000, 20, 0) < v
