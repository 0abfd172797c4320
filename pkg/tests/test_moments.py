import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ptl.moments import (MomentTable, _predicted_pieces, decomposition_scan,
                         default_energy_window, energy_rule, fit_exponents, moments_green,
                         moments_spectral, partial_moments, predicted_beta)


@given(a=st.floats(-2.5, 2.5), T=st.floats(5, 2000))
def test_energy_rule_integrates_lorentzian(a, T):
    rule = energy_rule(T, -math.inf, math.inf, points_per_width=8, anchors=(-3.5, 3.5))
    f = (1 / T) / ((rule.nodes - a) ** 2 + T ** -2)
    assert float(rule.weights @ f) == pytest.approx(math.pi, rel=1e-5)


def test_energy_rule_finite_interval():
    rule = energy_rule(10, 0.0, 1.0, points_per_width=4)
    assert rule.nodes[0] == 0.0 and rule.nodes[-1] == 1.0
    assert rule.weights.sum() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        energy_rule(10, -math.inf, 1.0)


def test_predicted_beta():
    assert [predicted_beta(q) for q in (0.25, 0.5, 1, 2, 3)] == pytest.approx(
        [0, 0, 0.5, 0.75, 5 / 6])


def test_predicted_pieces():
    p = _predicted_pieces(1.0, 0.25)
    assert p == pytest.approx({"central": 0.75, "main": 2.0, "boundary": 1.0})
    p = _predicted_pieces(0.25, 0.2)
    assert p["central"] == pytest.approx(0.05)
    assert p["main"] == pytest.approx(6 * 0.25 * 0.2 + 0.2 * (0.5 - 1))


def test_free_second_moment_is_T_squared(free):
    # sum_n n^2 J_n(2t)^2 = 2 t^2, whose Abelian average is T^2
    tab = moments_green(free, [2.0], [10.0, 40.0], 1, 0)
    assert tab.m[0] == pytest.approx([100.0, 1600.0], rel=2e-4)
    assert tab.normalization_defect.max() < 1e-4


def test_free_second_moment_spectral(free):
    tab = moments_spectral(free, [2.0], [10.0, 20.0], 1, 0, window=400)
    assert tab.m[0] == pytest.approx([100.0, 400.0], rel=1e-3)


def test_routes_agree_on_a_box(dimer):
    kw = dict(samples=3, seed=4)
    a = moments_spectral(dimer, [0.5, 1, 2], [5.0, 20.0], window=120, **kw)
    b = moments_green(dimer, [0.5, 1, 2], [5.0, 20.0], window=120, **kw)
    assert np.allclose(a.m, b.m, rtol=1e-5)
    assert np.allclose(a.per_sample, b.per_sample, rtol=1e-5)
    assert a.normalization_defect.max() < 1e-10
    assert b.normalization_defect.max() < 1e-5
    assert b.ward_defect.max() < 1e-10


def test_adaptive_matches_large_box(dimer):
    a = moments_green(dimer, [1, 3], [20.0, 60.0], 2, 1, tol=3e-2, points_per_width=2)
    b = moments_green(dimer, [1, 3], [20.0, 60.0], 2, 1, window=2000, points_per_width=2)
    assert np.allclose(a.m, b.m, rtol=1e-5)


def test_thread_independence(dimer):
    a = moments_green(dimer, [1.0], [30.0], 5, 3, threads=1, points_per_width=2)
    b = moments_green(dimer, [1.0], [30.0], 5, 3, threads=3, points_per_width=2)
    assert np.array_equal(a.per_sample, b.per_sample)


def test_localized_moments_saturate(anderson):
    # ballistic spreading would grow the second moment 100-fold
    tab = moments_green(anderson, [2.0], [100.0, 1000.0], 4, 0, points_per_width=2)
    assert tab.m[0, 1] < 3 * tab.m[0, 0]


def test_spectral_window_policy(dimer):
    with pytest.raises(ValueError, match="window"):
        moments_spectral(dimer, [1.0], [100.0], 1, 0, window=300)


def test_nonpositive_q_rejected(dimer):
    with pytest.raises(ValueError):
        moments_green(dimer, [0.0], [10.0], 1, 0)


def test_partial_moments_add_up(dimer):
    T, q = 30.0, 1.0
    kw = dict(samples=2, seed=5, points_per_width=4)
    full = partial_moments(dimer, q, T, 0, math.inf, -math.inf, math.inf, **kw)
    ref = moments_green(dimer, [q], [T], 2, 5, points_per_width=4)
    assert full.value == pytest.approx(ref.m[0, 0], rel=1e-6)
    parts = [partial_moments(dimer, q, T, a0, a1, E0, E1, **kw).value
             for a0, a1 in ((0, 0.8), (0.8, math.inf))
             for E0, E1 in ((-math.inf, 0.5), (0.5, math.inf))]
    assert sum(parts) == pytest.approx(full.value, rel=1e-3)
    inner = partial_moments(dimer, q, T, 0, 0.8, -math.inf, math.inf, **kw)
    assert inner.n_range == (-1.0, T ** 0.8)
    with pytest.raises(ValueError):
        partial_moments(dimer, q, T, 1.0, 0.5, 0, 1, **kw)


def _synthetic(beta, Ts, qs=(1.0, 2.0), samples=4, noise=0.0):
    rng = np.random.default_rng(0)
    Ts = np.asarray(Ts, float)
    per = np.array([[[3.0 * T ** (q * beta) * (1 + noise * rng.standard_normal())
                      for T in Ts] for q in qs] for _ in range(samples)])
    m = per.mean(axis=0)
    se = per.std(axis=0, ddof=1) / math.sqrt(samples)
    return MomentTable(np.array(qs), Ts, m, se, "synthetic", np.zeros(len(Ts)), samples, 0, per)


def test_fit_exponents_exact_power_law():
    fits = fit_exponents(_synthetic(0.7, np.logspace(2, 5, 6)))
    for f in fits:
        assert f.beta_hat == pytest.approx(0.7, abs=1e-12)
        assert f.beta_minus == pytest.approx(0.7) and f.beta_plus == pytest.approx(0.7)
        assert not f.flagged


def test_fit_exponents_window_and_preconditions():
    tab = _synthetic(0.5, np.logspace(1, 5, 9))
    f = fit_exponents(tab, (1e2, 1e5))[0]
    assert f.T_range == pytest.approx((1e2, 1e5))
    with pytest.raises(ValueError):
        fit_exponents(tab, (1e4, 1e5))
    with pytest.raises(ValueError):
        fit_exponents(_synthetic(0.5, [10, 20, 30, 40, 50]))


def test_fit_exponents_flags_decrease():
    tab = _synthetic(0.5, np.logspace(2, 4, 5), qs=(1.0,))
    m = tab.m.copy()
    m[0, 3] = 0.3 * m[0, 2]
    bad = MomentTable(tab.q_grid, tab.T_grid, m, tab.stderr, "synthetic",
                      tab.normalization_defect, tab.samples, 0, None)
    f = fit_exponents(bad)[0]
    assert f.flagged and "decreases" in f.message


def test_decomposition_pieces_sum_to_total(dimer):
    rep = decomposition_scan(dimer, 1.0, [30.0, 60.0], 0.25, 2, 3, E_c=0.5, eps0=0.2,
                             points_per_width=2)
    s = rep.central + rep.main + rep.boundary + rep.remainder
    assert np.allclose(s, rep.total, rtol=0.05)
    assert set(rep.slopes) == {"central", "main", "boundary"}


def test_default_energy_window(dimer):
    lo, hi = default_energy_window(dimer)
    assert lo < -2.5 and hi > 2.5


def test_chunks_pool_to_the_full_run(dimer):
    kw = dict(points_per_width=2, tol=3e-2)
    full = moments_green(dimer, [1.0, 2.0], [10.0, 30.0], 5, 9, **kw)
    parts = [moments_green(dimer, [1.0, 2.0], [10.0, 30.0], n, 9, first_sample=f, **kw)
             for f, n in ((0, 2), (2, 3))]
    pooled = MomentTable.concatenate(parts)
    assert np.array_equal(pooled.per_sample, full.per_sample)
    assert np.allclose(pooled.m, full.m) and np.allclose(pooled.stderr, full.stderr)
    assert pooled.samples == 5
    other = moments_green(dimer, [1.0, 2.0], [10.0, 30.0], 1, 10, **kw)
    with pytest.raises(ValueError):
        MomentTable.concatenate([parts[0], other])
