import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from ptl.ids import (MeasureApprox, PreconditionError, borel_strip_integral, borel_transform,
                     certify_lipschitz, check_borel_bounds, free_ids, ids_curve, ids_local,
                     ids_slope_at_critical)


def test_free_ids_values():
    assert free_ids([-2.0, 0.0, 1.0, 2.0]) == pytest.approx([0.0, 0.5, 2 / 3, 1.0])


def test_free_lattice_counting(free):
    E = np.linspace(-2.5, 2.5, 21)
    c = ids_curve(free, E, 1000, 1, 0)
    assert np.abs(c.N_hat - free_ids(E)).max() < 1.0 / 2001 + 1e-12


def test_curve_monotone_with_limits(dimer):
    E = np.linspace(-3.5, 3.5, 57)
    c = ids_curve(dimer, E, 500, 3, 1)
    assert np.all(np.diff(c.N_hat) >= 0)
    assert c.N_hat[0] == 0.0 and c.N_hat[-1] == 1.0


def test_local_weights_match_counting(dimer):
    E = np.array([-1.0, 0.0, 0.5, 1.3])
    n = 50
    loc = ids_local(dimer, E, 500, n, 2, smoothing=2e-2)
    cnt = ids_curve(dimer, E, 500, n, 2, smoothing=2e-2)
    assert np.all(np.abs(loc.N_hat - cnt.N_hat) < 2 * np.hypot(loc.stderr, cnt.stderr) + 5e-3)
    full = ids_local(dimer, [10.0], 500, 2, 0)
    assert full.N_hat[0] == pytest.approx(1.0, abs=1e-12)


def test_window_too_small(dimer):
    with pytest.raises(ValueError, match="sites"):
        ids_curve(dimer, [0.0], 200, 1, 0)
    with pytest.raises(ValueError):
        ids_curve(dimer, [1.0, 0.0], 500, 1, 0)


def test_free_slope_is_one_over_pi(free):
    fit = ids_slope_at_critical(free, 0.0, [0.02, 0.05, 0.1, 0.2], 1000, 1, 0)
    # the free IDS derivative at 0 is 1/(2 pi), the symmetric difference doubles it
    exact = free_ids(fit.epsilons) - free_ids(-fit.epsilons)
    assert fit.differences == pytest.approx(exact, abs=2e-3)
    assert fit.D_prime_hat == pytest.approx(1 / math.pi, rel=0.05)
    assert not fit.flagged


def test_slope_grid_must_span_a_decade(dimer):
    with pytest.raises(ValueError):
        ids_slope_at_critical(dimer, 0.5, [0.05, 0.1], 500, 1, 0)


# -- Borel transforms ---------------------------------------------------------------

def test_point_mass_positive_kernel():
    mu = MeasureApprox.from_atoms([0.0], [1.0])
    assert borel_transform(mu, 1j).imag == pytest.approx(1.0)


def test_uniform_density_limit():
    mu = MeasureApprox.from_density([0.0, 1.0], [1.0])
    assert borel_transform(mu, 0.5 + 1e-9j).imag == pytest.approx(math.pi, rel=1e-8)
    assert mu.total_mass == pytest.approx(1.0, abs=1e-12)


@given(E=st.floats(-1, 2), d=st.floats(1e-2, 2), eps0=st.floats(1e-2, 2))
def test_closed_forms_match_quadrature(E, d, eps0):
    mu = MeasureApprox.from_density([-0.5, 0.0, 0.7, 1.5], [0.2, 0.8, 0.4], normalize=True)
    b = borel_transform(mu, E + 1j * d)
    ref = integrate.quad(lambda e: mu_density(mu, e) / (e - E - 1j * d),
                         -0.5, 1.5, points=[0, 0.7], complex_func=True, limit=200)[0]
    assert b == pytest.approx(ref, rel=1e-8, abs=1e-10)
    s = borel_strip_integral(mu, E, eps0, d)
    ref = integrate.quad(lambda x: borel_transform(mu, E + x + 1j * d).imag, 0, eps0)[0]
    assert s == pytest.approx(ref, rel=1e-8, abs=1e-10)


def mu_density(mu, e):
    k = np.searchsorted(mu.edges, e, side="right") - 1
    return mu.density[k] if 0 <= k < len(mu.density) else 0.0


def test_histogram_total_mass(rng):
    mu = MeasureApprox.histogram(rng.normal(size=5000), 64)
    assert mu.total_mass == pytest.approx(1.0, abs=1e-12)


def test_free_measure_passes_bounds():
    edges = np.linspace(-2, 2, 4001)
    mu = MeasureApprox.from_cdf(free_ids, edges)
    # mu([-eps, eps]) / eps peaks at eps = 2 with value 1/2
    assert 0.43 < certify_lipschitz(mu, 0.0) <= 0.5
    assert certify_lipschitz(mu, 0.0, eps_min=2.0, eps_max=2.0) == pytest.approx(0.5)
    reps = check_borel_bounds(mu, 0.0, 0.5, [1e-3, 1e-2, 0.1, 1.0], [0.1, 1.0])
    assert reps and all(r.satisfied for r in reps)
    assert {r.bound_kind for r in reps} == {"borel_pointwise", "borel_integrated"}


def test_point_mass_rejected():
    mu = MeasureApprox.from_atoms([0.0], [1.0])
    with pytest.raises(PreconditionError, match=r"mu\(\["):
        check_borel_bounds(mu, 0.0, 5.0, [0.1], [0.1])
    with pytest.raises(PreconditionError):
        check_borel_bounds(mu, 0.0, None, [0.1], [0.1])


def test_spike_below_certified_scale_is_reported():
    # a narrow spike hides under the smallest certified scale, so the
    # precondition passes but the pointwise bound is violated
    edges = [-1.0, -5e-7, 5e-7, 1.0]
    mu = MeasureApprox.from_density(edges, [0.5, 2.0, 0.5], normalize=True)
    reps = check_borel_bounds(mu, 0.0, 1.5, [1e-8, 1.0], [0.1])
    point = [r for r in reps if r.bound_kind == "borel_pointwise"]
    assert not point[0].satisfied and point[1].satisfied
