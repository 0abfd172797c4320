import math
import re

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ptl.model import (JacobiWindow, SpecError, anderson_spec, build_spec, dimer_spec,
                       materialize, sample_realization, spec_from_mapping, spec_to_mapping)


def test_dimer_blocks():
    s = dimer_spec(0.3)
    assert s.block(1)[1].tolist() == [0.3, 0.3]
    assert s.block(-1)[1].tolist() == [-0.3, -0.3]
    assert s.block(1)[0].tolist() == [1.0, 1.0]
    assert s.correlation_length == 2
    assert s.p_minus == pytest.approx(0.5)


def test_anderson_blocks():
    s = anderson_spec(2.0, -1.0, 0.3)
    assert s.L_plus == s.L_minus == 1
    assert s.v_max == 2.0
    assert s.p_minus == pytest.approx(0.7)


@pytest.mark.parametrize("kw, key", [
    (dict(t_plus=[1.0, 0.0]), "t_plus[1]"),
    (dict(t_minus=[-1.0]), "t_minus[0]"),
    (dict(t_plus=[]), "t_plus"),
])
def test_build_spec_rejects(kw, key):
    args = dict(t_plus=[1.0], v_plus=[0.0], t_minus=[1.0], v_minus=[1.0], p_plus=0.5)
    args.update(kw)
    if "t_plus" in kw and len(kw["t_plus"]) != 1:
        args["v_plus"] = [0.0] * len(kw["t_plus"])
    with pytest.raises(SpecError, match=re.escape(key)):
        build_spec(**args)


def test_build_spec_length_mismatch():
    with pytest.raises(SpecError):
        build_spec([1.0, 1.0], [0.0], [1.0], [0.0], 0.5)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
def test_build_spec_probability(p):
    with pytest.raises(SpecError, match="p_plus"):
        build_spec([1.0], [0.0], [1.0], [1.0], p)


def test_spec_mapping_round_trip():
    s = build_spec([1.0, 0.5], [0.1, -0.2], [2.0], [0.3], 0.25)
    assert spec_from_mapping(spec_to_mapping(s)) == s
    assert spec_from_mapping({"kind": "dimer", "lambda": "0.5"}) == dimer_spec(0.5)


def test_spec_mapping_unknown_key():
    with pytest.raises(SpecError, match="colour"):
        spec_from_mapping({"kind": "dimer", "lambda": "0.5", "colour": "red"})


def test_spec_mapping_zero_hopping_names_key():
    m = {"kind": "polymer", "t_plus": "1, 0", "v_plus": "0, 0", "t_minus": "1", "v_minus": "1"}
    with pytest.raises(SpecError, match=r"t_plus\[1\]"):
        spec_from_mapping(m)


def test_window_smaller_than_block_rejected():
    s = build_spec([1.0] * 5, [0.0] * 5, [1.0], [1.0], 0.5)
    with pytest.raises(SpecError):
        sample_realization(s, 0, 0, 3)


def _block_consistent(spec, r):
    """Every site carries the data of its block at the right offset."""
    Lp, Lm = spec.L_plus, spec.L_minus
    lens = np.where(r.signs > 0, Lp, Lm)
    start = -r.origin_offset - int(lens[:r.origin_block].sum())
    n = start
    for s, L in zip(r.signs, lens):
        t, v = spec.block(int(s))
        for k in range(L):
            if r.contains(n):
                assert r.t_at(n) == t[k] and r.v_at(n) == v[k]
            n += 1


@given(seed=st.integers(0, 2 ** 63), idx=st.integers(0, 50), w=st.integers(3, 200))
def test_realization_blocks(seed, idx, w):
    spec = build_spec([1.0, 0.5, 2.0], [0.1, 0.2, 0.3], [0.7], [-1.0], 0.4)
    r = sample_realization(spec, seed, idx, w)
    assert len(r.t) == len(r.v) == 2 * w + 1
    _block_consistent(spec, r)


@given(seed=st.integers(0, 2 ** 63), idx=st.integers(0, 50),
       w=st.integers(3, 100), extra=st.integers(1, 300))
def test_window_extension_is_consistent(seed, idx, w, extra):
    spec = build_spec([1.0, 0.5, 2.0], [0.1, 0.2, 0.3], [0.7], [-1.0], 0.4)
    a = sample_realization(spec, seed, idx, w)
    b = sample_realization(spec, seed, idx, w + extra)
    assert np.array_equal(a.t, b.t[extra:-extra])
    assert np.array_equal(a.v, b.v[extra:-extra])


def test_origin_block_law():
    # origin falls in a block with probability proportional to p_s L_s
    spec = build_spec([1.0], [1.0], [1.0] * 3, [-1.0] * 3, 0.5)
    n = 4000
    minus = sum(sample_realization(spec, 7, i, 3).origin_sign < 0 for i in range(n))
    p = 0.75
    assert abs(minus / n - p) < 4 * math.sqrt(p * (1 - p) / n)


def test_sign_frequency():
    spec = anderson_spec(p_plus=0.3)
    r = sample_realization(spec, 3, 0, 20000)
    frac = np.mean(r.v > 0)
    assert abs(frac - 0.3) < 4 * math.sqrt(0.21 / len(r.v))


def test_jacobi_window_forms(dimer):
    r = sample_realization(dimer, 1, 0, 30)
    W = materialize(r)
    H = W.to_dense()
    assert np.allclose(H, H.T)
    assert np.allclose(np.diag(H, 1), r.t[1:])
    assert np.allclose(np.linalg.eigvalsh(H), W.eigenvalues)
    z = 0.3 + 0.1j
    ab = W.to_banded(z)
    assert np.allclose(ab[1], r.v - z)
    assert np.allclose(ab[0, 1:], r.t[1:]) and np.allclose(ab[2, :-1], r.t[1:])
    S = W.sub(-5, 7)
    assert S.size == 13 and np.allclose(S.to_dense(), H[25:38, 25:38])
    with pytest.raises(IndexError):
        W.sub(-40, 0)


def test_spectrum_bracket_contains_eigenvalues(dimer, anderson):
    for s in (dimer, anderson):
        lo, hi = s.spectrum_bracket()
        ev = materialize(sample_realization(s, 2, 0, 200)).eigenvalues
        assert lo <= ev.min() and ev.max() <= hi
