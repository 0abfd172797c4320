"""Random polymer Jacobi matrices: model data, disorder sampling, windows.

A polymer family is given by two finite blocks of hoppings and potentials
(the ``+`` and ``-`` blocks).  A configuration is an i.i.d. Bernoulli
sequence of blocks laid out along the integers, with the origin at a random
position inside its block.  Site ``n`` carries the potential ``v_n`` and the
hopping ``t_n`` that couples it to site ``n - 1``:

    (H u)(n) = t_{n+1} u(n+1) + v_n u(n) + t_n u(n-1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal

__all__ = [
    "SpecError",
    "PolymerSpec",
    "Realization",
    "JacobiWindow",
    "build_spec",
    "dimer_spec",
    "anderson_spec",
    "sample_realization",
    "materialize",
    "spec_from_mapping",
    "spec_to_mapping",
]


class SpecError(ValueError):
    """Invalid model data."""


@dataclass(frozen=True)
class PolymerSpec:
    t_plus: tuple
    v_plus: tuple
    t_minus: tuple
    v_minus: tuple
    p_plus: float

    @property
    def p_minus(self) -> float:
        return 1.0 - self.p_plus

    @property
    def L_plus(self) -> int:
        return len(self.t_plus)

    @property
    def L_minus(self) -> int:
        return len(self.t_minus)

    @property
    def correlation_length(self) -> int:
        return max(self.L_plus, self.L_minus)

    @property
    def t_max(self) -> float:
        return max(self.t_plus + self.t_minus)

    @property
    def t_min(self) -> float:
        return min(self.t_plus + self.t_minus)

    @property
    def v_max(self) -> float:
        return max(abs(x) for x in self.v_plus + self.v_minus)

    @property
    def bound_C(self) -> float:
        """Global bound on |v|, t and 1/t."""
        return max(self.v_max, self.t_max, 1.0 / self.t_min)

    @property
    def tau(self) -> float:
        return max(self.t_max ** 2, 1.0, 1.0 / self.t_min ** 2)

    def block(self, sign: int) -> tuple[np.ndarray, np.ndarray]:
        """(t, v) arrays of the block with the given sign (+1 or -1)."""
        if sign > 0:
            return np.asarray(self.t_plus, float), np.asarray(self.v_plus, float)
        return np.asarray(self.t_minus, float), np.asarray(self.v_minus, float)

    def spectrum_bracket(self) -> tuple[float, float]:
        """Interval containing the spectrum of every realization."""
        lo = min(self.v_plus + self.v_minus) - 2.0 * self.t_max
        hi = max(self.v_plus + self.v_minus) + 2.0 * self.t_max
        return lo, hi

    @property
    def blocks_identical(self) -> bool:
        return self.t_plus == self.t_minus and self.v_plus == self.v_minus


def _as_tuple(name: str, seq) -> tuple:
    try:
        out = tuple(float(x) for x in np.atleast_1d(np.asarray(seq, dtype=float)))
    except (TypeError, ValueError) as exc:
        raise SpecError(f"{name}: not a sequence of numbers") from exc
    if not all(math.isfinite(x) for x in out):
        raise SpecError(f"{name}: entries must be finite")
    return out


def build_spec(t_plus: Sequence[float], v_plus: Sequence[float],
               t_minus: Sequence[float], v_minus: Sequence[float],
               p_plus: float) -> PolymerSpec:
    tp, vp = _as_tuple("t_plus", t_plus), _as_tuple("v_plus", v_plus)
    tm, vm = _as_tuple("t_minus", t_minus), _as_tuple("v_minus", v_minus)
    for name, seq in (("t_plus", tp), ("v_plus", vp), ("t_minus", tm), ("v_minus", vm)):
        if len(seq) == 0:
            raise SpecError(f"{name}: empty block")
    if len(tp) != len(vp):
        raise SpecError(f"t_plus/v_plus: lengths differ ({len(tp)} vs {len(vp)})")
    if len(tm) != len(vm):
        raise SpecError(f"t_minus/v_minus: lengths differ ({len(tm)} vs {len(vm)})")
    for name, seq in (("t_plus", tp), ("t_minus", tm)):
        for i, x in enumerate(seq):
            if not x > 0.0:
                raise SpecError(f"{name}[{i}] = {x!r}: hopping must be positive")
    p = float(p_plus)
    if not 0.0 < p < 1.0:
        raise SpecError(f"p_plus = {p_plus!r}: must lie in (0, 1)")
    return PolymerSpec(tp, vp, tm, vm, p)


def dimer_spec(lam: float, p_plus: float = 0.5) -> PolymerSpec:
    """Random dimer model: unit hopping, potential +lam or -lam on pairs."""
    lam = float(lam)
    return build_spec((1.0, 1.0), (lam, lam), (1.0, 1.0), (-lam, -lam), p_plus)


def anderson_spec(v_plus: float = 1.0, v_minus: float = -1.0,
                  p_plus: float = 0.5) -> PolymerSpec:
    """Bernoulli-Anderson model: unit hopping, i.i.d. two-valued potential."""
    return build_spec((1.0,), (float(v_plus),), (1.0,), (float(v_minus),), p_plus)


# -- sampling -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Realization:
    """One configuration restricted to sites -window..window.

    ``signs`` lists the blocks covering the window from left to right and
    ``origin_block`` is the position of the block containing site 0 within it.
    ``t`` and ``v`` are indexed by ``n + window``.
    """
    spec: PolymerSpec
    seed: int
    sample_index: int
    signs: np.ndarray
    origin_block: int
    origin_offset: int
    window: int
    t: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)

    @property
    def origin_sign(self) -> int:
        return int(self.signs[self.origin_block])

    def index(self, n):
        """Array index of site n (no bounds check)."""
        return n + self.window

    def t_at(self, n):
        return self.t[n + self.window]

    def v_at(self, n):
        return self.v[n + self.window]

    def contains(self, n: int) -> bool:
        return -self.window <= n <= self.window


def _streams(seed: int, sample_index: int):
    ss = np.random.SeedSequence(entropy=int(seed) & ((1 << 64) - 1),
                                spawn_key=(int(sample_index),))
    origin, right, left = ss.spawn(3)
    return (np.random.Generator(np.random.Philox(origin)),
            np.random.Generator(np.random.Philox(right)),
            np.random.Generator(np.random.Philox(left)))


def _lay_blocks(spec: PolymerSpec, signs: np.ndarray):
    """Concatenate the blocks for the given sign sequence (vectorized)."""
    Lp, Lm = spec.L_plus, spec.L_minus
    Lmax = max(Lp, Lm)
    tab_t = np.ones((2, Lmax))
    tab_v = np.zeros((2, Lmax))
    tab_t[0, :Lp], tab_v[0, :Lp] = spec.block(+1)
    tab_t[1, :Lm], tab_v[1, :Lm] = spec.block(-1)
    kind = (signs < 0).astype(np.intp)
    lengths = np.where(kind == 0, Lp, Lm)
    starts = np.concatenate([[0], np.cumsum(lengths)[:-1]])
    blk = np.repeat(np.arange(len(signs)), lengths)
    pos = np.arange(blk.size) - starts[blk]
    return tab_t[kind[blk], pos], tab_v[kind[blk], pos], starts


def sample_realization(spec: PolymerSpec, seed: int, sample_index: int,
                       window_half_width: int) -> Realization:
    """Sample configuration ``sample_index`` of stream ``seed`` on a window.

    Block signs are read from counter-based streams, one to the right and one
    to the left of the origin block, so a larger window extends a smaller one
    without changing the shared sites.
    """
    Nw = int(window_half_width)
    if Nw < spec.correlation_length:
        raise SpecError(f"window_half_width = {Nw} must be >= correlation length "
                        f"{spec.correlation_length}")
    g0, gr, gl = _streams(seed, sample_index)
    Lp, Lm = spec.L_plus, spec.L_minus
    w_plus = spec.p_plus * Lp / (spec.p_plus * Lp + spec.p_minus * Lm)
    u = g0.random(2)
    s0 = 1 if u[0] < w_plus else -1
    L0 = Lp if s0 > 0 else Lm
    l = min(int(u[1] * L0), L0 - 1)

    nblk = Nw // min(Lp, Lm) + 2
    right = np.where(gr.random(nblk) < spec.p_plus, 1, -1).astype(np.int8)
    left = np.where(gl.random(nblk) < spec.p_plus, 1, -1).astype(np.int8)
    signs = np.concatenate([left[::-1], [s0], right]).astype(np.int8)
    t_all, v_all, starts = _lay_blocks(spec, signs)
    p0 = starts[nblk] + l          # array position of site 0
    lo, hi = p0 - Nw, p0 + Nw + 1
    # keep only the blocks that intersect the window
    ends = starts + np.where(signs > 0, Lp, Lm)
    keep = np.nonzero((ends > lo) & (starts < hi))[0]
    return Realization(
        spec=spec, seed=int(seed), sample_index=int(sample_index),
        signs=signs[keep[0]:keep[-1] + 1].copy(), origin_block=int(nblk - keep[0]),
        origin_offset=l, window=Nw,
        t=np.ascontiguousarray(t_all[lo:hi]), v=np.ascontiguousarray(v_all[lo:hi]))


# -- finite-volume operator ---------------------------------------------------

@dataclass(frozen=True, eq=False)
class JacobiWindow:
    """Dirichlet restriction of H to sites lo..hi.

    ``t[k]`` is the hopping between sites lo+k-1 and lo+k (``t[0]`` couples
    to the outside and is kept for the transfer matrices), ``v[k]`` the
    potential at site lo+k.
    """
    t: np.ndarray
    v: np.ndarray
    lo: int
    hi: int
    boundary: str = "dirichlet"

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    @property
    def offdiag(self) -> np.ndarray:
        return self.t[1:]

    def to_dense(self) -> np.ndarray:
        H = np.diag(self.v.astype(float))
        od = self.offdiag
        H[np.arange(1, self.size), np.arange(self.size - 1)] = od
        H[np.arange(self.size - 1), np.arange(1, self.size)] = od
        return H

    def to_banded(self, z: complex = 0.0) -> np.ndarray:
        """(H - z) in LAPACK general-banded storage with one sub/superdiagonal."""
        ab = np.zeros((3, self.size), dtype=np.complex128)
        ab[0, 1:] = self.offdiag
        ab[1, :] = self.v - z
        ab[2, :-1] = self.offdiag
        return ab

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        if self.size == 1:
            return self.v.astype(float).copy()
        return eigvalsh_tridiagonal(self.v, self.offdiag)

    def sub(self, lo: int, hi: int) -> "JacobiWindow":
        if not (self.lo <= lo <= hi <= self.hi):
            raise IndexError(f"sites {lo}..{hi} outside window {self.lo}..{self.hi}")
        a, b = lo - self.lo, hi - self.lo + 1
        return JacobiWindow(self.t[a:b].copy(), self.v[a:b].copy(), lo, hi)

    def position(self, n: int) -> int:
        return n - self.lo


def materialize(realization: Realization) -> JacobiWindow:
    Nw = realization.window
    return JacobiWindow(realization.t.copy(), realization.v.copy(), -Nw, Nw)


# -- config round trip ------------------------------------------------------------

_MODEL_KEYS = {
    "anderson": {"kind", "v_plus", "v_minus", "p_plus"},
    "dimer": {"kind", "lambda", "p_plus"},
    "polymer": {"kind", "t_plus", "v_plus", "t_minus", "v_minus", "p_plus"},
}


def _floats(key: str, text: str) -> tuple:
    try:
        return tuple(float(x) for x in str(text).split(",") if x.strip())
    except ValueError as exc:
        raise SpecError(f"{key}: cannot parse {text!r} as comma-separated decimals") from exc


def _float(key: str, text: str) -> float:
    vals = _floats(key, text)
    if len(vals) != 1:
        raise SpecError(f"{key}: expected a single number, got {text!r}")
    return vals[0]


def spec_from_mapping(section: Mapping[str, str]) -> PolymerSpec:
    """Build a spec from a ``[model]`` section (string values)."""
    kind = str(section.get("kind", "")).strip().lower()
    if kind not in _MODEL_KEYS:
        raise SpecError(f"kind: expected one of {sorted(_MODEL_KEYS)}, got {kind!r}")
    unknown = set(section) - _MODEL_KEYS[kind]
    if unknown:
        raise SpecError(f"unknown key(s) for kind={kind}: {', '.join(sorted(unknown))}")
    p = _float("p_plus", section["p_plus"]) if "p_plus" in section else 0.5
    if kind == "dimer":
        if "lambda" not in section:
            raise SpecError("lambda: required for kind=dimer")
        return dimer_spec(_float("lambda", section["lambda"]), p)
    if kind == "anderson":
        vp = _float("v_plus", section.get("v_plus", "1"))
        vm = _float("v_minus", section.get("v_minus", "-1"))
        return anderson_spec(vp, vm, p)
    missing = [k for k in ("t_plus", "v_plus", "t_minus", "v_minus") if k not in section]
    if missing:
        raise SpecError(f"{missing[0]}: required for kind=polymer")
    vals = {k: _floats(k, section[k]) for k in ("t_plus", "v_plus", "t_minus", "v_minus")}
    for k in ("t_plus", "t_minus"):
        for i, x in enumerate(vals[k]):
            if not x > 0.0:
                raise SpecError(f"{k}[{i}] = {x!r}: hopping must be positive")
    return build_spec(vals["t_plus"], vals["v_plus"], vals["t_minus"], vals["v_minus"], p)


def spec_to_mapping(spec: PolymerSpec) -> dict:
    def fmt(seq):
        return ",".join(repr(float(x)) for x in seq)
    return {"kind": "polymer", "t_plus": fmt(spec.t_plus), "v_plus": fmt(spec.v_plus),
            "t_minus": fmt(spec.t_minus), "v_minus": fmt(spec.v_minus),
            "p_plus": repr(spec.p_plus)}
