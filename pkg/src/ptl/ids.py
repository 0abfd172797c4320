"""Integrated density of states and Borel-transform bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal, eigvalsh_tridiagonal
from scipy.special import expit

from .green import BoundReport, _report
from .model import PolymerSpec, sample_realization
from .parallel import pmap

__all__ = [
    "IdsCurve",
    "IdsSlopeFit",
    "MeasureApprox",
    "PreconditionError",
    "ids_curve",
    "ids_local",
    "ids_slope_at_critical",
    "free_ids",
    "borel_transform",
    "borel_strip_integral",
    "certify_lipschitz",
    "check_borel_bounds",
]

MIN_SITES = 1000
EPS_MIN = 1e-4


@dataclass(frozen=True, eq=False)
class IdsCurve:
    energies: np.ndarray
    N_hat: np.ndarray
    stderr: np.ndarray
    window: int
    samples: int
    per_sample: np.ndarray = field(repr=False, default=None)


def free_ids(E):
    """IDS of the free lattice (t = 1, v = 0): arccos(-E/2)/pi on [-2, 2]."""
    E = np.asarray(E, dtype=float)
    return np.arccos(np.clip(-E / 2.0, -1.0, 1.0)) / math.pi


def _step(x: np.ndarray, smoothing: float) -> np.ndarray:
    return (x >= 0).astype(float) if smoothing == 0 else expit(x / smoothing)


def _curve(energies, per, window, samples):
    m = per.mean(axis=0)
    se = per.std(axis=0, ddof=1) / math.sqrt(samples) if samples > 1 else np.zeros_like(m)
    return IdsCurve(energies, m, se, int(window), int(samples), per)


def _check(energies, window):
    E = np.asarray(energies, dtype=float)
    if E.ndim != 1 or np.any(np.diff(E) < 0):
        raise ValueError("energies must be a sorted 1-d sequence")
    if 2 * int(window) + 1 < MIN_SITES:
        raise ValueError(f"window half-width {window} gives fewer than {MIN_SITES} sites")
    return E


def ids_curve(spec: PolymerSpec, energies: Sequence[float], window: int, samples: int,
              seed: int, *, smoothing: float = 0.0, threads: int | None = None) -> IdsCurve:
    """Fraction of Dirichlet eigenvalues on [-window, window] that are <= E.

    With ``smoothing`` > 0 the indicator is replaced by a logistic step of
    that width.
    """
    E = _check(energies, window)

    def one(i):
        r = sample_realization(spec, seed, i, window)
        ev = eigvalsh_tridiagonal(r.v, r.t[1:])
        if smoothing == 0:
            return np.searchsorted(ev, E, side="right") / len(ev)
        return _step(E[:, None] - ev[None, :], smoothing).mean(axis=1)

    per = np.array(pmap(one, range(samples), threads))
    return _curve(E, per, window, samples)


def ids_local(spec: PolymerSpec, energies: Sequence[float], window: int, samples: int,
              seed: int, *, smoothing: float = 1e-2, threads: int | None = None) -> IdsCurve:
    """<0| f_E(H) |0> with f_E a logistic step at E, averaged over disorder."""
    E = _check(energies, window)
    if smoothing <= 0:
        raise ValueError("smoothing must be positive")

    def one(i):
        r = sample_realization(spec, seed, i, window)
        ev, psi = eigh_tridiagonal(r.v, r.t[1:])
        w0 = psi[window] ** 2
        return _step(E[:, None] - ev[None, :], smoothing) @ w0

    per = np.array(pmap(one, range(samples), threads))
    return _curve(E, per, window, samples)


@dataclass(frozen=True)
class IdsSlopeFit:
    D_prime_hat: float
    stderr: float
    quadratic: float
    epsilons: np.ndarray
    differences: np.ndarray
    ratios: np.ndarray
    ratio_spread: float
    flagged: bool
    message: str = ""


def ids_slope_at_critical(spec: PolymerSpec, E_c: float, epsilons: Sequence[float],
                          window: int, samples: int, seed: int, *,
                          threads: int | None = None) -> IdsSlopeFit:
    """Fit N(E_c + eps) - N(E_c - eps) = D' eps + c eps^2.

    The stderr comes from the spread of per-realization fits.
    ``ratio_spread`` is max/min - 1 of the difference quotient over the grid.
    """
    eps = np.asarray(epsilons, dtype=float)
    if np.any(eps <= 0):
        raise ValueError("epsilons must be positive")
    if eps.max() / eps.min() < 10.0 * (1 - 1e-12):
        raise ValueError("epsilons must span at least one decade")
    E = np.sort(np.concatenate([E_c - eps, E_c + eps]))
    curve = ids_curve(spec, E, window, samples, seed, threads=threads)
    lo = np.searchsorted(E, E_c - eps)
    hi = np.searchsorted(E, E_c + eps)
    diff = curve.per_sample[:, hi] - curve.per_sample[:, lo]
    A = np.stack([eps, eps ** 2], axis=1)
    coef_s = np.linalg.lstsq(A, diff.T, rcond=None)[0]     # (2, samples)
    D, c = coef_s.mean(axis=1)
    se = float(coef_s[0].std(ddof=1) / math.sqrt(samples)) if samples > 1 else float("nan")
    mean_diff = diff.mean(axis=0)
    ratios = mean_diff / eps
    spread = float(ratios.max() / ratios.min() - 1.0) if ratios.min() > 0 else float("inf")
    flagged = bool(D <= 0 and abs(D) > 2 * se)
    return IdsSlopeFit(float(D), se, float(c), eps, mean_diff, ratios, spread, flagged,
                       "fitted slope is significantly non-positive" if flagged else "")


# -- measures and Borel transforms ------------------------------------------------------

class PreconditionError(ValueError):
    """The Lipschitz-type bound on the measure fails."""


@dataclass(frozen=True, eq=False)
class MeasureApprox:
    """Probability measure given by atoms or by a piecewise-constant density.

    ``lipschitz_C`` optionally records a constant with
    mu([E - eps, E + eps]) <= C eps; ``certified_range`` is the eps range on
    which it was checked.
    """
    kind: str
    locations: np.ndarray = None
    weights: np.ndarray = None
    edges: np.ndarray = None
    density: np.ndarray = None
    lipschitz_C: float | None = None
    certified_range: tuple | None = None

    @classmethod
    def from_atoms(cls, locations, weights, lipschitz_C=None) -> "MeasureApprox":
        x = np.asarray(locations, dtype=float)
        w = np.asarray(weights, dtype=float)
        if x.shape != w.shape or x.ndim != 1 or len(x) == 0:
            raise ValueError("locations and weights must be equal-length 1-d arrays")
        if np.any(w <= 0):
            raise ValueError("atom weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        o = np.argsort(x)
        return cls("atoms", locations=x[o], weights=w[o], lipschitz_C=lipschitz_C)

    @classmethod
    def from_density(cls, edges, density, lipschitz_C=None, normalize=False) -> "MeasureApprox":
        e = np.asarray(edges, dtype=float)
        r = np.asarray(density, dtype=float)
        if e.ndim != 1 or len(e) != len(r) + 1 or np.any(np.diff(e) <= 0):
            raise ValueError("edges must be increasing with len(density) + 1 entries")
        if np.any(r < 0):
            raise ValueError("density must be non-negative")
        mass = float(np.sum(r * np.diff(e)))
        if normalize:
            r = r / mass
        elif abs(mass - 1.0) > 1e-12:
            raise ValueError(f"density integrates to {mass!r}, not 1")
        return cls("density", edges=e, density=r, lipschitz_C=lipschitz_C)

    @classmethod
    def from_cdf(cls, cdf, edges, lipschitz_C=None) -> "MeasureApprox":
        """Piecewise-constant density carrying the exact cell masses of ``cdf``."""
        e = np.asarray(edges, dtype=float)
        F = np.asarray(cdf(e), dtype=float)
        return cls.from_density(e, np.diff(F) / np.diff(e), lipschitz_C, normalize=True)

    @classmethod
    def histogram(cls, values, bins) -> "MeasureApprox":
        counts, e = np.histogram(np.asarray(values, dtype=float), bins=bins)
        return cls.from_density(e, counts / (counts.sum() * np.diff(e)), normalize=True)

    def with_C(self, C: float, certified_range=None) -> "MeasureApprox":
        return MeasureApprox(self.kind, self.locations, self.weights, self.edges, self.density,
                             float(C), certified_range)

    @property
    def total_mass(self) -> float:
        if self.kind == "atoms":
            return float(self.weights.sum())
        return float(np.sum(self.density * np.diff(self.edges)))

    def mass(self, a: float, b: float) -> float:
        """mu([a, b])."""
        if self.kind == "atoms":
            i0 = np.searchsorted(self.locations, a, side="left")
            i1 = np.searchsorted(self.locations, b, side="right")
            return float(self.weights[i0:i1].sum())
        lo = np.clip(self.edges[:-1], a, b)
        hi = np.clip(self.edges[1:], a, b)
        return float(np.sum(self.density * (hi - lo)))


def borel_transform(measure: MeasureApprox, z: complex) -> complex:
    """B(z) = int mu(de) / (e - z), so that Im B(E + i delta) is the positive
    Poisson integral int mu(de) delta / ((e - E)^2 + delta^2)."""
    z = complex(z)
    if not z.imag > 0:
        raise ValueError("Im z must be positive")
    if measure.kind == "atoms":
        return complex(np.sum(measure.weights / (measure.locations - z)))
    e, r = measure.edges, measure.density
    # int_a^b de / (e - z) = log(b - z) - log(a - z); Im(e - z) < 0 keeps off the cut
    L = np.log(e.astype(complex) - z)
    return complex(np.sum(r * (L[1:] - L[:-1])))


def _F(u, d):
    """Antiderivative of arctan(u / d) in u."""
    return u * np.arctan(u / d) - 0.5 * d * np.log1p((u / d) ** 2) - d * np.log(d)


def borel_strip_integral(measure: MeasureApprox, E: float, eps0: float, delta: float) -> float:
    """int_0^eps0 Im B(E + eps + i delta) d eps in closed form.

    For a point e the inner integral is arctan((e - E)/delta) - arctan((e - E - eps0)/delta).
    """
    if not delta > 0 or not eps0 > 0:
        raise ValueError("delta and eps0 must be positive")
    if measure.kind == "atoms":
        u = measure.locations - E
        return float(np.sum(measure.weights * (np.arctan(u / delta)
                                               - np.arctan((u - eps0) / delta))))
    a, b = measure.edges[:-1] - E, measure.edges[1:] - E
    cell = (_F(b, delta) - _F(a, delta)) - (_F(b - eps0, delta) - _F(a - eps0, delta))
    return float(np.sum(measure.density * cell))


def _eps_grid(C: float, eps_min: float) -> np.ndarray:
    top = 1.0 / C    # beyond this mu <= 1 <= C eps holds trivially
    k = max(int(math.ceil(math.log2(top / eps_min))), 0)
    g = top * 2.0 ** -np.arange(k + 1)
    return np.unique(np.append(g[g >= eps_min], eps_min))


def certify_lipschitz(measure: MeasureApprox, E: float, eps_min: float = EPS_MIN,
                      eps_max: float = 1e3, per_octave: int = 4) -> float:
    """Largest mu([E - eps, E + eps]) / eps over a log grid in [eps_min, eps_max]."""
    n = int(math.ceil(math.log2(eps_max / eps_min) * per_octave)) + 1
    eps = eps_min * 2.0 ** (np.arange(n) / per_octave)
    return float(max(measure.mass(E - e, E + e) / e for e in eps))


def check_borel_bounds(measure: MeasureApprox, E: float, lipschitz_C: float | None,
                       delta_list: Sequence[float], eps0_list: Sequence[float],
                       eps_min: float = EPS_MIN) -> list[BoundReport]:
    """Im B(E + i delta) < (pi/2) C and int_0^eps0 Im B(E + eps + i delta) < pi^2 C eps0.

    The hypothesis mu([E - eps, E + eps]) <= C eps is first verified on the
    dyadic grid eps = 2^-k / C down to ``eps_min``; smaller scales are not
    checked.  A failure raises ``PreconditionError`` naming the interval.
    """
    C = lipschitz_C if lipschitz_C is not None else measure.lipschitz_C
    if C is None:
        raise PreconditionError("no Lipschitz constant given or recorded for the measure")
    if not C > 0:
        raise PreconditionError(f"Lipschitz constant must be positive, got {C!r}")
    for e in _eps_grid(C, eps_min):
        m = measure.mass(E - e, E + e)
        if m > C * e * (1.0 + 1e-12):
            raise PreconditionError(
                f"mu([{E - e:.6g}, {E + e:.6g}]) = {m:.6g} exceeds C*eps = {C * e:.6g}")
    out = []
    tag = f"E={E:g} C={C:g} certified eps>={eps_min:g}"
    for d in delta_list:
        b = borel_transform(measure, E + 1j * d)
        out.append(_report("borel_pointwise", f"{tag} delta={d:g}", b.imag,
                           0.5 * math.pi * C, z=E + 1j * d, rtol=0.0))
        for e0 in eps0_list:
            s = borel_strip_integral(measure, E, e0, d)
            out.append(_report("borel_integrated", f"{tag} delta={d:g} eps0={e0:g}", s,
                               math.pi ** 2 * C * e0, z=E + 1j * d, rtol=0.0))
    # strict inequalities
    return [r if r.lhs < r.rhs else BoundReport(r.bound_kind, r.instance, r.lhs, r.rhs, False,
                                                 r.margin, r.N, r.z) for r in out]
