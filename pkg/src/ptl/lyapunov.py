"""Monte-Carlo Lyapunov exponents and large-deviation event frequencies."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from . import kernels
from .model import PolymerSpec, sample_realization
from .parallel import pmap

__all__ = [
    "LyapunovEstimate",
    "DFit",
    "EventProbability",
    "lyapunov",
    "uniform_upper_rate",
    "fit_D",
    "wilson_interval",
    "event_probability",
    "calibrate_c4",
    "uniform_bounded_grid",
    "corollary_expectation",
]

WILSON_Z = 1.959963984540054
# the pruned hyperboloid search is accurate while ||T|| stays below about e^8
HYPERBOLOID_MAX_LOG = 8.0


@dataclass(frozen=True)
class LyapunovEstimate:
    z: complex
    gamma: float
    stderr: float
    N: int
    samples: int
    values: np.ndarray = field(repr=False)
    estimator: str = "two_sided"


def uniform_upper_rate(spec: PolymerSpec, z: complex) -> float:
    """gamma_1 = max over block sites of log ||single-site transfer matrix||_F."""
    best = 0.0
    for s in (1, -1):
        t, v = spec.block(s)
        for tj, vj in zip(t, v):
            m = np.array([[(z - vj) / tj, -tj], [1.0 / tj, 0.0]])
            best = max(best, math.log(float(np.linalg.norm(m))))
    return best


def _sample_rate(spec, z, N, seed, i, estimator, burn_in):
    r = sample_realization(spec, seed, i, N)
    o = r.window
    if estimator == "plain":
        m, s = kernels.chain_product(complex(z), r.v, r.t, o, o + N)
        return (math.log(float(np.linalg.norm(m))) + s) / N
    n0 = int(burn_in * N)
    cps = np.array([n0, N], dtype=np.int64)
    fwd = kernels.vector_growth(complex(z), r.v, r.t, o, cps, 1.0, 0.0, 1)
    bwd = kernels.vector_growth(complex(z), r.v, r.t, o, cps, 1.0, 0.0, -1)
    return 0.5 * ((fwd[1] - fwd[0]) + (bwd[1] - bwd[0])) / (N - n0)


def lyapunov(spec: PolymerSpec, z: complex, N: int, samples: int, seed: int, *,
             estimator: str = "two_sided", burn_in: float = 0.1,
             threads: int | None = None) -> LyapunovEstimate:
    """Disorder-averaged growth rate of the transfer cocycle.

    ``two_sided`` (default) follows a vector to the right and a row vector to
    the left of the origin and averages the growth rates over sites
    [burn_in*N, N]; dropping the first stretch removes the O(1/N) bias of the
    initial condition, which matters where gamma is small.  ``plain`` is
    (1/N) log ||T(N, 0)||_F.
    """
    if N < 10 * spec.correlation_length:
        raise ValueError(f"N = {N} must be >= 10 * correlation length")
    if estimator not in ("two_sided", "plain"):
        raise ValueError(f"unknown estimator {estimator!r}")
    if not 0.0 <= burn_in < 1.0:
        raise ValueError("burn_in must lie in [0, 1)")
    vals = np.array(pmap(lambda i: _sample_rate(spec, z, N, seed, i, estimator, burn_in),
                         range(samples), threads))
    se = float(vals.std(ddof=1) / math.sqrt(samples)) if samples > 1 else float("nan")
    return LyapunovEstimate(complex(z), float(vals.mean()), se, int(N), int(samples),
                            vals, estimator)


@dataclass(frozen=True)
class DFit:
    D_hat: float
    D_stderr: float
    cubic: float
    cubic_stderr: float
    epsilons: np.ndarray
    gammas: np.ndarray
    stderrs: np.ndarray
    ratios: np.ndarray
    ratio_spread: float
    flagged: bool
    message: str = ""


def fit_D(spec: PolymerSpec, E_c: float, epsilons: Sequence[float], N: int, samples: int,
          seed: int, *, threads: int | None = None, burn_in: float = 0.1) -> DFit:
    """Weighted fit gamma(E_c + eps) = D eps^2 + c eps^3.

    The same realizations are used at every eps.  ``ratio_spread`` is
    max/min - 1 of gamma/eps^2 over the grid.
    """
    eps = np.asarray(epsilons, dtype=float)
    if np.any(eps <= 0):
        raise ValueError("epsilons must be positive")
    if eps.max() / eps.min() < 10.0 * (1 - 1e-12):
        raise ValueError("epsilons must span at least one decade")
    ests = [lyapunov(spec, E_c + e, N, samples, seed, threads=threads, burn_in=burn_in)
            for e in eps]
    g = np.array([e.gamma for e in ests])
    se = np.array([e.stderr for e in ests])
    w = 1.0 / np.maximum(se, 1e-300)
    A = np.stack([eps ** 2, eps ** 3], axis=1) * w[:, None]
    coef, *_ = np.linalg.lstsq(A, g * w, rcond=None)
    cov = np.linalg.inv(A.T @ A)
    D, c = coef
    Dse, cse = np.sqrt(np.diag(cov))
    ratios = g / eps ** 2
    spread = float(ratios.max() / ratios.min() - 1.0) if ratios.min() > 0 else float("inf")
    flagged = bool(D <= 0 and abs(D) > 2 * Dse)
    msg = "fitted D is significantly non-positive" if flagged else ""
    return DFit(float(D), float(Dse), float(c), float(cse), eps, g, se, ratios, spread,
                flagged, msg)


# -- large-deviation events --------------------------------------------------

def wilson_interval(k: int, n: int, z: float = WILSON_Z) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    p = k / n
    den = 1.0 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    # the limits are exactly 0 and 1 at k = 0 and k = n
    lo = 0.0 if k == 0 else max(0.0, mid - half)
    hi = 1.0 if k == n else min(1.0, mid + half)
    return lo, hi


@dataclass(frozen=True)
class EventProbability:
    event_kind: str
    z: complex
    N: int
    log_threshold: float
    count: int
    samples: int
    p_hat: float
    wilson_interval: tuple
    description: str = ""


def uniform_bounded_grid(E_c: float, N: int, alpha: float, c5: float,
                         n_eps: int = 5, n_delta: int = 2) -> np.ndarray:
    """Complex energies E_c + eps + i delta probing the set of uniform boundedness.

    eps runs over [-N^{-1/2-alpha}, N^{-1/2-alpha}], delta over [0, c5/N];
    negative delta is covered by complex conjugation.
    """
    em = N ** (-0.5 - alpha)
    e = np.linspace(-em, em, n_eps) if n_eps > 1 else np.zeros(1)
    d = np.linspace(0.0, c5 / N, n_delta) if n_delta > 1 else np.zeros(1)
    return np.array([E_c + x + 1j * y for x in e for y in d])


def _event(spec, kind, z, N, log_thr, seed, i, grid):
    r = sample_realization(spec, seed, i, N)
    o = r.window
    if kind == "norm_exceeds":
        m, s = kernels.chain_product(complex(z), r.v, r.t, o, o + N)
        return 2.0 * (math.log(float(np.linalg.norm(m))) + s) >= log_thr
    if kind == "running_max_exceeds":
        ln = kernels.running_log_norms(complex(z), r.v, r.t, o, N, 1)
        return 2.0 * float(ln.max()) >= log_thr
    for zz in grid:
        if log_thr > HYPERBOLOID_MAX_LOG:
            if kernels.max_pair_log_norm(complex(zz), r.v, r.t, o, N) > log_thr:
                return False
            continue
        X, ok = kernels.hyperboloid_points(complex(zz), r.v, r.t, o, N, log_thr)
        if not ok or kernels.pair_max_exceeds(X, log_thr):
            return False
    return True


def event_probability(spec: PolymerSpec, event_kind: str, z: complex, N: int,
                      threshold: float, samples: int, seed: int, *,
                      alpha: float = 0.25, c5: float = 1.0, n_eps: int = 5,
                      n_delta: int = 2, threads: int | None = None) -> EventProbability:
    """Empirical frequency of a transfer-matrix growth event.

    norm_exceeds:        ||T(N,0)||^2 >= exp(threshold)
    running_max_exceeds: max_{0<=n<=N} ||T(n,0)||^2 >= exp(threshold)
    uniform_bounded:     max_{0<=n,m<=N} ||T(n,m)|| <= exp(threshold) at every
                         energy of ``uniform_bounded_grid(Re z, N, alpha, c5)``
    """
    if event_kind not in ("norm_exceeds", "running_max_exceeds", "uniform_bounded"):
        raise ValueError(f"unknown event kind {event_kind!r}")
    grid = None
    desc = f"log threshold {threshold:.6g}"
    if event_kind == "uniform_bounded":
        grid = uniform_bounded_grid(complex(z).real, N, alpha, c5, n_eps, n_delta)
        desc = (f"max log||T(n,m)|| <= {threshold:.6g}, alpha={alpha}, c5={c5}, "
                f"grid {n_eps}x{n_delta}")
    hits = pmap(lambda i: _event(spec, event_kind, z, N, threshold, seed, i, grid),
                range(samples), threads)
    k = int(sum(bool(h) for h in hits))
    return EventProbability(event_kind, complex(z), int(N), float(threshold), k, int(samples),
                            k / samples, wilson_interval(k, samples), desc)


def calibrate_c4(spec: PolymerSpec, E_c: float, N: int, samples: int, seed: int, *,
                 alpha: float = 0.25, c5: float = 1.0, quantile: float = 0.5,
                 n_eps: int = 5, n_delta: int = 2, threads: int | None = None) -> float:
    """Quantile over samples of max over the probe grid of max log||T(n,m)||."""
    grid = uniform_bounded_grid(E_c, N, alpha, c5, n_eps, n_delta)

    def one(i):
        r = sample_realization(spec, seed, i, N)
        best = 0.0
        for zz in grid:
            best = max(best, kernels.max_pair_log_norm(complex(zz), r.v, r.t, r.window, N))
        return best

    vals = np.array(pmap(one, range(samples), threads))
    return float(np.quantile(vals, quantile))


def corollary_expectation(spec: PolymerSpec, z: complex, N: int, samples: int, seed: int,
                          *, log: bool = False, threads: int | None = None) -> float:
    """Mean of 1 / max_{0<=|n|<=N} ||T(n,0)||^2 (or its log with ``log=True``)."""
    def one(i):
        r = sample_realization(spec, seed, i, N)
        o = r.window
        f = kernels.running_log_norms(complex(z), r.v, r.t, o, N, 1)
        b = kernels.running_log_norms(complex(z), r.v, r.t, o, N, -1)
        return 2.0 * max(float(f.max()), float(b.max()))

    m = np.array(pmap(one, range(samples), threads))
    lm = float(logsumexp(-m) - math.log(samples))
    return lm if log else math.exp(lm)
