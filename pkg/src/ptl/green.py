"""Green's functions on finite windows and checks of resolvent inequalities."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import solve_banded

from . import kernels
from .model import JacobiWindow, Realization, materialize
from .transfer import cocycle

__all__ = [
    "GreenColumn",
    "BoundReport",
    "green_column",
    "halfline_green",
    "window_policy",
    "check_cramer",
    "check_combes_thomas",
    "check_transfer_green_bounds",
]

BOUND_RTOL = 1e-8
CRAMER_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class GreenColumn:
    """G^z(source, n) for n = lo..hi on a Dirichlet window."""
    z: complex
    values: np.ndarray = field(repr=False)
    lo: int
    hi: int
    source: int
    truncation_error_bound: float
    residual: float

    @property
    def half_width(self) -> int:
        return max(self.source - self.lo, self.hi - self.source)

    def at(self, n: int) -> complex:
        return complex(self.values[n - self.lo])

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1)


@dataclass(frozen=True)
class BoundReport:
    bound_kind: str
    instance: str
    lhs: float
    rhs: float
    satisfied: bool
    margin: float
    N: int = -1
    z: complex = 0j


def _report(kind, instance, lhs, rhs, N=-1, z=0j, rtol=BOUND_RTOL):
    ok = bool(lhs <= rhs * (1.0 + rtol))
    margin = (rhs - lhs) / rhs if rhs > 0 and math.isfinite(rhs) else float("inf")
    return BoundReport(kind, instance, float(lhs), float(rhs), ok, float(margin), int(N), complex(z))


def _report_log(kind, instance, lhs, log_rhs, N=-1, z=0j, rtol=BOUND_RTOL):
    """As ``_report`` with the rhs given by its logarithm (no underflow)."""
    if lhs <= 0.0:
        return BoundReport(kind, instance, float(lhs), math.exp(log_rhs), True, 1.0, int(N), complex(z))
    gap = log_rhs - math.log(lhs)
    ok = bool(gap >= -math.log1p(rtol))
    return BoundReport(kind, instance, float(lhs), math.exp(log_rhs), ok, float(-math.expm1(-gap)),
                       int(N), complex(z))


def window_policy(T: float, t_max: float, N_request: int = 0) -> int:
    """Half-width max(4 T ||t||, 2 N_request) used for truncated full-line solves."""
    return int(max(math.ceil(4.0 * T * t_max), 2 * int(N_request), 1))


def _solve(window: JacobiWindow, z: complex, source: int) -> tuple[np.ndarray, float]:
    ab = window.to_banded(z)
    rhs = np.zeros(window.size, dtype=np.complex128)
    rhs[window.position(source)] = 1.0
    if window.size == 1:
        x = rhs / ab[1]
    else:
        x = solve_banded((1, 1), ab, rhs, check_finite=False)
    # residual of (H - z) x = e_source
    r = (window.v - z) * x - rhs
    od = window.offdiag
    r[:-1] += od * x[1:]
    r[1:] += od * x[:-1]
    scale = max(float(np.max(np.abs(ab))) * float(np.max(np.abs(x))), 1.0)
    return x, float(np.max(np.abs(r)) / scale)


def _ct_rate(Delta: float, t_max: float) -> float:
    return math.asinh(Delta / (4.0 * t_max))


def _column(window: JacobiWindow, z: complex, source: int) -> GreenColumn:
    if not complex(z).imag > 0:
        raise ValueError(f"Im z must be positive, got z = {z!r}")
    if not window.lo <= source <= window.hi:
        raise IndexError(f"source {source} outside window {window.lo}..{window.hi}")
    x, res = _solve(window, z, source)
    Delta = complex(z).imag
    tmax = float(np.max(window.t)) if window.size else 1.0
    edge = min(source - window.lo, window.hi - source) + 1
    bound = 2.0 / Delta * math.exp(-_ct_rate(Delta, tmax) * edge)
    return GreenColumn(complex(z), x, window.lo, window.hi, source, bound, res)


def green_column(window: JacobiWindow, z: complex, source: int = 0) -> GreenColumn:
    """Column of (H_window - z)^{-1} through ``source`` by banded LU.

    ``truncation_error_bound`` is the Combes-Thomas bound on |G(source, n)| at
    the first site outside the window, with Delta = Im z.
    """
    return _column(window, z, source)


def halfline_green(window: JacobiWindow, z: complex) -> GreenColumn:
    """Same with a Dirichlet cut between sites -1 and 0."""
    if window.hi < 0:
        raise IndexError("window has no site >= 0")
    return _column(window.sub(max(window.lo, 0), window.hi), z, 0)


# -- Cramer identities ------------------------------------------------------------

def _rel_err_log(G: complex, log_pred: complex) -> float:
    """|G / exp(log_pred) - 1| without forming exp(log_pred)."""
    if G == 0:
        return float("inf")
    return abs(cmath.exp(cmath.log(G) - log_pred) - 1.0)


def check_cramer(realization: Realization, z: complex, N: int) -> list[BoundReport]:
    """Box Green's functions on sites 0..N (and 0..N-1) against T(N+1, 0) entries.

    With T(N+1,0) = [[a, b], [c, d]]:
      G_N(0,0) = b/(t0^2 a), G_N(N,N) = -c/a, G_{N-1}(0,0) = d/(t0^2 c),
      G_N(0,N) = -1/(t0 a), G_{N-1}(0,N-1) = -1/(t0 t_N c).
    Reported lhs is the relative error, rhs the tolerance.
    """
    if N < 0 or N + 1 > realization.window:
        raise IndexError(f"N = {N} does not fit in window {realization.window}")
    W = materialize(realization)
    t0 = float(realization.t_at(0))
    tN = float(realization.t_at(N))
    A = cocycle(realization, z, N + 1, 0)
    a, b, c, d = (complex(x) for x in A.m.ravel())
    s = A.log_scale
    box = W.sub(0, N)
    g0 = _solve(box, z, 0)[0]
    gN = _solve(box, z, N)[0]
    checks = [
        ("G_N(0,0) = b/(t0^2 a)", complex(g0[0]), cmath.log(b / (t0 * t0 * a))),
        ("G_N(N,N) = -c/a", complex(gN[N]), cmath.log(-c / a)),
        ("G_N(0,N) = -1/(t0 a)", complex(g0[N]), -cmath.log(-t0 * a) - s),
    ]
    if N >= 1:
        box1 = W.sub(0, N - 1)
        h0 = _solve(box1, z, 0)[0]
        checks += [
            ("G_{N-1}(0,0) = d/(t0^2 c)", complex(h0[0]), cmath.log(d / (t0 * t0 * c))),
            ("G_{N-1}(0,N-1) = -1/(t0 t_N c)", complex(h0[N - 1]),
             -cmath.log(-t0 * tN * c) - s),
        ]
    tag = f"seed={realization.seed} sample={realization.sample_index}"
    return [_report("cramer", f"{name}; {tag}", _rel_err_log(G, lp), CRAMER_RTOL, N, z, rtol=0.0)
            for name, G, lp in checks]


# -- Combes-Thomas -------------------------------------------------------------------

def _dist_to_spectrum(z: complex, window: JacobiWindow, spectrum_bracket) -> float:
    if spectrum_bracket is not None:
        lo, hi = spectrum_bracket
        dx = max(lo - z.real, 0.0, z.real - hi)
        return math.hypot(dx, z.imag)
    ev = window.eigenvalues
    return float(np.min(np.abs(ev - z)))


def check_combes_thomas(window: JacobiWindow, z: complex,
                        spectrum_bracket: tuple[float, float] | None = None) -> BoundReport:
    """|G(0,n)| <= (2/Delta) exp(-asinh(Delta / (4 ||t||)) |n|) for all n.

    Delta is the distance from z to the window's eigenvalues, or to
    ``spectrum_bracket`` when one is given (a smaller Delta only weakens the
    bound).  The report carries the worst site.
    """
    z = complex(z)
    Delta = _dist_to_spectrum(z, window, spectrum_bracket)
    if not Delta > 0:
        raise ValueError("z lies on the spectrum (Delta = 0)")
    if not window.lo <= 0 <= window.hi:
        raise IndexError("window must contain site 0")
    x, _ = _solve(window, z, 0)
    tmax = float(np.max(window.offdiag)) if window.size > 1 else float(window.t[0])
    n = np.abs(np.arange(window.lo, window.hi + 1))
    # compare in logs: far sites are far below the double range in the bound
    log_rhs = math.log(2.0 / Delta) - _ct_rate(Delta, tmax) * n
    with np.errstate(divide="ignore"):
        log_lhs = np.log(np.abs(x))
    gap = log_rhs - log_lhs
    k = int(np.argmin(gap))
    ok = bool(np.all(log_lhs <= log_rhs + math.log1p(BOUND_RTOL)))
    margin = float(-math.expm1(-gap[k]))
    return BoundReport("combes_thomas", f"Delta={Delta:.6g} worst n={int(window.lo + k)}",
                       float(abs(x[k])), float(math.exp(log_rhs[k])), ok, margin, -1, z)


# -- transfer-matrix bounds on Green's function tails ----------------------------------

def _tail_sums(col: np.ndarray, dist: np.ndarray, N_list) -> np.ndarray:
    w = np.abs(col) ** 2
    return np.array([float(w[dist > N].sum()) for N in N_list])


def check_transfer_green_bounds(realization: Realization, z: complex,
                                N_list: Sequence[int]) -> list[BoundReport]:
    """Tail sums of the half-line and full-line Green's functions against

        4 tau^3 T^4 / max_{0<=n<=N} ||T(n,0)||^2   and
        16 tau^4 T^6 / max_{0<=|n|<=N} ||T(n,0)||^2   (T >= 1),

    with T = 1/Im z and tau = max(||t||^2, 1, ||1/t||^2) over the window.
    Tails are summed over the realization window; the change when the window
    is halved is added to the lhs as an estimate of the neglected remainder.

    The full-line form with a single maximum over both sides can fail when
    the two sides grow at very different rates, since each side's tail is
    only controlled by its own transfer matrices.  It is reported as
    ``fullline_transfer``; ``fullline_transfer_sided`` checks
    16 tau^4 T^6 (1/A_R + 1/A_L), with A_R, A_L the running maxima of the
    right chain and of the reflected left chain, which is what the half-line
    bound on each side yields.
    """
    z = complex(z)
    if not z.imag > 0:
        raise ValueError("Im z must be positive")
    T = 1.0 / z.imag
    N_list = [int(N) for N in N_list]
    Nmax = max(N_list)
    W = materialize(realization)
    tmax = float(W.t.max())
    need = window_policy(T, tmax, Nmax)
    if realization.window < need:
        raise ValueError(f"window {realization.window} below policy {need} for T={T:g}, N={Nmax}")
    tau = max(tmax ** 2, 1.0, 1.0 / float(W.t.min()) ** 2)
    M, M2 = realization.window, realization.window // 2
    if M2 <= Nmax:
        M2 = Nmax + 1

    def half(hi):
        x, _ = _solve(W.sub(0, hi), z, 0)
        return _tail_sums(x, np.arange(0, hi + 1), N_list)

    def full(h):
        x, _ = _solve(W.sub(-h, h), z, 0)
        return _tail_sums(x, np.abs(np.arange(-h, h + 1)), N_list)

    o = realization.window
    fwd = 2.0 * kernels.running_log_norms(z, realization.v, realization.t, o, Nmax, 1)
    bwd = 2.0 * kernels.running_log_norms(z, realization.v, realization.t, o, Nmax, -1)
    h1, h2 = half(M), half(M2)
    tag = f"seed={realization.seed} sample={realization.sample_index}"
    out = []
    for i, N in enumerate(N_list):
        lhs = h1[i] + abs(h1[i] - h2[i])
        log_den = float(fwd[: N + 1].max())
        log_rhs = math.log(4.0 * tau ** 3 * T ** 4) - log_den
        out.append(_report_log("halfline_transfer", tag, lhs, log_rhs, N, z))
    if T >= 1.0:
        f1, f2 = full(M), full(M2)
        # the left half-line read outward from site 0
        v, t = realization.v, realization.t
        vl = v[o::-1]
        tl = np.concatenate([t[o + 1:o + 2], t[o::-1]])
        left = 2.0 * kernels.running_log_norms(z, vl, tl, 0, Nmax, 1)
        c = math.log(16.0 * tau ** 4 * T ** 6)
        for i, N in enumerate(N_list):
            lhs = f1[i] + abs(f1[i] - f2[i])
            aR, aL = float(fwd[: N + 1].max()), float(left[: N + 1].max())
            log_den = max(aR, float(bwd[: N + 1].max()))
            out.append(_report_log("fullline_transfer", tag, lhs, c - log_den, N, z))
            out.append(_report_log("fullline_transfer_sided", tag, lhs,
                                   c + np.logaddexp(-aR, -aL), N, z))
    return out
