"""Time-averaged moments of the position operator and diffusion exponents.

Two routes compute

    M^q_T = sum_n |n|^q  int dE/(pi T) |G^{E + i/T}(0, n)|^2

for a wavepacket started at the origin (Abelian time average with weight
(2/T) exp(-2t/T)):

* ``green``: energy quadrature of the Green's function.  For each energy the
  decaying solutions to the right and to the left of the origin are obtained
  by one backward sweep each (``kernels.side_sums``), and G(0, n) follows from
  their ratio.  On an infinite chain the sweep length is chosen adaptively
  per batch of energies; on a Dirichlet window it is the window itself.
* ``spectral``: exact closed form from the eigenpairs of a Dirichlet window.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal

from . import kernels
from .model import PolymerSpec, Realization, sample_realization
from .parallel import pmap

__all__ = [
    "QuadratureRule",
    "MomentTable",
    "ExponentFit",
    "PartialMoment",
    "DecompositionReport",
    "energy_rule",
    "default_energy_window",
    "moments_green",
    "moments_spectral",
    "partial_moments",
    "fit_exponents",
    "predicted_beta",
    "decomposition_scan",
]

R_MIN = 64
BATCH = 128
CAP_FACTOR = 40.0          # adaptive sweeps never exceed CAP_FACTOR * T * ||t|| sites
DEFECT_LIMIT = 1e-2


def predicted_beta(q: float) -> float:
    """max{0, 1 - 1/(2q)}."""
    return max(0.0, 1.0 - 1.0 / (2.0 * q))


def default_energy_window(spec: PolymerSpec, margin: float = 0.5) -> tuple[float, float]:
    lo, hi = spec.spectrum_bracket()
    return lo - margin, hi + margin


# -- energy quadrature ---------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureRule:
    """Energy nodes and weights; the 1/(pi T) factor is not included."""
    nodes: np.ndarray
    weights: np.ndarray
    groups: tuple  # slices of nodes sharing a sweep schedule


def _trapezoid(a: float, b: float, h: float) -> tuple[np.ndarray, np.ndarray]:
    if b <= a:
        return np.empty(0), np.empty(0)
    n = max(int(math.ceil((b - a) / h)), 1)
    x = np.linspace(a, b, n + 1)
    w = np.full(n + 1, (b - a) / n)
    w[0] *= 0.5
    w[-1] *= 0.5
    return x, w


def _tail(edge: float, direction: int, n: int, scale: float) -> tuple[np.ndarray, np.ndarray]:
    s, ws = np.polynomial.legendre.leggauss(n)
    s = 0.5 * (s + 1.0)
    ws = 0.5 * ws
    x = edge + direction * scale * s / (1.0 - s)
    w = ws * scale / (1.0 - s) ** 2
    return x, w


def energy_rule(T: float, E0: float, E1: float, *, points_per_width: float = 8.0,
                anchors: tuple[float, float] | None = None, tail_nodes: int = 32,
                tail_scale: float = 1.0) -> QuadratureRule:
    """Energy quadrature for int_{E0}^{E1} dE f(E) with f of resolution 1/T.

    Finite stretches get the trapezoid rule with step 1/(points_per_width T).
    An infinite endpoint is split at the corresponding ``anchors`` value (the
    spectrum bracket plus margin): the finite stretch up to the anchor is
    handled as above and the remaining half-line by a Gauss-Legendre rule in
    s with E = anchor +- tail_scale * s / (1 - s).  The 1/(pi T) factor is not
    included in the weights.
    """
    h = 1.0 / (points_per_width * T)
    xs, ws, groups = [], [], []
    a, b = E0, E1
    if math.isinf(a) or math.isinf(b):
        if anchors is None:
            raise ValueError("infinite energy limits need finite anchors")
    start = 0
    if math.isinf(a):
        x, w = _tail(anchors[0], -1, tail_nodes, tail_scale)
        order = np.argsort(x)
        xs.append(x[order])
        ws.append(w[order])
        groups.append(slice(start, start + len(x)))
        start += len(x)
        a = anchors[0]
    hi = anchors[1] if math.isinf(b) else b
    x, w = _trapezoid(a, hi, h)
    if len(x):
        xs.append(x)
        ws.append(w)
        groups.append(slice(start, start + len(x)))
        start += len(x)
    if math.isinf(b):
        x, w = _tail(anchors[1], 1, tail_nodes, tail_scale)
        xs.append(x)
        ws.append(w)
        groups.append(slice(start, start + len(x)))
        start += len(x)
    if not xs:
        return QuadratureRule(np.empty(0), np.empty(0), ())
    return QuadratureRule(np.concatenate(xs), np.concatenate(ws), tuple(groups))


# -- weights over sites ------------------------------------------------------------------

@dataclass(frozen=True)
class _Rows:
    """Site weights W[row, n] for n = 0..R_cap and the weight of n = 0."""
    W: np.ndarray
    w0: np.ndarray
    n_check: int    # rows [0, n_check) drive the adaptive sweep length


def _rows(q_list: Sequence[float], R_cap: int, ranges=None) -> _Rows:
    """Row 0 is the q-independent sum rule, then one row per q.

    ``ranges`` optionally gives (lo, hi) per q: weight n^q only for
    lo < n <= hi (lo < 0 includes n = 0).  Unrestricted copies are then
    appended up front so that convergence is always judged on full sums.
    """
    n = np.arange(R_cap + 1, dtype=float)
    rows, w0 = [np.ones_like(n)], [1.0]
    qs = list(q_list)
    for q in qs:
        rows.append(n ** q)
        w0.append(0.0 if q > 0 else 1.0)
    n_check = len(rows)
    if ranges is not None:
        for q, (lo, hi) in zip(qs, ranges):
            mask = (n > lo) & (n <= hi)
            rows.append(np.where(mask, n ** q, 0.0))
            w0.append((0.0 if q > 0 else 1.0) if lo < 0 else 0.0)
    W = np.stack(rows)
    W[:, 0] = 0.0
    return _Rows(np.ascontiguousarray(W), np.array(w0), n_check)


# -- one realization, one T ---------------------------------------------------------------

@dataclass
class _SideState:
    v: np.ndarray
    t: np.ndarray
    R: int
    R_cap: int


def _sweep(zr, zi, side: _SideState, W, n_check, tol, adaptive):
    """Run the side sweep, doubling its length until the outer half is negligible."""
    while True:
        R = side.R
        if adaptive:
            x = kernels.side_sums(zr, zi, side.v, side.t, R, W, R // 2, R // 4)
        else:
            x = kernels.side_sums(zr, zi, side.v, side.t, R, W, -1, -1)
        u0r, u0i, u1r, u1i, S, Sh, Sq = x
        if not adaptive:
            return x, 0.0
        Sc = S[:n_check]
        with np.errstate(invalid="ignore", divide="ignore"):
            # Sh, Sq hold the mass beyond R/2 and beyond R/4
            outer = np.where(Sc > 0, Sh[:n_check] / Sc, 0.0)
            inner = np.where(Sc > 0, (Sq[:n_check] - Sh[:n_check]) / Sc, 0.0)
        frac = float(outer.max())
        if frac <= tol or R >= side.R_cap:
            # next batch may start shorter when the (R/4, R/2] shell is also small
            if float(inner.max()) <= 0.25 * tol and R // 2 >= R_MIN:
                # back onto the R_MIN * 2^k ladder so the snapshots stay aligned
                side.R = R_MIN << max((R // 2 // R_MIN).bit_length() - 1, 0)
            return x, frac
        side.R = min(2 * R, side.R_cap)


def _green_one(real: Realization, T: float, rule: QuadratureRule, rows: _Rows, *,
               tol: float, adaptive: bool, R_fixed: int | None = None):
    """Weighted energy integrals for every row, plus diagnostics."""
    o = real.window
    v, t = real.v, real.t
    vr = np.ascontiguousarray(v[o:])
    tr = np.ascontiguousarray(t[o:])
    vl = np.ascontiguousarray(v[o::-1])
    # tl[k] is the hopping between sites -k and -k+1: tl[0] = t_1, tl[1] = t_0, ...
    tl = np.empty(o + 2)
    tl[0] = t[o + 1] if o + 1 < len(t) else 1.0
    tl[1:] = t[o::-1]
    v0, t1, t0 = float(v[o]), float(tl[0]), float(t[o])
    if adaptive:
        cap = min(real.window - 1, int(16 * math.ceil(CAP_FACTOR * T * real.spec.t_max / 16)))
        cap = max(cap - cap % 16, R_MIN)
        right = _SideState(vr, tr, R_MIN, cap)
        left = _SideState(vl, tl, R_MIN, cap)
    else:
        right = _SideState(vr, tr, R_fixed, R_fixed)
        left = _SideState(vl, tl, R_fixed, R_fixed)
    W = rows.W
    eta = 1.0 / T
    acc = np.zeros(W.shape[0])
    worst_frac = 0.0
    ward = 0.0
    for g in rule.groups:
        x_all, w_all = rule.nodes[g], rule.weights[g]
        for s in range(0, len(x_all), BATCH):
            zr = np.ascontiguousarray(x_all[s:s + BATCH])
            ww = w_all[s:s + BATCH]
            zi = np.full(len(zr), eta)
            (ar, ai, br, bi, SR, _, _), fR = _sweep(zr, zi, right, W, rows.n_check, tol, adaptive)
            (cr, ci, dr, di, SL, _, _), fL = _sweep(zr, zi, left, W, rows.n_check, tol, adaptive)
            worst_frac = max(worst_frac, fR, fL)
            uR0 = ar + 1j * ai
            uL0 = cr + 1j * ci
            mR = -(br + 1j * bi) / (t1 * uR0)
            mL = -(dr + 1j * di) / (t0 * uL0)
            z = zr + 1j * zi
            G00 = 1.0 / (v0 - z - t1 * t1 * mR - t0 * t0 * mL)
            g2 = np.abs(G00) ** 2
            f = g2 * (SR / np.abs(uR0) ** 2 + SL / np.abs(uL0) ** 2) + rows.w0[:, None] * g2
            acc += f @ ww
            # Ward identity: sum_n |G(0,n)|^2 = Im G(0,0) / eta
            wi = G00.imag / eta
            ward = max(ward, float(np.max(np.abs(f[0] - wi) / np.abs(wi))))
    return acc / (math.pi * T), worst_frac, ward


# -- tables ---------------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MomentTable:
    q_grid: np.ndarray
    T_grid: np.ndarray
    m: np.ndarray                 # (nq, nT) disorder average
    stderr: np.ndarray            # (nq, nT)
    route: str
    normalization_defect: np.ndarray   # (nT,) max over samples of |sum rule - 1|
    samples: int
    seed: int
    per_sample: np.ndarray = field(repr=False)   # (samples, nq, nT)
    sum_rule: np.ndarray = field(repr=False, default=None)   # (samples, nT)
    tail_fraction: np.ndarray = field(repr=False, default=None)
    ward_defect: np.ndarray = field(repr=False, default=None)

    @property
    def flagged(self) -> bool:
        return bool(np.any(self.normalization_defect > DEFECT_LIMIT))

    @classmethod
    def concatenate(cls, tables: Sequence["MomentTable"]) -> "MomentTable":
        """Pool tables computed on disjoint realization ranges of one seed."""
        t0 = tables[0]
        for t in tables[1:]:
            if (t.route != t0.route or t.seed != t0.seed
                    or not np.array_equal(t.q_grid, t0.q_grid)
                    or not np.array_equal(t.T_grid, t0.T_grid)):
                raise ValueError("tables differ in route, seed or grids")
        per = np.concatenate([t.per_sample for t in tables])

        def cat(name):
            parts = [getattr(t, name) for t in tables]
            return None if any(p is None for p in parts) else np.concatenate(parts)

        return _table(t0.q_grid, t0.T_grid, per, cat("sum_rule"), t0.route, len(per), t0.seed,
                      cat("tail_fraction"), cat("ward_defect"))


def _table(q, Ts, per, sums, route, samples, seed, tails=None, ward=None) -> MomentTable:
    m = per.mean(axis=0)
    se = per.std(axis=0, ddof=1) / math.sqrt(samples) if samples > 1 else np.zeros_like(m)
    defect = np.max(np.abs(sums - 1.0), axis=0)
    return MomentTable(np.asarray(q, float), np.asarray(Ts, float), m, se, route, defect,
                       int(samples), int(seed), per, sums, tails, ward)


def _green_window(spec: PolymerSpec, T_max: float, window: int | None) -> int:
    if window is not None:
        return int(window)
    cap = int(16 * math.ceil(CAP_FACTOR * T_max * spec.t_max / 16))
    return max(cap, R_MIN) + 2


def moments_green(spec: PolymerSpec, q_grid: Sequence[float], T_grid: Sequence[float],
                  samples: int, seed: int,
                  energy_window: tuple[float, float] | None = None, *,
                  window: int | None = None, points_per_width: float = 8.0,
                  tol: float = 1e-3, tails: bool = True, threads: int | None = None,
                  first_sample: int = 0) -> MomentTable:
    """Disorder average of M^q_T by energy quadrature of |G^{E+i/T}(0,n)|^2.

    With ``window=None`` the chain is infinite in effect: each energy batch
    sweeps as far out as needed for the outermost half of the swept sites to
    carry at most ``tol`` of every weighted sum.  With an integer ``window``
    the Dirichlet box [-window, window] is used as is.  ``energy_window``
    bounds the trapezoid part of the energy integral (default: spectrum
    bracket plus 0.5); with ``tails`` the two outer half-lines are added by a
    mapped Gauss-Legendre rule.  The same realizations serve every T.
    Realizations ``first_sample .. first_sample + samples - 1`` are used, so a
    long run can be split into chunks and pooled with ``MomentTable.concatenate``.
    """
    q_grid = [float(q) for q in q_grid]
    if any(q <= 0 for q in q_grid):
        raise ValueError("q must be positive")
    Ts = [float(T) for T in T_grid]
    ew = energy_window or default_energy_window(spec)
    adaptive = window is None
    Nw = _green_window(spec, max(Ts), window)
    rows = _rows(q_grid, Nw)
    nq, nT = len(q_grid), len(Ts)

    def one(i):
        real = sample_realization(spec, seed, i, Nw)
        out = np.empty((nq + 1, nT))
        tails_, wards = np.empty(nT), np.empty(nT)
        for k, T in enumerate(Ts):
            rule = energy_rule(T, -math.inf if tails else ew[0], math.inf if tails else ew[1],
                               points_per_width=points_per_width, anchors=ew)
            acc, frac, ward = _green_one(real, T, rule, rows, tol=tol, adaptive=adaptive,
                                         R_fixed=None if adaptive else Nw)
            out[:, k] = acc
            tails_[k], wards[k] = frac, ward
        return out, tails_, wards

    res = pmap(one, range(first_sample, first_sample + samples), threads)
    per = np.stack([r[0][1:] for r in res])
    sums = np.stack([r[0][0] for r in res])
    tails_ = np.stack([r[1] for r in res])
    wards = np.stack([r[2] for r in res])
    return _table(q_grid, Ts, per, sums, "green_integral", samples, seed, tails_, wards)


def moments_spectral(spec: PolymerSpec, q_grid: Sequence[float], T_grid: Sequence[float],
                     samples: int, seed: int, *, window: int = 500,
                     threads: int | None = None) -> MomentTable:
    """Exact Abelian time average on the Dirichlet box [-window, window].

    With A[n, j] = psi_j(n) psi_j(0) and a = 2/T,
        sum_t-average |<n|e^{-iHt}|0>|^2 = sum_{jk} A[n,j] A[n,k] a^2/(a^2 + (E_j - E_k)^2).
    """
    q_grid = [float(q) for q in q_grid]
    Ts = [float(T) for T in T_grid]
    if 2 * window + 1 > 4001:
        raise ValueError("window too large for dense eigendecomposition (> 4001 sites)")
    for T in Ts:
        need = math.ceil(4.0 * T * spec.t_max)
        if window < need:
            raise ValueError(f"window {window} too small for T = {T:g}: the ballistic front "
                             f"reaches the edge (need >= {need})")
    n = np.abs(np.arange(-window, window + 1)).astype(float)
    powers = np.stack([np.ones_like(n)] + [np.where(n > 0, n ** q, 0.0) for q in q_grid])

    def one(i):
        real = sample_realization(spec, seed, i, window)
        E, psi = eigh_tridiagonal(real.v, real.t[1:])
        A = psi * psi[window][None, :]
        out = np.empty((len(q_grid) + 1, len(Ts)))
        for k, T in enumerate(Ts):
            a = 2.0 / T
            K = a * a / (a * a + (E[:, None] - E[None, :]) ** 2)
            r = np.einsum("nj,nj->n", A @ K, A)
            out[:, k] = powers @ r
        return out

    res = pmap(one, range(samples), threads)
    per = np.stack([r[1:] for r in res])
    sums = np.stack([r[0] for r in res])
    return _table(q_grid, Ts, per, sums, "spectral_abelian", samples, seed)


# -- partial moments -------------------------------------------------------------------------

@dataclass(frozen=True)
class PartialMoment:
    value: float
    stderr: float
    per_sample: np.ndarray
    q: float
    T: float
    n_range: tuple
    E_range: tuple


def _n_range(T: float, alpha0: float, alpha1: float) -> tuple[float, float]:
    hi = math.inf if math.isinf(alpha1) else T ** alpha1
    lo = -1.0 if alpha0 == 0 else T ** alpha0
    return lo, hi


def _partial_many(spec, q, T, pieces, samples, seed, *, points_per_width, tol, threads,
                  energy_window=None, Nw=None):
    """Several (alpha0, alpha1, E0, E1) pieces at one (q, T) on shared realizations."""
    ew = energy_window or default_energy_window(spec)
    Nw = Nw or _green_window(spec, T, None)
    rules, ranges = [], []
    for a0, a1, E0, E1 in pieces:
        if not 0 <= a0 < a1:
            raise ValueError("need 0 <= alpha0 < alpha1")
        if E1 < E0:
            raise ValueError("need E0 <= E1")
        lo, hi = _n_range(T, a0, a1)
        ranges.append((lo, min(hi, float(Nw + 1))))
        rules.append(energy_rule(T, E0, E1, points_per_width=points_per_width, anchors=ew))

    rows_per_piece = [_rows([q], Nw, [rg]) for rg in ranges]

    def one(i):
        real = sample_realization(spec, seed, i, Nw)
        vals = []
        for rule, rows in zip(rules, rows_per_piece):
            if len(rule.nodes) == 0:
                vals.append(0.0)
                continue
            acc, _, _ = _green_one(real, T, rule, rows, tol=tol, adaptive=True)
            vals.append(acc[rows.n_check])
        return vals

    return np.array(pmap(one, range(samples), threads))


def partial_moments(spec: PolymerSpec, q: float, T: float, alpha0: float, alpha1: float,
                    E0: float, E1: float, samples: int, seed: int, *,
                    points_per_width: float = 8.0, tol: float = 1e-3,
                    threads: int | None = None) -> PartialMoment:
    """Restricted sum over T^alpha0 < |n| <= T^alpha1 (0 <= |n| when alpha0 = 0)
    and energies in [E0, E1]; infinite E limits and alpha1 are allowed."""
    per = _partial_many(spec, q, T, [(alpha0, alpha1, E0, E1)], samples, seed,
                        points_per_width=points_per_width, tol=tol, threads=threads)[:, 0]
    se = float(per.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return PartialMoment(float(per.mean()), se, per, float(q), float(T),
                         _n_range(T, alpha0, alpha1), (float(E0), float(E1)))


# -- exponents --------------------------------------------------------------------------------

@dataclass(frozen=True)
class ExponentFit:
    q: float
    beta_hat: float
    beta_minus: float
    beta_plus: float
    stderr: float
    T_range: tuple
    flagged: bool = False
    message: str = ""


def _slope(x, y):
    return float(np.polyfit(x, y, 1)[0])


def fit_exponents(table: MomentTable, fit_window: tuple[float, float] | None = None
                  ) -> list[ExponentFit]:
    """Least-squares slope of log M^q_T against log T^q, per q.

    beta_plus / beta_minus are the extreme slopes over sliding three-point
    windows.  The stderr is a jackknife over realizations when per-sample
    values are available.
    """
    Ts = table.T_grid
    sel = np.ones(len(Ts), bool)
    if fit_window is not None:
        sel = (Ts >= fit_window[0] * (1 - 1e-12)) & (Ts <= fit_window[1] * (1 + 1e-12))
    Tsel = Ts[sel]
    if len(Tsel) < 5 or math.log10(Tsel.max() / Tsel.min()) < 1.5 - 1e-9:
        raise ValueError("need >= 5 T points spanning >= 1.5 decades")
    x = np.log(Tsel)
    out = []
    for iq, q in enumerate(table.q_grid):
        M = table.m[iq, sel]
        if np.any(M <= 0):
            raise ValueError(f"non-positive moment for q = {q}")
        y = np.log(M)
        beta = _slope(x, y) / q
        loc = [_slope(x[i:i + 3], y[i:i + 3]) / q for i in range(len(x) - 2)]
        S = table.samples
        if table.per_sample is not None and S > 2:
            P = table.per_sample[:, iq, :][:, sel]
            tot = P.sum(axis=0)
            jk = np.array([_slope(x, np.log((tot - P[s]) / (S - 1))) / q for s in range(S)])
            se = float(math.sqrt((S - 1) / S * np.sum((jk - jk.mean()) ** 2)))
        else:
            r = y - np.polyval(np.polyfit(x, y, 1), x)
            se = float(math.sqrt(np.sum(r ** 2) / (len(x) - 2) / np.sum((x - x.mean()) ** 2))) / q
        se_m = table.stderr[iq, sel]
        drops = np.nonzero(np.diff(M) < -2.0 * np.hypot(se_m[1:], se_m[:-1]))[0]
        msg = ""
        if len(drops):
            msg = "M decreases in T beyond noise at T = " + ", ".join(
                f"{Tsel[i + 1]:g}" for i in drops)
        out.append(ExponentFit(float(q), float(beta), float(min(loc)), float(max(loc)), se,
                               (float(Tsel.min()), float(Tsel.max())), bool(len(drops)), msg))
    return out


# -- decomposition around a critical energy --------------------------------------------------

@dataclass(frozen=True)
class DecompositionReport:
    q: float
    alpha: float
    E_c: float
    eps0: float
    T_grid: np.ndarray
    central: np.ndarray
    main: np.ndarray
    boundary: np.ndarray
    remainder: np.ndarray       # energies outside [E_c, E_c + eps0], all n
    total: np.ndarray           # M^q_T on its own quadrature
    slopes: dict
    predicted: dict


def _predicted_pieces(q: float, alpha: float) -> dict:
    eta = min(q, 0.5)
    main = 6 * q * alpha + (q - 0.5 if q >= 0.5 else alpha * (2 * q - 1))
    return {"central": q - eta + alpha * q, "main": main, "boundary": 4 * alpha * q}


def _default_eps0(spec: PolymerSpec, E_c: float, seed: int, threads=None) -> float:
    from .lyapunov import lyapunov
    eps = np.array([0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5])
    g = np.array([lyapunov(spec, E_c + e, 20000, 16, seed, threads=threads).gamma for e in eps])
    D = float(np.mean(g[:3] / eps[:3] ** 2))
    ok = np.abs(g / (D * eps ** 2) - 1.0) < 0.2
    good = eps[ok]
    return float(good.max()) if len(good) else float(eps[0])


def decomposition_scan(spec: PolymerSpec, q: float, T_grid: Sequence[float], alpha: float,
                       samples: int, seed: int, *, E_c: float | None = None,
                       eps0: float | None = None, points_per_width: float = 8.0,
                       tol: float = 1e-3, threads: int | None = None) -> DecompositionReport:
    """Central, main and boundary pieces of M^q_T on [E_c, E_c + eps0].

    central:  |n| <= T^{1+alpha}, E in [E_c, E_c + T^{-eta}],   eta = min(q, 1/2)
    main:     all n,              E in [E_c + T^{-eta}, E_c + T^{-alpha}]
    boundary: |n| <= T^{1+alpha}, E in [E_c + T^{-alpha}, E_c + eps0]
    """
    from .transfer import find_critical_energies
    if E_c is None:
        crit = find_critical_energies(spec)
        if not crit:
            raise ValueError("the model has no critical energy")
        E_c = max(crit, key=lambda r: r.energy).energy
    if eps0 is None:
        eps0 = _default_eps0(spec, E_c, seed, threads)
    eta = min(q, 0.5)
    Ts = np.asarray(T_grid, float)
    inf = math.inf
    cols = {k: np.empty(len(Ts)) for k in ("central", "main", "boundary", "remainder", "total")}
    for k, T in enumerate(Ts):
        e1, e2 = T ** (-eta), T ** (-alpha)
        e1, e2 = min(e1, eps0), min(max(e2, e1), eps0)
        pieces = [
            (0.0, 1.0 + alpha, E_c, E_c + e1),
            (0.0, inf, E_c + e1, E_c + e2),
            (0.0, 1.0 + alpha, E_c + e2, E_c + eps0),
            (0.0, inf, -inf, E_c),
            (0.0, inf, E_c + eps0, inf),
            (0.0, inf, -inf, inf),
        ]
        per = _partial_many(spec, q, T, pieces, samples, seed,
                            points_per_width=points_per_width, tol=tol, threads=threads)
        mean = per.mean(axis=0)
        cols["central"][k], cols["main"][k], cols["boundary"][k] = mean[:3]
        cols["remainder"][k] = mean[3] + mean[4]
        cols["total"][k] = mean[5]
    x = np.log(Ts)
    slopes = {}
    for name in ("central", "main", "boundary"):
        y = cols[name]
        slopes[name] = _slope(x, np.log(y)) if np.all(y > 0) and len(Ts) > 1 else float("nan")
    return DecompositionReport(float(q), float(alpha), float(E_c), float(eps0), Ts,
                               cols["central"], cols["main"], cols["boundary"],
                               cols["remainder"], cols["total"], slopes,
                               _predicted_pieces(q, alpha))
