"""Transfer matrices, cocycles, polymer block matrices and critical energies."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .model import PolymerSpec, Realization

__all__ = [
    "ScaledMatrix2",
    "CriticalEnergyReport",
    "CommutatorGrowth",
    "single_transfer",
    "cocycle",
    "polymer_matrix",
    "commutator_norm",
    "find_critical_energies",
    "rotation_angles",
    "check_degeneracy",
    "commutator_growth",
]

COMMUTATOR_TOL = 1e-9
ELLIPTIC_MARGIN = 1e-6
IDENTITY_TOL = 1e-9
FLAG_TOL = 1e-8


def _renormalize(m: np.ndarray, log_scale: float) -> tuple[np.ndarray, float]:
    mx = float(np.max(np.abs(m)))
    if mx == 0.0 or 0.5 <= mx <= 2.0:
        return m, log_scale
    k = math.frexp(mx)[1]
    return m * math.ldexp(1.0, -k), log_scale + k * math.log(2.0)


@dataclass(frozen=True, eq=False)
class ScaledMatrix2:
    """2x2 complex matrix stored as exp(log_scale) * m."""
    m: np.ndarray
    log_scale: float = 0.0

    @classmethod
    def from_matrix(cls, a) -> "ScaledMatrix2":
        m, s = _renormalize(np.asarray(a, dtype=np.complex128).copy(), 0.0)
        return cls(m, s)

    @classmethod
    def identity(cls) -> "ScaledMatrix2":
        return cls(np.eye(2, dtype=np.complex128), 0.0)

    def matrix(self) -> np.ndarray:
        """Dense value; overflows for large log_scale."""
        return self.m * math.exp(self.log_scale)

    def __matmul__(self, other: "ScaledMatrix2") -> "ScaledMatrix2":
        m, s = _renormalize(self.m @ other.m, self.log_scale + other.log_scale)
        return ScaledMatrix2(m, s)

    def inverse(self) -> "ScaledMatrix2":
        a, b, c, d = self.m.ravel()
        det = a * d - b * c
        adj = np.array([[d, -b], [-c, a]]) / det
        m, s = _renormalize(adj, -self.log_scale)
        return ScaledMatrix2(m, s)

    def log_norm(self) -> float:
        """log of the Frobenius norm."""
        return math.log(float(np.linalg.norm(self.m))) + self.log_scale

    def norm(self) -> float:
        return math.exp(self.log_norm())

    def log_abs_det(self) -> float:
        a, b, c, d = self.m.ravel()
        return math.log(abs(a * d - b * c)) + 2.0 * self.log_scale

    def trace(self) -> complex:
        return complex(np.trace(self.m)) * math.exp(self.log_scale)

    def log_entries(self) -> tuple[np.ndarray, np.ndarray]:
        """(log|entry|, phase) of the four entries, overflow free."""
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.m)) + self.log_scale, np.angle(self.m)


def single_transfer(z: complex, v: float, t: float) -> ScaledMatrix2:
    if not t > 0:
        raise ValueError(f"hopping t = {t!r} must be positive")
    m = np.array([[(z - v) / t, -t], [1.0 / t, 0.0]], dtype=np.complex128)
    if 0.5 <= np.max(np.abs(m)) <= 2.0:
        return ScaledMatrix2(m, 0.0)
    return ScaledMatrix2.from_matrix(m)


def _product(z: complex, v: np.ndarray, t: np.ndarray, i0: int, i1: int) -> ScaledMatrix2:
    m, s = kernels.chain_product(complex(z), v, t, int(i0), int(i1))
    return ScaledMatrix2(np.asarray(m), float(s))


def cocycle(realization: Realization, z: complex, n: int, m: int) -> ScaledMatrix2:
    """T(n, m) = T_{n-1} ... T_m for n > m, its inverse convention for n < m."""
    Nw = realization.window
    for name, k in (("n", n), ("m", m)):
        if not -Nw <= k <= Nw + 1:
            raise IndexError(f"{name} = {k} outside window [-{Nw}, {Nw + 1}]")
    if n == m:
        return ScaledMatrix2.identity()
    lo, hi = min(n, m), max(n, m)
    A = _product(z, realization.v, realization.t, lo + Nw, hi + Nw)
    return A if n > m else A.inverse()


def polymer_matrix(spec: PolymerSpec, sign: int, z: complex) -> ScaledMatrix2:
    if sign not in (1, -1, "+", "-"):
        raise ValueError(f"sign must be +1 or -1, got {sign!r}")
    s = 1 if sign in (1, "+") else -1
    t, v = spec.block(s)
    return _product(z, v, t, 0, len(t))


def _block_pair(spec: PolymerSpec, z: complex) -> tuple[np.ndarray, np.ndarray]:
    return polymer_matrix(spec, 1, z).matrix(), polymer_matrix(spec, -1, z).matrix()


def commutator_norm(spec: PolymerSpec, E: complex) -> float:
    """Frobenius norm of [T_-, T_+] at energy E."""
    Tp, Tm = _block_pair(spec, E)
    return float(np.linalg.norm(Tm @ Tp - Tp @ Tm))


def _kind(T: np.ndarray) -> str | None:
    I = np.eye(2)
    if np.linalg.norm(T - I) < IDENTITY_TOL:
        return "plus_identity"
    if np.linalg.norm(T + I) < IDENTITY_TOL:
        return "minus_identity"
    tr = np.trace(T)
    if abs(tr.imag) < 1e-12 and abs(tr.real) < 2.0 - ELLIPTIC_MARGIN:
        return "elliptic"
    return None


def _eta(T: np.ndarray, kind: str) -> float:
    if kind == "plus_identity":
        return 0.0
    if kind == "minus_identity":
        return math.pi
    return math.acos(max(-1.0, min(1.0, 0.5 * float(np.trace(T).real))))


@dataclass(frozen=True)
class CriticalEnergyReport:
    energy: float
    trace_plus: complex
    trace_minus: complex
    commutator_norm: float
    kind_plus: str
    kind_minus: str
    eta_plus: float
    eta_minus: float
    flag_2eta: bool
    flag_4eta: bool


def _flags(spec: PolymerSpec, eta_p: float, eta_m: float) -> tuple[bool, bool]:
    m2 = spec.p_plus * np.exp(2j * eta_p) + spec.p_minus * np.exp(2j * eta_m)
    m4 = spec.p_plus * np.exp(4j * eta_p) + spec.p_minus * np.exp(4j * eta_m)
    return bool(abs(m2 - 1.0) < FLAG_TOL), bool(abs(m4 - 1.0) < FLAG_TOL)


def _report(spec: PolymerSpec, E: float) -> CriticalEnergyReport | None:
    Tp, Tm = _block_pair(spec, E)
    cn = float(np.linalg.norm(Tm @ Tp - Tp @ Tm))
    kp, km = _kind(Tp), _kind(Tm)
    if cn >= COMMUTATOR_TOL or kp is None or km is None:
        return None
    ep, em = _eta(Tp, kp), _eta(Tm, km)
    f2, f4 = _flags(spec, ep, em)
    return CriticalEnergyReport(float(E), complex(np.trace(Tp)), complex(np.trace(Tm)),
                                cn, kp, km, ep, em, f2, f4)


def _golden_min(f, a: float, b: float, tol: float) -> float:
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def find_critical_energies(spec: PolymerSpec, interval: tuple[float, float] | None = None,
                           grid_step: float = 1e-3, tol: float = 1e-12
                           ) -> list[CriticalEnergyReport]:
    """Scan for energies where T_+ and T_- commute and are elliptic or +-1.

    f(E) = ||[T_-, T_+]||_F is non-negative, so zeros show up as local minima
    of the sampled f; each one is bracketed by its grid neighbours and
    refined by golden-section interval reduction down to width ``tol``.
    Families whose two blocks coincide commute at every energy and have no
    isolated critical energies; they return an empty list.
    """
    if grid_step <= 0 or tol <= 0:
        raise ValueError("grid_step and tol must be positive")
    if spec.blocks_identical:
        return []
    lo, hi = interval if interval is not None else spec.spectrum_bracket()
    n = max(int(math.ceil((hi - lo) / grid_step)), 2)
    grid = np.linspace(lo, hi, n + 1)
    f = np.array([commutator_norm(spec, E) for E in grid])
    cand = []
    for i in range(len(grid)):
        left = f[i - 1] if i > 0 else np.inf
        right = f[i + 1] if i < len(grid) - 1 else np.inf
        if f[i] <= left and f[i] <= right:
            a = grid[max(i - 1, 0)]
            b = grid[min(i + 1, len(grid) - 1)]
            cand.append(_golden_min(lambda E: commutator_norm(spec, E), a, b, tol))
    out: list[CriticalEnergyReport] = []
    for E in sorted(cand):
        rep = _report(spec, E)
        if rep is None:
            continue
        if out and abs(E - out[-1].energy) <= 2 * tol:
            if rep.commutator_norm < out[-1].commutator_norm:
                out[-1] = rep
            continue
        out.append(rep)
    return out


def rotation_angles(spec: PolymerSpec, E_c: float) -> tuple[float, float, bool, bool]:
    """(eta_plus, eta_minus, flag_2eta, flag_4eta) at an accepted critical energy."""
    rep = _report(spec, float(E_c))
    if rep is None:
        raise ValueError(f"E = {E_c!r} is not a critical energy of this family")
    return rep.eta_plus, rep.eta_minus, rep.flag_2eta, rep.flag_4eta


def check_degeneracy(spec: PolymerSpec, interval: tuple[float, float] | None = None
                     ) -> dict:
    """Critical energies and whether the non-degeneracy hypotheses hold there.

    ``anomaly`` is set when some critical energy has E(exp(4i eta)) = 1, and
    ``two_eta_degenerate`` when E(exp(2i eta)) = 1.
    """
    reps = find_critical_energies(spec, interval)
    return {
        "critical_energies": reps,
        "anomaly": any(r.flag_4eta for r in reps),
        "two_eta_degenerate": any(r.flag_2eta for r in reps),
    }


@dataclass(frozen=True)
class CommutatorGrowth:
    slope: float
    epsilons: np.ndarray
    norms: np.ndarray
    degenerate: bool


def commutator_growth(spec: PolymerSpec, E_c: float, epsilons: Sequence[float]
                      ) -> CommutatorGrowth:
    """Log-log slope of ||[T_-, T_+]|| at E_c + eps against eps."""
    eps = np.asarray(epsilons, dtype=float)
    if np.any(eps <= 0):
        raise ValueError("epsilons must be positive")
    norms = np.array([commutator_norm(spec, E_c + e) for e in eps])
    if np.all(norms < 1e-14):
        return CommutatorGrowth(float("nan"), eps, norms, True)
    slope = float(np.polyfit(np.log(eps), np.log(norms), 1)[0])
    return CommutatorGrowth(slope, eps, norms, False)
