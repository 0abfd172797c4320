"""Pure-numpy counterparts of ``ptl._nb``.

Long products are evaluated by pairwise tree reduction and prefix sums of
matrix products by recursive doubling, so that the Python-level loop count is
logarithmic in the chain length.  The Green's-function sweep is sequential in
the site index and vectorized over the energy batch instead.
"""
import math

import numpy as np


def _site_matrices(z, v, t):
    it = 1.0 / t
    M = np.empty((len(v), 2, 2), dtype=np.complex128)
    M[:, 0, 0] = (z - v) * it
    M[:, 0, 1] = -t
    M[:, 1, 0] = it
    M[:, 1, 1] = 0.0
    return M


def _normalize(M):
    mx = np.abs(M).reshape(len(M), -1).max(axis=1)
    mx[mx == 0.0] = 1.0
    _, k = np.frexp(mx)
    return M * np.ldexp(1.0, -k)[:, None, None], k


def chain_product(z, v, t, i0, i1):
    if i1 <= i0:
        return np.eye(2, dtype=np.complex128), 0.0
    M = _site_matrices(z, v[i0:i1], t[i0:i1])
    M, e2 = _normalize(M)
    e2 = e2.astype(np.int64)
    while len(M) > 1:
        if len(M) % 2:
            M = np.concatenate([M, np.eye(2, dtype=np.complex128)[None]])
            e2 = np.concatenate([e2, [0]])
        # later sites multiply from the left
        P = M[1::2] @ M[0::2]
        P, k = _normalize(P)
        e2 = e2[1::2] + e2[0::2] + k
        M = P
    return M[0], float(e2[0]) * math.log(2.0)


def _prefix_products(M):
    """P_k = M_{k-1} ... M_0 for k = 1..n, normalized, with log2 scales."""
    P, e2 = _normalize(M.copy())
    e2 = e2.astype(np.int64)
    s = 1
    n = len(P)
    while s < n:
        Q = P[s:] @ P[:-s]
        Q, k = _normalize(Q)
        e2 = np.concatenate([e2[:s], e2[s:] + e2[:-s] + k])
        P = np.concatenate([P[:s], Q])
        s *= 2
    return P, e2


def _chain_matrices(z, v, t, i0, n, direction):
    if direction > 0:
        return _site_matrices(z, v[i0:i0 + n], t[i0:i0 + n])
    # right multiplication by T_{i0-1}, T_{i0-2}, ... equals the transposed
    # left-multiplied chain of transposes
    idx = np.arange(i0 - 1, i0 - n - 1, -1)
    return np.transpose(_site_matrices(z, v[idx], t[idx]), (0, 2, 1))


def running_log_norms(z, v, t, i0, n, direction):
    out = np.empty(n + 1)
    out[0] = 0.5 * math.log(2.0)
    if n == 0:
        return out
    P, e2 = _prefix_products(_chain_matrices(z, v, t, i0, n, direction))
    fro = np.sum(np.abs(P) ** 2, axis=(1, 2))
    out[1:] = 0.5 * np.log(fro) + e2 * math.log(2.0)
    return out


def vector_growth(z, v, t, i0, checkpoints, x0, x1, direction):
    checkpoints = np.asarray(checkpoints)
    n = int(checkpoints[-1]) if len(checkpoints) else 0
    out = np.empty(len(checkpoints))
    x = np.array([x0, x1], dtype=np.complex128)
    if n == 0:
        out[:] = 0.5 * math.log(float(np.sum(np.abs(x) ** 2)))
        return out
    P, e2 = _prefix_products(_chain_matrices(z, v, t, i0, n, direction))
    for i, k in enumerate(checkpoints):
        if k == 0:
            y = x
            sc = 0
        else:
            y = P[k - 1] @ x
            sc = e2[k - 1]
        out[i] = 0.5 * math.log(float(np.sum(np.abs(y) ** 2))) + sc * math.log(2.0)
    return out


def hyperboloid_points(z, v, t, i0, n, log_cap):
    A = np.empty((n + 1, 2, 2), dtype=np.complex128)
    A[0] = np.eye(2)
    m, ok = n + 1, True
    if math.log(2.0) > 2.0 * log_cap:      # ||I||_F^2 = 2 already over the cap
        m, ok, n = 1, False, 0
    if n:
        P, e2 = _prefix_products(_site_matrices(z, v[i0:i0 + n], t[i0:i0 + n]))
        # stop at the first ||A_k||_F > exp(log_cap), before anything overflows
        log2 = np.log(np.sum(np.abs(P) ** 2, axis=(1, 2))) + 2.0 * e2 * math.log(2.0)
        over = np.nonzero(log2 > 2.0 * log_cap)[0]
        if len(over):
            m, ok = over[0] + 2, False
        A[1:m] = P[:m - 1] * np.ldexp(1.0, e2[:m - 1])[:, None, None]
    A = A[:m]
    p11 = np.abs(A[:, 0, 0]) ** 2 + np.abs(A[:, 1, 0]) ** 2
    p22 = np.abs(A[:, 0, 1]) ** 2 + np.abs(A[:, 1, 1]) ** 2
    p12 = np.conj(A[:, 0, 0]) * A[:, 0, 1] + np.conj(A[:, 1, 0]) * A[:, 1, 1]
    X = np.stack([0.5 * (p11 + p22), p12.real, -p12.imag, 0.5 * (p11 - p22)], axis=1)
    return X, ok


_ETA = np.array([1.0, -1.0, -1.0, -1.0])


def _pair_ip_max(X, chunk=2048):
    best = 1.0
    for s in range(0, len(X), chunk):
        G = (X[s:s + chunk] * _ETA) @ X.T
        best = max(best, float(G.max()))
    return best


def pair_max_exceeds(X, log_thr):
    return _pair_ip_max(X) > 0.5 * math.exp(2.0 * log_thr)


def max_pair_log_norm(z, v, t, i0, n):
    best = 0.5 * math.log(2.0)
    for m in range(n):
        best = max(best, float(running_log_norms(z, v, t, i0 + m, n - m, 1).max()))
    return best


def side_sums(zr, zi, v, t, R, W, j_half, j_quarter):
    z = zr + 1j * zi
    B = len(z)
    nw = W.shape[0]
    x = np.ones(B, dtype=np.complex128)
    p = np.zeros(B, dtype=np.complex128)
    S = np.zeros((nw, B))
    Sh = np.zeros((nw, B))
    Sq = np.zeros((nw, B))
    for j in range(R, 0, -1):
        a = x.real ** 2 + x.imag ** 2
        S += W[:, j, None] * a[None, :]
        c = t[j + 1] / t[j] if j < R else 0.0
        x, p = ((z - v[j]) / t[j]) * x - c * p, x
        if j - 1 == j_half:
            Sh[:] = S
        if j - 1 == j_quarter:
            Sq[:] = S
        if (j & 3) == 0:
            big = np.abs(x) > 1e50
            if big.any():
                x[big] *= 1e-60
                p[big] *= 1e-60
                S[:, big] *= 1e-120
                Sh[:, big] *= 1e-120
                Sq[:, big] *= 1e-120
    return x.real.copy(), x.imag.copy(), p.real.copy(), p.imag.copy(), S, Sh, Sq
