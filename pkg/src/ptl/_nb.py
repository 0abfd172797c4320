"""Compiled kernels (numba).  Signatures mirror ``ptl._np`` one to one."""
import math

import numpy as np

from ._backend import njit

LN2 = math.log(2.0)


@njit
def _exp2_of_max(a, b, c, d):
    # exponent k with max|entry| in [2^(k-1), 2^k)
    mx = max(abs(a), abs(b), abs(c), abs(d))
    if mx == 0.0:
        return 0
    return math.frexp(mx)[1]


@njit
def chain_product(z, v, t, i0, i1):
    """T_{i1-1} ... T_{i0} over array indices, as (matrix, log_scale)."""
    a = 1.0 + 0j
    b = 0j
    c = 0j
    d = 1.0 + 0j
    e2 = 0
    for j in range(i0, i1):
        it = 1.0 / t[j]
        x = (z - v[j]) * it
        a, b, c, d = x * a - t[j] * c, x * b - t[j] * d, a * it, b * it
        mx = max(abs(a), abs(b), abs(c), abs(d))
        if mx > 2.0 or mx < 0.5:
            k = math.frexp(mx)[1]
            s = math.ldexp(1.0, -k)
            a *= s
            b *= s
            c *= s
            d *= s
            e2 += k
    out = np.empty((2, 2), dtype=np.complex128)
    out[0, 0] = a
    out[0, 1] = b
    out[1, 0] = c
    out[1, 1] = d
    return out, e2 * LN2


@njit
def running_log_norms(z, v, t, i0, n, direction):
    """log of the Frobenius norm of the cocycle from i0 over k = 0..n sites.

    direction +1: T_{i0+k-1} ... T_{i0};  direction -1: T_{i0-1} ... T_{i0-k},
    whose norm equals that of the cocycle from i0 to i0-k.
    """
    out = np.empty(n + 1)
    a = 1.0 + 0j
    b = 0j
    c = 0j
    d = 1.0 + 0j
    e2 = 0
    out[0] = 0.5 * math.log(2.0)
    for k in range(1, n + 1):
        if direction > 0:
            j = i0 + k - 1
            it = 1.0 / t[j]
            x = (z - v[j]) * it
            a, b, c, d = x * a - t[j] * c, x * b - t[j] * d, a * it, b * it
        else:
            j = i0 - k
            it = 1.0 / t[j]
            x = (z - v[j]) * it
            # right multiplication by T_j
            a, b, c, d = a * x + b * it, -a * t[j], c * x + d * it, -c * t[j]
        mx = max(abs(a), abs(b), abs(c), abs(d))
        if mx > 2.0 or mx < 0.5:
            kk = math.frexp(mx)[1]
            s = math.ldexp(1.0, -kk)
            a *= s
            b *= s
            c *= s
            d *= s
            e2 += kk
        fro = (a.real * a.real + a.imag * a.imag + b.real * b.real + b.imag * b.imag
               + c.real * c.real + c.imag * c.imag + d.real * d.real + d.imag * d.imag)
        out[k] = 0.5 * math.log(fro) + e2 * LN2
    return out


@njit
def vector_growth(z, v, t, i0, checkpoints, x0, x1, direction):
    """log of |cocycle applied to (x0, x1)| at the requested site counts.

    direction -1 propagates the row vector (x0, x1) by right multiplication
    through T_{i0-1}, T_{i0-2}, ...; its norm growth is that of the backward
    cocycle.  ``checkpoints`` must be sorted.
    """
    out = np.empty(checkpoints.shape[0])
    p = x0 + 0j
    q = x1 + 0j
    e2 = 0
    ci = 0
    nmax = checkpoints[-1] if checkpoints.shape[0] > 0 else 0
    while ci < checkpoints.shape[0] and checkpoints[ci] == 0:
        out[ci] = 0.5 * math.log(abs(p) ** 2 + abs(q) ** 2)
        ci += 1
    for k in range(1, nmax + 1):
        if direction > 0:
            j = i0 + k - 1
            it = 1.0 / t[j]
            p, q = (z - v[j]) * it * p - t[j] * q, p * it
        else:
            j = i0 - k
            it = 1.0 / t[j]
            p, q = p * (z - v[j]) * it + q * it, -p * t[j]
        if (k & 7) == 0:
            mx = max(abs(p), abs(q))
            kk = math.frexp(mx)[1]
            s = math.ldexp(1.0, -kk)
            p *= s
            q *= s
            e2 += kk
        while ci < checkpoints.shape[0] and checkpoints[ci] == k:
            out[ci] = 0.5 * math.log(abs(p) ** 2 + abs(q) ** 2) + e2 * LN2
            ci += 1
    return out


@njit
def hyperboloid_points(z, v, t, i0, n, log_cap):
    """Minkowski coordinates of A_k^H A_k for A_k the cocycle over k sites.

    ||A_m A_k^{-1}||_F^2 = 2 <X_m, X_k> in the (+,-,-,-) metric.  Returns
    (X, ok); ok is False (and X is partial) as soon as some ||A_k||_F exceeds
    exp(log_cap), which keeps the arithmetic unscaled.
    """
    X = np.empty((n + 1, 4))
    a = 1.0 + 0j
    b = 0j
    c = 0j
    d = 1.0 + 0j
    cap = math.exp(2.0 * log_cap)
    for k in range(n + 1):
        p11 = a.real * a.real + a.imag * a.imag + c.real * c.real + c.imag * c.imag
        p22 = b.real * b.real + b.imag * b.imag + d.real * d.real + d.imag * d.imag
        p12 = a.conjugate() * b + c.conjugate() * d
        X[k, 0] = 0.5 * (p11 + p22)
        X[k, 1] = p12.real
        X[k, 2] = -p12.imag
        X[k, 3] = 0.5 * (p11 - p22)
        if p11 + p22 > cap:
            return X[: k + 1], False
        if k < n:
            j = i0 + k
            it = 1.0 / t[j]
            x = (z - v[j]) * it
            a, b, c, d = x * a - t[j] * c, x * b - t[j] * d, a * it, b * it
    return X, True


@njit
def _center_radii(X):
    n = X.shape[0]
    c0 = 0.0
    c1 = 0.0
    c2 = 0.0
    c3 = 0.0
    for i in range(n):
        c0 += X[i, 0]
        c1 += X[i, 1]
        c2 += X[i, 2]
        c3 += X[i, 3]
    s = math.sqrt(max(c0 * c0 - c1 * c1 - c2 * c2 - c3 * c3, 1e-300))
    c0 /= s
    c1 /= s
    c2 /= s
    c3 /= s
    r = np.empty(n)
    for i in range(n):
        ip = X[i, 0] * c0 - X[i, 1] * c1 - X[i, 2] * c2 - X[i, 3] * c3
        r[i] = math.acosh(max(ip, 1.0))
    return r


@njit
def pair_max_exceeds(X, log_thr):
    """True iff max_{k,m} ||A_m A_k^{-1}||_F > exp(log_thr).

    Inner products of the points lose accuracy like eps * X0^2, so this is
    meant for log_thr up to about 8 with points capped at the threshold.
    """
    n = X.shape[0]
    thr_ip = 0.5 * math.exp(2.0 * log_thr)
    if thr_ip <= 1.0:
        return n > 0 and thr_ip < 1.0
    dthr = math.acosh(thr_ip)
    r = _center_radii(X)
    order = np.argsort(-r)
    rmax = r[order[0]]
    if 2.0 * rmax <= dthr:
        return False
    # slack guards the acosh round-off in the pruning only
    slack = 1e-9
    for ii in range(n):
        i = order[ii]
        if r[i] + rmax <= dthr - slack:
            return False
        for jj in range(ii + 1, n):
            j = order[jj]
            if r[i] + r[j] <= dthr - slack:
                break
            ip = X[i, 0] * X[j, 0] - X[i, 1] * X[j, 1] - X[i, 2] * X[j, 2] - X[i, 3] * X[j, 3]
            if ip > thr_ip:
                return True
    return False


@njit
def max_pair_log_norm(z, v, t, i0, n):
    """max_{0<=k<=m<=n} log ||T(i0+m, i0+k)||_F by direct products, O(n^2).

    Slow but free of the cancellation that limits the hyperboloid search to
    moderate norms.
    """
    best = 0.5 * math.log(2.0)
    ln_step = 50.0 * math.log(10.0)
    for m in range(n):
        a = 1.0 + 0j
        b = 0j
        c = 0j
        d = 1.0 + 0j
        s = 0.0
        for k in range(m, n):
            j = i0 + k
            it = 1.0 / t[j]
            x = (z - v[j]) * it
            a, b, c, d = x * a - t[j] * c, x * b - t[j] * d, a * it, b * it
            nn = (a.real * a.real + a.imag * a.imag + b.real * b.real + b.imag * b.imag
                  + c.real * c.real + c.imag * c.imag + d.real * d.real + d.imag * d.imag)
            val = 0.5 * math.log(nn) + s
            if val > best:
                best = val
            if nn > 1e100:
                a *= 1e-50
                b *= 1e-50
                c *= 1e-50
                d *= 1e-50
                s += ln_step
    return best


@njit(fastmath=True, boundscheck=False)
def side_sums(zr, zi, v, t, R, W, j_half, j_quarter):
    """Backward sweep of the decaying solution on sites 0..R (wall at R+1).

    u(R+1) = 0, u(R) = 1, u(j-1) = ((z - v_j) u(j) - t_{j+1} u(j+1)) / t_j.
    For each energy in the batch returns u(0), u(1) and the weighted sums
    S[w] = sum_{n=1..R} W[w, n] |u(n)|^2, all in one common scale, plus the
    partial sums over n > j_half and n > j_quarter (taken at multiples of 4).
    """
    B = zr.shape[0]
    nw = W.shape[0]
    xr = np.ones(B)
    xi = np.zeros(B)
    pr = np.zeros(B)
    pim = np.zeros(B)
    S = np.zeros((nw, B))
    Sh = np.zeros((nw, B))
    Sq = np.zeros((nw, B))
    A = np.empty((4, B))
    j = R
    while j >= 4:
        v0 = v[j]
        v1 = v[j - 1]
        v2 = v[j - 2]
        v3 = v[j - 3]
        i0 = 1.0 / t[j]
        i1 = 1.0 / t[j - 1]
        i2 = 1.0 / t[j - 2]
        i3 = 1.0 / t[j - 3]
        c0 = (t[j + 1] * i0) if j < R else 0.0
        c1 = t[j] * i1
        c2 = t[j - 1] * i2
        c3 = t[j - 2] * i3
        mx = 0.0
        for b in range(B):
            zrb = zr[b]
            zib = zi[b]
            ur = xr[b]
            ui = xi[b]
            qr = pr[b]
            qi = pim[b]
            A[0, b] = ur * ur + ui * ui
            er = (zrb - v0) * i0
            ei = zib * i0
            nr = er * ur - ei * ui - c0 * qr
            ni = er * ui + ei * ur - c0 * qi
            qr = ur
            qi = ui
            ur = nr
            ui = ni
            A[1, b] = ur * ur + ui * ui
            er = (zrb - v1) * i1
            ei = zib * i1
            nr = er * ur - ei * ui - c1 * qr
            ni = er * ui + ei * ur - c1 * qi
            qr = ur
            qi = ui
            ur = nr
            ui = ni
            A[2, b] = ur * ur + ui * ui
            er = (zrb - v2) * i2
            ei = zib * i2
            nr = er * ur - ei * ui - c2 * qr
            ni = er * ui + ei * ur - c2 * qi
            qr = ur
            qi = ui
            ur = nr
            ui = ni
            a3 = ur * ur + ui * ui
            A[3, b] = a3
            er = (zrb - v3) * i3
            ei = zib * i3
            nr = er * ur - ei * ui - c3 * qr
            ni = er * ui + ei * ur - c3 * qi
            pr[b] = ur
            pim[b] = ui
            xr[b] = nr
            xi[b] = ni
            mx = max(mx, a3)
        for w in range(nw):
            w0 = W[w, j]
            w1 = W[w, j - 1]
            w2 = W[w, j - 2]
            w3 = W[w, j - 3]
            for b in range(B):
                S[w, b] += w0 * A[0, b] + w1 * A[1, b] + w2 * A[2, b] + w3 * A[3, b]
        j -= 4
        if j == j_half:
            for w in range(nw):
                for b in range(B):
                    Sh[w, b] = S[w, b]
        if j == j_quarter:
            for w in range(nw):
                for b in range(B):
                    Sq[w, b] = S[w, b]
        if mx > 1e100:
            # rescale per energy: growth rates differ widely across a batch
            for b in range(B):
                if A[3, b] > 1e100:
                    xr[b] *= 1e-60
                    xi[b] *= 1e-60
                    pr[b] *= 1e-60
                    pim[b] *= 1e-60
                    for w in range(nw):
                        S[w, b] *= 1e-120
                        Sh[w, b] *= 1e-120
                        Sq[w, b] *= 1e-120
    while j >= 1:
        i0 = 1.0 / t[j]
        c0 = (t[j + 1] * i0) if j < R else 0.0
        for b in range(B):
            a0 = xr[b] * xr[b] + xi[b] * xi[b]
            for w in range(nw):
                S[w, b] += W[w, j] * a0
            er = (zr[b] - v[j]) * i0
            ei = zi[b] * i0
            nr = er * xr[b] - ei * xi[b] - c0 * pr[b]
            ni = er * xi[b] + ei * xr[b] - c0 * pim[b]
            pr[b] = xr[b]
            pim[b] = xi[b]
            xr[b] = nr
            xi[b] = ni
        j -= 1
    return xr, xi, pr, pim, S, Sh, Sq
