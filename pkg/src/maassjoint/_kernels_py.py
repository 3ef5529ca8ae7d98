"""Pure-Python/numpy versions of the hot kernels.

Every function here has a twin with the same signature in ``_kernels.pyx``;
``maassjoint.kernels`` picks the compiled one when it imports.
"""

from __future__ import annotations

import math

import numpy as np

TAYLOR_TERMS = 30
_STEP_SCALE = 0.75
_RESCALE_HI = 1e150
_RESCALE_LO = 1e-150


def _asymptotic_start(r):
    """Find x0 where the large-argument series for K_{ir} is clean.

    Returns (x0, log_scale, value, x*derivative) with the true scaled value
    equal to value * exp(log_scale).
    """
    x0 = max(40.0, 2.0 * r, r * r / 4.0)
    for _ in range(60):
        ok, mant, dmant = _asymptotic_series(r, x0)
        if ok:
            log_scale = 0.5 * math.pi * r - x0
            pref = math.sqrt(math.pi / (2.0 * x0))
            return x0, log_scale, pref * mant, pref * dmant * x0
        x0 *= 1.5
    raise RuntimeError("asymptotic start for K_ir not found")


def _asymptotic_series(r, x):
    """Hankel series: K = sqrt(pi/2x) e^{-x} S, K' = sqrt(pi/2x) e^{-x} D."""
    four_nu2 = -4.0 * r * r
    term = 1.0
    s = 1.0
    # d/dx [x^{-1/2-k} e^{-x}] = -x^{-1/2-k} e^{-x} (1 + (k+1/2)/x)
    d = -(1.0 + 0.5 / x)
    biggest = 1.0
    k = 0
    while True:
        k += 1
        term *= (four_nu2 - (2 * k - 1) ** 2) / (8.0 * k * x)
        s += term
        d -= term * (1.0 + (k + 0.5) / x)
        biggest = max(biggest, abs(term))
        if abs(term) < 1e-18 * abs(s):
            return biggest < 10.0 * abs(s), s, d
        if k > 400 or (k > 2 and abs(term) > biggest * 0.999 and abs(term) > 1.0):
            return False, s, d


def kbessel_scaled(r, xs):
    """exp(pi r/2) K_{ir}(x) for a 1-d array of x > 0 (any order)."""
    r = abs(float(r))
    xs = np.asarray(xs, dtype=float)
    out = np.empty_like(xs)
    if xs.size == 0:
        return out
    if not np.all(xs > 0):
        raise ValueError("K-Bessel argument must be positive")
    x0, log_scale, w, dw = _asymptotic_start(r)

    order = np.argsort(-xs)
    sx = xs[order]
    vals = np.empty_like(sx)
    i = 0
    n = sx.size
    # queries above x0: direct asymptotic series
    while i < n and sx[i] >= x0:
        ok, mant, _ = _asymptotic_series(r, sx[i])
        vals[i] = math.exp(0.5 * math.pi * r - sx[i]) * math.sqrt(math.pi / (2 * sx[i])) * mant
        i += 1
    if i == n:
        out[order] = vals
        return out

    s_q = np.log(sx[i:])
    s0 = math.log(x0)
    r2 = r * r
    N = TAYLOR_TERMS
    c = np.zeros(N)
    q = np.zeros(N)
    fact = np.array([2.0 ** j / math.factorial(j) for j in range(N)])
    j = 0
    m = s_q.size
    while j < m:
        ex = math.exp(2.0 * s0)
        h = -_STEP_SCALE / max(1.0, r, math.exp(s0))
        q[:] = ex * fact
        q[0] = ex - r2
        c[0] = w
        c[1] = dw
        for k in range(N - 2):
            c[k + 2] = np.dot(q[: k + 1], c[k::-1]) / ((k + 2) * (k + 1))
        s1 = s0 + h
        # dense output for queries in [s1, s0]
        jj = j
        while jj < m and s_q[jj] >= s1:
            jj += 1
        if jj > j:
            delta = s_q[j:jj] - s0
            poly = np.polynomial.polynomial.polyval(delta, c)
            vals[i + j: i + jj] = poly * math.exp(log_scale)
            j = jj
        if j >= m:
            break
        hp = h ** np.arange(N)
        w = float(np.dot(c, hp))
        dw = float(np.dot(c[1:] * np.arange(1, N), hp[:-1]))
        s0 = s1
        big = max(abs(w), abs(dw))
        if big > _RESCALE_HI or (0 < big < _RESCALE_LO):
            e = math.log(big)
            w /= big
            dw /= big
            log_scale += e
    out[order] = vals
    return out


def kloosterman(a, b, c):
    """S(a,b;c) as a float via exact residues and a cosine table."""
    a = int(a)
    b = int(b)
    c = int(c)
    if c == 1:
        return 1.0
    d = np.arange(1, c, dtype=np.int64)
    g = np.gcd(d, c)
    d = d[g == 1]
    dinv = _inverse_mod(d, c)
    k = (a % c * d + b % c * dinv) % c
    table = np.cos(2.0 * np.pi * np.arange(c) / c)
    return float(table[k].sum())


def kloosterman_table(ns, b, c):
    """S(n,b;c) for each n in ns, sharing the unit/inverse tables."""
    ns = np.asarray(ns, dtype=np.int64)
    c = int(c)
    if c == 1:
        return np.ones(ns.size)
    d = np.arange(1, c, dtype=np.int64)
    d = d[np.gcd(d, c) == 1]
    dinv = _inverse_mod(d, c)
    bd = (int(b) % c) * dinv % c
    table = np.cos(2.0 * np.pi * np.arange(c) / c)
    out = np.empty(ns.size)
    for i, n in enumerate(ns):
        k = ((int(n) % c) * d + bd) % c
        out[i] = table[k].sum()
    return out


def _inverse_mod(d, c):
    """Vectorised extended Euclid: inverses of units d modulo c."""
    r0 = np.full(d.shape, c, dtype=np.int64)
    r1 = d.copy()
    t0 = np.zeros(d.shape, dtype=np.int64)
    t1 = np.ones(d.shape, dtype=np.int64)
    while np.any(r1 != 0):
        nz = r1 != 0
        qt = np.zeros_like(r0)
        qt[nz] = r0[nz] // r1[nz]
        r0, r1 = np.where(nz, r1, r0), np.where(nz, r0 - qt * r1, r1)
        t0, t1 = np.where(nz, t1, t0), np.where(nz, t0 - qt * t1, t1)
    return t0 % c


def jbessel_imag_scaled(nus, x, log_gamma1):
    """exp(-pi nu/2) J_{i nu}(x) for an array of real nu and scalar x > 0.

    ``log_gamma1`` holds log Gamma(1 + i nu) for each nu (principal branch).
    Ascending series, summed with the k-th term generated by recurrence.
    """
    nus = np.asarray(nus, dtype=float)
    lg = np.asarray(log_gamma1, dtype=complex)
    half = 0.5 * x
    u = 0.25 * x * x
    term = np.exp(1j * nus * math.log(half) - lg - 0.5 * math.pi * nus)
    total = term.copy()
    biggest = np.abs(term)
    k = 0
    while True:
        k += 1
        term = term * (-u) / (k * (k + 1j * nus))
        total += term
        a = np.abs(term)
        biggest = np.maximum(biggest, a)
        if k > 5 and np.all(a <= 1e-18 * biggest):
            break
        if k > 2000:
            break
    return total
