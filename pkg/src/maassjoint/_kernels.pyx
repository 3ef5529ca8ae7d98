# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the functions in ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, sqrt, cos, sin, fabs, M_PI
from libc.stdlib cimport malloc, free

cnp.import_array()

DEF NTERMS = 30
cdef double STEP_SCALE = 0.75
cdef double RESCALE_HI = 1e150
cdef double RESCALE_LO = 1e-150


cdef int _asymptotic_series(double r, double x, double *s_out, double *d_out) nogil:
    cdef double four_nu2 = -4.0 * r * r
    cdef double term = 1.0, s = 1.0, biggest = 1.0
    cdef double d = -(1.0 + 0.5 / x)
    cdef int k = 0
    while True:
        k += 1
        term *= (four_nu2 - (2 * k - 1) * (2 * k - 1)) / (8.0 * k * x)
        s += term
        d -= term * (1.0 + (k + 0.5) / x)
        if fabs(term) > biggest:
            biggest = fabs(term)
        if fabs(term) < 1e-18 * fabs(s):
            s_out[0] = s
            d_out[0] = d
            return biggest < 10.0 * fabs(s)
        if k > 400 or (k > 2 and fabs(term) > biggest * 0.999 and fabs(term) > 1.0):
            s_out[0] = s
            d_out[0] = d
            return 0


def kbessel_scaled(r, xs):
    """exp(pi r/2) K_{ir}(x) for a 1-d array of x > 0 (any order)."""
    cdef double rr = fabs(float(r))
    arr = np.ascontiguousarray(xs, dtype=np.float64)
    out = np.empty_like(arr)
    if arr.size == 0:
        return out
    if not np.all(arr > 0):
        raise ValueError("K-Bessel argument must be positive")
    order = np.argsort(-arr)
    sx_arr = np.ascontiguousarray(arr[order])
    vals_arr = np.empty_like(sx_arr)
    cdef double[::1] sx = sx_arr
    cdef double[::1] vals = vals_arr
    cdef Py_ssize_t n = sx.shape[0]
    cdef double x0 = max(40.0, 2.0 * rr, rr * rr / 4.0)
    cdef double mant = 0.0, dmant = 0.0
    cdef int it, ok = 0
    for it in range(60):
        ok = _asymptotic_series(rr, x0, &mant, &dmant)
        if ok:
            break
        x0 *= 1.5
    if not ok:
        raise RuntimeError("asymptotic start for K_ir not found")
    cdef double pref = sqrt(M_PI / (2.0 * x0))
    cdef double log_scale = 0.5 * M_PI * rr - x0
    cdef double w = pref * mant
    cdef double dw = pref * dmant * x0
    cdef Py_ssize_t i = 0
    while i < n and sx[i] >= x0:
        _asymptotic_series(rr, sx[i], &mant, &dmant)
        vals[i] = exp(0.5 * M_PI * rr - sx[i]) * sqrt(M_PI / (2 * sx[i])) * mant
        i += 1
    cdef double c[NTERMS]
    cdef double q[NTERMS]
    cdef double fact[NTERMS]
    cdef double r2 = rr * rr
    cdef double s0 = log(x0), s1, h, ex, acc, delta, poly, hp, big, sq, scale
    cdef int k, m
    fact[0] = 1.0
    for k in range(1, NTERMS):
        fact[k] = fact[k - 1] * 2.0 / k
    with nogil:
        while i < n:
            ex = exp(2.0 * s0)
            h = -STEP_SCALE / max(1.0, max(rr, exp(s0)))
            for k in range(NTERMS):
                q[k] = ex * fact[k]
            q[0] = ex - r2
            c[0] = w
            c[1] = dw
            for k in range(NTERMS - 2):
                acc = 0.0
                for m in range(k + 1):
                    acc += q[m] * c[k - m]
                c[k + 2] = acc / ((k + 2) * (k + 1))
            s1 = s0 + h
            scale = exp(log_scale)
            while i < n:
                sq = log(sx[i])
                if sq < s1:
                    break
                delta = sq - s0
                poly = c[NTERMS - 1]
                for k in range(NTERMS - 2, -1, -1):
                    poly = poly * delta + c[k]
                vals[i] = poly * scale
                i += 1
            if i >= n:
                break
            w = c[NTERMS - 1]
            dw = (NTERMS - 1) * c[NTERMS - 1]
            for k in range(NTERMS - 2, -1, -1):
                w = w * h + c[k]
                if k >= 1:
                    dw = dw * h + k * c[k]
            s0 = s1
            big = max(fabs(w), fabs(dw))
            if big > RESCALE_HI or (big > 0 and big < RESCALE_LO):
                w /= big
                dw /= big
                log_scale += log(big)
    out[order] = vals_arr
    return out


cdef long _inverse(long d, long c) nogil:
    cdef long r0 = c, r1 = d, t0 = 0, t1 = 1, qt, tmp
    while r1 != 0:
        qt = r0 // r1
        tmp = r0 - qt * r1
        r0 = r1
        r1 = tmp
        tmp = t0 - qt * t1
        t0 = t1
        t1 = tmp
    t0 %= c
    if t0 < 0:
        t0 += c
    return t0


cdef long _gcd(long a, long b) nogil:
    cdef long t
    while b != 0:
        t = a % b
        a = b
        b = t
    return a


def kloosterman(a, b, c):
    """S(a,b;c) as a float via exact residues and a cosine table."""
    cdef long cc = int(c)
    if cc == 1:
        return 1.0
    cdef long aa = int(a) % cc, bb = int(b) % cc
    cdef long d, k
    cdef double total = 0.0
    table_arr = np.cos(2.0 * np.pi * np.arange(cc) / cc)
    cdef double[::1] table = table_arr
    with nogil:
        for d in range(1, cc):
            if _gcd(d, cc) != 1:
                continue
            k = (aa * d + bb * _inverse(d, cc)) % cc
            total += table[k]
    return total


def kloosterman_table(ns, b, c):
    """S(n,b;c) for each n in ns, sharing the unit/inverse tables."""
    ns_arr = np.ascontiguousarray(ns, dtype=np.int64)
    cdef long cc = int(c)
    cdef Py_ssize_t nn = ns_arr.shape[0]
    if cc == 1:
        return np.ones(nn)
    cdef long bb = int(b) % cc
    cdef long[::1] nsv = ns_arr.astype(np.int_)
    table_arr = np.cos(2.0 * np.pi * np.arange(cc) / cc)
    cdef double[::1] table = table_arr
    out_arr = np.zeros(nn)
    cdef double[::1] out = out_arr
    cdef long d, k, an
    cdef Py_ssize_t i
    cdef long *units = <long *> malloc(cc * sizeof(long))
    cdef long *bd = <long *> malloc(cc * sizeof(long))
    cdef long nu = 0
    try:
        with nogil:
            for d in range(1, cc):
                if _gcd(d, cc) == 1:
                    units[nu] = d
                    bd[nu] = (bb * _inverse(d, cc)) % cc
                    nu += 1
            for i in range(nn):
                an = nsv[i] % cc
                if an < 0:
                    an += cc
                for k in range(nu):
                    out[i] += table[(an * units[k] + bd[k]) % cc]
    finally:
        free(units)
        free(bd)
    return out_arr


def jbessel_imag_scaled(nus, x, log_gamma1):
    """exp(-pi nu/2) J_{i nu}(x) for an array of real nu and scalar x > 0.

    ``log_gamma1`` holds log Gamma(1 + i nu) for each nu (principal branch).
    """
    nus_arr = np.ascontiguousarray(nus, dtype=np.float64)
    lg_arr = np.ascontiguousarray(log_gamma1, dtype=np.complex128)
    cdef double[::1] nu = nus_arr
    cdef double complex[::1] lg = lg_arr
    cdef Py_ssize_t n = nu.shape[0], j
    out_arr = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] out = out_arr
    cdef double xx = float(x)
    cdef double half_log = log(0.5 * xx), u = 0.25 * xx * xx
    cdef double complex term, total, e
    cdef double biggest, a
    cdef int k
    with nogil:
        for j in range(n):
            e = 1j * nu[j] * half_log - lg[j] - 0.5 * M_PI * nu[j]
            term = exp(e.real) * (cos(e.imag) + 1j * sin(e.imag))
            total = term
            biggest = fabs(term.real) + fabs(term.imag)
            k = 0
            while True:
                k += 1
                term = term * (-u) / (k * (k + 1j * nu[j]))
                total = total + term
                a = fabs(term.real) + fabs(term.imag)
                if a > biggest:
                    biggest = a
                if (k > 5 and a <= 1e-18 * biggest) or k > 2000:
                    break
            out[j] = total
    return out_arr
