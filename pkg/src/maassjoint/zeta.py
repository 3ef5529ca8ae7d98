"""Riemann zeta by Euler-Maclaurin summation, and the completed xi."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .errors import DomainError
from .specfun import _BERNOULLI, log_gamma

_EM_COEFFS = [float(b) / math.factorial(2 * k) for k, b in enumerate(_BERNOULLI, start=1)]


def zeta(s: complex, n_terms: int | None = None, em_terms: int = 12) -> complex:
    """zeta(s) for s != 1 with Re s > -10.

    Direct sum to N plus the Euler-Maclaurin correction; N defaults to
    max(20, |Im s|) which keeps the remainder below double precision.  For
    Re s < 0 the terms cancel and the absolute error grows like eps * N^{1 - Re s}.
    """
    s = complex(s)
    if s == 1:
        raise DomainError("zeta has a pole at s = 1")
    if s.real <= -10:
        raise DomainError("Euler-Maclaurin evaluator needs Re s > -10")
    n = int(n_terms) if n_terms is not None else max(20, int(abs(s.imag)) + 10)
    ks = np.arange(1, n, dtype=float)
    head = np.sum(np.exp(-s * np.log(ks)))
    ns = n ** (-s)
    total = head + n ** (1 - s) / (s - 1) + 0.5 * ns
    rising = s
    power = ns / n
    for k, c in enumerate(_EM_COEFFS[:em_terms], start=1):
        total += c * rising * power
        rising *= (s + 2 * k - 1) * (s + 2 * k)
        power /= n * n
    return complex(total)


def log_xi(s: complex) -> complex:
    """log of pi^{-s/2} Gamma(s/2) zeta(s), continuous only up to 2 pi i."""
    s = complex(s)
    z = zeta(s)
    return -0.5 * s * math.log(math.pi) + complex(log_gamma(0.5 * s)) + complex(np.log(z))


def tau_it(n: int, t: float) -> float:
    """sum over ad = n of (a/d)^{it}, a real number."""
    total = 0.0
    for d in range(1, int(math.isqrt(n)) + 1):
        if n % d == 0:
            a = n // d
            if a == d:
                total += 1.0
            else:
                total += 2.0 * math.cos(t * math.log(a / d))
    return total


def tau_table(nmax: int, t: float) -> np.ndarray:
    """tau_it(n) for n = 1..nmax by a divisor sieve."""
    out = np.zeros(nmax + 1)
    for d in range(1, nmax + 1):
        m = np.arange(d, nmax + 1, d)
        a = m // d
        out[m] += np.cos(t * np.log(a / d))
    return out[1:]


def bernoulli(k: int) -> Fraction:
    """B_{2k} for 1 <= k <= 13."""
    return _BERNOULLI[k - 1]
