"""Hejhal's collocation method for Maass cusp forms on SL2(Z).

A form of parity ``even``/``odd`` is expanded as

    f(x + iy) = sum_n a(n) sqrt(y) Kt(2 pi n y) trig(2 pi n x),

with Kt the scaled K-Bessel function and trig = cos or sin.  Sampling on a
horocycle y = Y below the fundamental domain and replacing each sample by the
value at its pullback gives a linear system for the a(n); the spectral
parameter is where systems built from two different heights agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import linalg

from . import kernels
from .domain import HalfPlanePoint, reduce_to_fundamental
from .errors import DomainError, NumericalError

TAIL_EPS = 1e-16
_SQRT3_2 = math.sqrt(3.0) / 2.0


def trig(parity: str):
    if parity == "even":
        return np.cos
    if parity == "odd":
        return np.sin
    raise DomainError(f"parity must be 'even' or 'odd', got {parity!r}")


def truncation_for(t: float, y: float, eps: float = TAIL_EPS) -> int:
    """Smallest M with sqrt(y) Kt(2 pi n y) below eps * peak for all n >= M."""
    t = abs(float(t))
    n_hi = max(4, int(math.ceil((t + 60.0 + 4.0 * t ** (1 / 3)) / (2 * math.pi * y))) + 2)
    n = np.arange(1, n_hi + 1)
    k = np.abs(kernels.kbessel_scaled(t, 2 * math.pi * n * y))
    peak = k.max()
    big = np.nonzero(k > eps * peak)[0]
    return int(big[-1] + 2) if big.size else 1


@lru_cache(maxsize=64)
def _pullbacks(y: float, q: int):
    """Collocation abscissae x_m in (0, 1/2) and pullbacks of x_m + i y."""
    xm = (np.arange(1, q + 1) - 0.5) / (2.0 * q)
    xs = np.empty(q)
    ys = np.empty(q)
    for i, x in enumerate(xm):
        p, _ = reduce_to_fundamental(HalfPlanePoint(float(x), y))
        xs[i] = p.x
        ys[i] = p.y
    if np.any(ys <= y + 1e-12):
        raise DomainError(f"height {y} is not below the fundamental domain")
    return xm, xs, ys


@dataclass
class Solution:
    t: float
    y: float
    coefficients: np.ndarray  # a(1..M), a(1) = 1
    kappa: np.ndarray  # sqrt(Y) Kt(2 pi n Y)
    residual: float
    condition: float


def solve_system(parity: str, t: float, y: float, m0: int, q: int | None = None,
                 fixed: int = 1) -> Solution:
    """Solve the collocation system at height ``y`` with ``m0`` unknowns.

    The coefficient with index ``fixed`` is set to 1.
    """
    tr = trig(parity)
    q = q if q is not None else m0 + 10
    if q <= m0:
        raise DomainError("need more collocation points than coefficients")
    xm, xs, ys = _pullbacks(float(y), int(q))
    n = np.arange(1, m0 + 1)
    kvals = kernels.kbessel_scaled(t, (2 * math.pi * np.outer(n, ys)).ravel()).reshape(m0, q)
    kvals *= np.sqrt(ys)[None, :]
    # B[k, m] = sqrt(y*_m) Kt(2 pi k y*_m) trig(2 pi k x*_m)
    bmat = kvals * tr(2 * math.pi * np.outer(n, xs))
    cmat = tr(2 * math.pi * np.outer(n, xm))
    v = (2.0 / q) * cmat @ bmat.T
    kappa = math.sqrt(y) * kernels.kbessel_scaled(t, 2 * math.pi * n * y)
    v[np.diag_indices(m0)] -= kappa
    scale = np.max(np.abs(v), axis=1)
    v /= scale[:, None]
    j = fixed - 1
    rhs = -v[:, j]
    a = np.delete(v, j, axis=1)
    col = np.max(np.abs(a), axis=0)
    col[col == 0] = 1.0
    sol, _, rank, sv = linalg.lstsq(a / col[None, :], rhs, lapack_driver="gelsd")
    sol = sol / col
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
    coeffs = np.insert(sol, j, 1.0)
    res = float(np.max(np.abs(a @ sol - rhs)))
    if not np.all(np.isfinite(coeffs)):
        raise NumericalError("collocation system is singular", estimate=cond)
    return Solution(float(t), float(y), coeffs, kappa, res, cond)


def default_heights(t: float) -> tuple[float, float]:
    """Two heights below the fundamental domain for the secular function."""
    y1 = 0.8 * _SQRT3_2
    return y1, 0.88 * y1


def secular(parity: str, t: float, heights=None, m0: int | None = None, extra: int = 0):
    """Differences of a(2), a(3) between the systems at two heights."""
    y1, y2 = heights if heights is not None else default_heights(t)
    m1 = m0 if m0 is not None else truncation_for(t, y2)
    m1 += extra
    s1 = solve_system(parity, t, y1, m1)
    s2 = solve_system(parity, t, y2, m1)
    return s1.coefficients[1:3] - s2.coefficients[1:3], s1, s2
