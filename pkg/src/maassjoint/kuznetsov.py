"""Trace-formula apparatus: Kloosterman sums, averaging weights, the Bessel
transform, the zeta function on the 1-line and spectral/geometric harnesses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special

from . import kernels
from .automorphic import MaassForm, hecke_eigenvalue
from .domain import QuadratureGrid
from .errors import CapacityError, DomainError, NumericalError
from .specfun import log_gamma
from .zeta import tau_it, zeta

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


@dataclass(frozen=True)
class SpectralWindow:
    """Averaging window (X, Y, M) with 1 <= M <= Y/log X and Y <= X."""

    X: float
    Y: float
    M: float

    def __post_init__(self):
        if not (self.X > 1):
            raise DomainError("X must exceed 1")
        if not (0 < self.Y <= self.X):
            raise DomainError("need 0 < Y <= X")
        if not (1 <= self.M <= self.Y / math.log(self.X) + 1e-12):
            raise DomainError(
                f"need 1 <= M <= Y/log X = {self.Y / math.log(self.X):.4g}, got M = {self.M}"
            )

    @property
    def margin(self) -> float:
        """Distance beyond the window where h is below e^{-144}."""
        return 12.0 * self.M


@dataclass
class TraceReport:
    spectral_cusp: float
    spectral_continuous: float
    geometric_diagonal: float
    geometric_kloosterman: float
    kloosterman_tail: float
    mismatch: float
    spectrum_completeness_note: str
    c_max: int = 0

    def as_row(self) -> dict:
        return {
            "spectral_cusp": self.spectral_cusp,
            "spectral_continuous": self.spectral_continuous,
            "geometric_diagonal": self.geometric_diagonal,
            "geometric_kloosterman": self.geometric_kloosterman,
            "kloosterman_tail": self.kloosterman_tail,
            "mismatch": self.mismatch,
            "c_max": self.c_max,
        }


# ---------------------------------------------------------------- Kloosterman


def kloosterman(a: int, b: int, c: int) -> float:
    """S(a,b;c), summed exactly over units d mod c."""
    if int(c) < 1:
        raise DomainError("modulus c must be >= 1")
    return float(kernels.kloosterman(int(a), int(b), int(c)))


def kloosterman_table(ns: Sequence[int], b: int, c: int) -> np.ndarray:
    if int(c) < 1:
        raise DomainError("modulus c must be >= 1")
    return kernels.kloosterman_table(np.asarray(ns, dtype=np.int64), int(b), int(c))


def divisor_count(n: int) -> int:
    count = 0
    for d in range(1, math.isqrt(n) + 1):
        if n % d == 0:
            count += 1 if d * d == n else 2
    return count


def divisor_counts(nmax: int) -> np.ndarray:
    """tau(n) for n = 0..nmax (index 0 unused)."""
    out = np.zeros(nmax + 1, dtype=np.int64)
    for d in range(1, nmax + 1):
        out[d::d] += 1
    return out


# ---------------------------------------------------------------- weights


def h_test(t, T: float, M: float):
    """Gaussian pair e^{-((t-T)/M)^2} + e^{-((t+T)/M)^2}."""
    if not (M > 0):
        raise DomainError("M must be positive")
    t = np.asarray(t, dtype=float)
    out = np.exp(-(((t - T) / M) ** 2)) + np.exp(-(((t + T) / M) ** 2))
    return float(out) if out.ndim == 0 else out


def _erf_diff(a, b):
    """erf(b) - erf(a) without cancellation in the tails."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = special.erf(b) - special.erf(a)
    hi = a > 1.0
    out = np.where(hi, special.erfc(a) - special.erfc(b), out)
    lo = b < -1.0
    out = np.where(lo, special.erfc(-b) - special.erfc(-a), out)
    return out


def phi_weight(t, w: SpectralWindow):
    """(1/(sqrt(pi) M)) * integral over T in [X, X+Y] of h(t, T, M), via erf."""
    t = np.asarray(t, dtype=float)
    X, Y, M = w.X, w.Y, w.M
    out = 0.5 * (_erf_diff((X - t) / M, (X + Y - t) / M) + _erf_diff((X + t) / M, (X + Y + t) / M))
    return float(out) if out.ndim == 0 else out


def phi_weight_quadrature(t: float, w: SpectralWindow, reach: float = 40.0) -> float:
    """phi_weight by direct Gauss-Legendre integration in T.

    Only T within ``reach`` M of +-t contributes above double precision; that
    part of [X, X+Y] is cut into panels of width at most M/2, separately for
    the two Gaussians in h.
    """
    total = 0.0
    for c in (t, -t):
        a, b = max(w.X, c - reach * w.M), min(w.X + w.Y, c + reach * w.M)
        if b <= a:
            continue
        n = max(1, math.ceil(2 * (b - a) / w.M))
        edges = np.linspace(a, b, n + 1)
        mid, half = 0.5 * (edges[:-1] + edges[1:]), 0.5 * np.diff(edges)
        T = (mid[:, None] + half[:, None] * _GL_NODES).ravel()
        total += float(np.dot(np.repeat(half, _GL_NODES.size) * np.tile(_GL_WEIGHTS, n), np.exp(-(((T - c) / w.M) ** 2))))
    return total / (math.sqrt(math.pi) * w.M)


def phi_regime(t: float, w: SpectralWindow, c: float = 1.0) -> str:
    """'bulk', 'exterior' or 'transition' following the displayed regime split."""
    s = c * w.M * math.sqrt(math.log(w.X))
    if w.X + s < t < w.X + w.Y - s:
        return "bulk"
    if t < w.X - s or t > w.X + w.Y + s:
        return "exterior"
    return "transition"


# ---------------------------------------------------------------- zeta / w(t)


def zeta_one_line(t: float, pole_ok: bool = False) -> complex:
    """zeta(1 + 2it); |t| <= 0.01 needs ``pole_ok``."""
    t = float(t)
    if abs(t) <= 0.01 and not pole_ok:
        raise DomainError("zeta(1+2it) is evaluated only for |t| > 0.01 without pole handling")
    if t == 0:
        raise DomainError("zeta(1+2it) has a pole at t = 0")
    return zeta(complex(1.0, 2.0 * t))


def continuous_weight(t) -> np.ndarray:
    """w(t) = 1/|zeta(1+2it)|^2, extended by 0 at t = 0."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros_like(t)
    for i, v in enumerate(t):
        if v != 0.0:
            out[i] = 1.0 / abs(zeta(complex(1.0, 2.0 * v))) ** 2
    return out


def eta(t: float, n: int) -> float:
    """Divisor sum over ad = n of (a/d)^{it} (real)."""
    return tau_it(int(n), float(t))


# ---------------------------------------------------------------- Bessel transform


SERIES_X_MAX = 12.0
POISSON_X_MAX = 80.0
_POISSON_NODES, _POISSON_WEIGHTS = np.polynomial.legendre.leggauss(24)


def jbessel_poisson(nu, x: float, u_max: float = 40.0, panel: float = 0.25):
    """exp(-pi nu/2) J_{i nu}(x) from Poisson's integral, for large x.

    J_v(x) = 2 (x/2)^v / (sqrt(pi) Gamma(v + 1/2)) * int_0^{pi/2} sin(p)^{2v} cos(x cos p) dp,
    with p = (pi/2) e^{-u} so the logarithmic phase near p = 0 becomes a damped
    oscillation in u.  Returns (values, error bound).
    """
    if x > POISSON_X_MAX:
        raise NumericalError(f"J-Bessel quadrature not resolved for x = {x:g} > {POISSON_X_MAX:g}",
                             estimate=math.inf)
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    edges = np.arange(0.0, u_max + panel, panel)
    half = 0.5 * np.diff(edges)
    us = ((0.5 * (edges[1:] + edges[:-1]))[:, None] + half[:, None] * _POISSON_NODES[None, :]).ravel()
    ws = (half[:, None] * _POISSON_WEIGHTS[None, :]).ravel()
    p = 0.5 * math.pi * np.exp(-us)
    base = ws * p * np.cos(x * np.cos(p))
    logsin = np.log(np.sin(p))
    v = 1j * nu
    integral = np.exp(2.0 * np.outer(v, logsin)) @ base
    logpref = v * math.log(0.5 * x) - log_gamma(v + 0.5) - 0.5 * math.pi * nu
    pref = 2.0 / math.sqrt(math.pi) * np.exp(logpref)
    err = 16.0 * np.finfo(float).eps * np.abs(pref) * float(np.sum(np.abs(base))) + np.abs(pref) * math.exp(-u_max)
    return pref * integral, err


def jbessel_scaled(nu, x: float):
    """exp(-pi nu/2) J_{i nu}(x) and a rounding-error bound, for real nu.

    Ascending series for x <= 12, Poisson's integral beyond.
    """
    nu = np.asarray(nu, dtype=float)
    if x > SERIES_X_MAX:
        return jbessel_poisson(nu, x)
    lg = log_gamma(1.0 + 1j * nu)
    vals = kernels.jbessel_imag_scaled(nu, float(x), lg)
    lead = np.exp(-0.5 * math.pi * nu - lg.real)
    # sum of |terms| / |first term|: prod_j (x^2/4) / (j |j + i nu|)
    q = 0.25 * x * x
    ratio = np.ones_like(nu)
    acc = np.ones_like(nu)
    for j in range(1, int(2 * x) + 40):
        ratio = ratio * q / (j * np.hypot(j, nu))
        acc += ratio
    bound = 8.0 * np.finfo(float).eps * lead * acc
    return vals, bound


def _t_panels(t_max: float, panel: float = 0.5):
    n = max(4, int(math.ceil(t_max / panel)))
    edges = np.linspace(0.0, t_max, n + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    ts = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    ws = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return ts, ws


def bessel_transform_weighted(x: float, weight, t_max: float, tol: float = 1e-6):
    """2i * integral over R of J_{2it}(x) g(t) t / cosh(pi t) for an even real g.

    Folding t -> -t turns the integrand into -4 Im J_{2it}(x) g(t) t/cosh(pi t)
    on [0, t_max].  Returns (value, error estimate).
    """
    if not (x > 0):
        raise DomainError("Bessel transform needs x > 0")
    ts, ws = _t_panels(t_max)
    js, bound = jbessel_scaled(2.0 * ts, x)
    # J_{2it}(x) / cosh(pi t) = scaled * 2 / (1 + e^{-2 pi t})
    fac = ts * 2.0 / (1.0 + np.exp(-2.0 * math.pi * ts)) * weight(ts)
    value = -4.0 * float(np.dot(ws, js.imag * fac))
    err = 4.0 * float(np.dot(ws, bound * np.abs(fac)))
    scale = 4.0 * float(np.dot(ws, np.abs(js) * np.abs(fac)))
    if err > tol * max(abs(value), scale * 1e-3, 1e-300) and err > 1e-14:
        raise NumericalError(
            f"Bessel transform at x={x:g} lost accuracy (error bound {err:.2e})", estimate=err
        )
    return value, err


def bessel_transform(x: float, T: float, M: float) -> float:
    """The Bessel transform of h(., T, M) at x."""
    value, _ = bessel_transform_weighted(x, lambda t: h_test(t, T, M), T + 12.0 * M)
    return value


def bessel_transform_integrand(t, x: float, T: float, M: float):
    """2i J_{2it}(x) h(t) t / cosh(pi t) at real t (complex values)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    lg = log_gamma(1.0 + 2j * t)
    js = kernels.jbessel_imag_scaled(2.0 * t, float(x), lg)
    # for negative t the scaling exp(-pi nu/2) with nu = 2t is exp(-pi t)
    jfull_over_cosh = js * np.exp(math.pi * t) / np.cosh(math.pi * t)
    return 2j * jfull_over_cosh * h_test(t, T, M) * t


# ---------------------------------------------------------------- diagonal


def diagonal_term(w: SpectralWindow, panels_T: int = 16, with_tanh: bool = True) -> float:
    """(1/(pi^{3/2} M)) * double integral of h(t,T,M) tanh(pi t) t dt dT.

    The t integral runs over R; by evenness it is twice the integral over t >= 0.
    """
    edges = np.linspace(w.X, w.X + w.Y, panels_T + 1)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        Ts = 0.5 * (a + b) + 0.5 * (b - a) * _GL_NODES
        wT = 0.5 * (b - a) * _GL_WEIGHTS
        for T, wt in zip(Ts, wT):
            lo = max(0.0, T - 12.0 * w.M)
            hi = T + 12.0 * w.M
            ts, ws = _interval_gl(lo, hi, max(4, int(math.ceil((hi - lo) / w.M))))
            g = np.exp(-(((ts - T) / w.M) ** 2)) + np.exp(-(((ts + T) / w.M) ** 2))
            tanh = np.tanh(math.pi * ts) if with_tanh else 1.0
            inner = 2.0 * float(np.dot(ws, g * tanh * ts))
            if lo > 0:
                # Gaussian mass between 0 and lo is below e^{-144}; skip it
                pass
            total += wt * inner
    return total / (math.pi**1.5 * w.M)


def _interval_gl(a: float, b: float, panels: int):
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    return (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel(), (
        half[:, None] * _GL_WEIGHTS[None, :]
    ).ravel()


def diagonal_main_term(w: SpectralWindow) -> float:
    return (2.0 / math.pi) * w.X * w.Y + (1.0 / math.pi) * w.Y**2


# ---------------------------------------------------------------- L(1, sym^2)


def primes_upto(n: int) -> np.ndarray:
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p::p] = False
    return np.nonzero(sieve)[0]


def sym2_from_norm(form: MaassForm, grid: QuadratureGrid) -> float:
    """L(1, sym^2 u) from the Petersson norm of the Hecke-normalized form.

    Rankin-Selberg unfolding of the expansion used here gives
    L(1, sym^2 u) = 4 (1 + e^{-2 pi t}) * integral of u^2 over the surface.
    """
    from .automorphic import evaluate_on_grid

    v = evaluate_on_grid(form, grid) / form.scale
    return 4.0 * (1.0 + math.exp(-2.0 * math.pi * form.t)) * grid.integrate(v * v)


def sym2_euler(form: MaassForm, p_max: int = 1000) -> tuple[float, float]:
    """Partial Euler product of L(1, sym^2 u) over p <= p_max.

    Returns (value, tail estimate).  Primes beyond the stored coefficients raise
    a capacity error.  The tail estimate is the standard deviation of the
    omitted log-factors under Sato-Tate statistics, sqrt(sum 1/p^2) over the
    next primes, which is heuristic.
    """
    lam = form.hecke
    if p_max > lam.size:
        raise CapacityError(f"need lambda(p) for p <= {p_max}, have N_max = {lam.size}")
    ps = primes_upto(p_max)
    lp2 = lam[ps - 1] ** 2 - 1.0
    x = 1.0 / ps
    log_l = -np.sum(np.log1p(-lp2 * x + lp2 * x * x - x**3))
    tail_ps = primes_upto(max(p_max * p_max, 4))
    tail_ps = tail_ps[tail_ps > p_max]
    tail = math.exp(log_l) * math.sqrt(float(np.sum(1.0 / tail_ps.astype(float) ** 2)))
    return math.exp(log_l), tail


def harmonic_weights(forms: Sequence[MaassForm], grid: QuadratureGrid | None = None,
                     method: str = "auto", p_max: int = 1000) -> np.ndarray:
    """w_j = 2 pi / L(1, sym^2 u_j).

    ``method`` is "norm" (Petersson norm on ``grid``), "euler" (partial Euler
    product over p <= min(p_max, N_max)) or "auto" (norm when a grid is given).
    """
    if method == "auto":
        method = "norm" if grid is not None else "euler"
    out = []
    for f in forms:
        if method == "norm":
            if grid is None:
                raise DomainError("method 'norm' needs a quadrature grid")
            L = sym2_from_norm(f, grid)
        elif method == "euler":
            L, _ = sym2_euler(f, min(p_max, f.n_max))
        else:
            raise DomainError(f"unknown L(1,sym^2) method {method!r}")
        out.append(2.0 * math.pi / L)
    return np.array(out)


# ---------------------------------------------------------------- harnesses


def spectral_average(n: int, w: SpectralWindow, forms: Sequence[MaassForm],
                     weights: Sequence[float] | None = None, grid: QuadratureGrid | None = None,
                     method: str = "auto") -> float:
    """Sum over forms of w_j lambda_j(n) Phi(t_j)."""
    if not forms:
        raise DomainError("empty form list")
    if weights is None:
        weights = harmonic_weights(forms, grid=grid, method=method)
    phis = phi_weight(np.array([f.t for f in forms]), w)
    lam = np.array([hecke_eigenvalue(f, n) for f in forms])
    return float(np.sum(np.asarray(weights) * lam * phis))


def continuous_term(n: int, m: int, w: SpectralWindow, step: float = 0.05) -> float:
    """Integral over R of w(t) Phi(t) eta_t(n) eta_t(m) dt (even integrand)."""
    t_max = w.X + w.Y + w.margin
    ts, ws = _interval_gl(0.0, t_max, max(8, int(math.ceil(t_max / (8 * step)))))
    vals = continuous_weight(ts) * phi_weight(ts, w)
    if n != 1 or m != 1:
        vals = vals * np.array([eta(t, n) * eta(t, m) for t in ts])
    return 2.0 * float(np.dot(ws, vals))


def kloosterman_term(n: int, m: int, w: SpectralWindow, c_max: int = 500):
    """Sum over c <= c_max of S(n,m;c)/c times the Bessel transform of Phi.

    Returns (value, tail estimate).  The tail uses the Weil bound
    |S| <= tau(c) sqrt(c) (times gcd factor) and the envelope C T x^{3/4} with C
    fitted to the computed transforms.
    """
    t_max = w.X + w.Y + w.margin
    g = math.gcd(n, m)
    total = 0.0
    fit = 0.0
    T = w.X + w.Y
    xs = []
    for c in range(1, c_max + 1):
        x = 4.0 * math.pi * math.sqrt(n * m) / c
        jv, _ = bessel_transform_weighted(x, lambda t: phi_weight(t, w), t_max)
        s = kloosterman(n, m, c)
        total += s / c * jv
        fit = max(fit, abs(jv) / (T * x**0.75))
        xs.append(x)
    # sum over c > C of tau(c) c^{-1/2} c^{-3/4} ~ 4 C^{-1/4} (log C + 4)
    C = float(c_max)
    tail = fit * T * (4.0 * math.pi * math.sqrt(n * m)) ** 0.75 * math.sqrt(g) * 4.0 * C**-0.25 * (math.log(C) + 4.0)
    return total, tail


def trace_check(n: int, m: int, w: SpectralWindow, forms: Sequence[MaassForm],
                c_max: int = 500, weights: Sequence[float] | None = None,
                grid: QuadratureGrid | None = None, method: str = "auto") -> TraceReport:
    """Both sides of the trace formula integrated against Phi over the window."""
    if n < 1 or m < 1:
        raise DomainError("n and m must be >= 1")
    if weights is None:
        weights = harmonic_weights(forms, grid=grid, method=method)
    phis = phi_weight(np.array([f.t for f in forms]), w)
    lam = np.array([hecke_eigenvalue(f, n) * hecke_eigenvalue(f, m) for f in forms])
    cusp = float(np.sum(np.asarray(weights) * lam * phis))
    cont = continuous_term(n, m, w)
    diag = diagonal_term(w) if n == m else 0.0
    kl, tail = kloosterman_term(n, m, w, c_max)
    note = completeness_note(forms, w)
    return TraceReport(cusp, cont, diag, kl, tail, (cusp + cont) - (diag + kl), note, c_max)


def completeness_note(forms: Sequence[MaassForm], w: SpectralWindow) -> str:
    """Compare the number of supplied forms with the Weyl count over the window's support."""
    from .automorphic import weyl_count

    hi = w.X + w.Y + w.margin
    have = sum(1 for f in forms if f.t <= hi)
    expected = weyl_count(hi)
    top = max((f.t for f in forms), default=0.0)
    parts = [f"{have} forms with t <= {hi:.2f}; smooth Weyl count {expected:.1f}"]
    if top < hi:
        parts.append(f"GAP: no forms supplied above t = {top:.3f}; Phi({top:.2f}) = {phi_weight(top, w):.2e}")
    if have < expected - 3 * math.sqrt(max(expected, 1.0)):
        parts.append("GAP: count well below the Weyl estimate")
    return "; ".join(parts)
