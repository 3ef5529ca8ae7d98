"""Hecke-Maass cusp forms, Eisenstein series and L2 normalization."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import optimize

from . import hejhal, kernels
from .domain import VOLUME, HalfPlanePoint, QuadratureGrid, reduce_to_fundamental
from .errors import CapacityError, DomainError, NotFoundError, NumericalError
from .specfun import log_gamma
from .zeta import tau_table, zeta

_SQRT3_2 = math.sqrt(3.0) / 2.0
ACCEPT_RESIDUAL = 1e-7
PARITIES = ("even", "odd")


@dataclass(frozen=True)
class MaassForm:
    """A Maass cusp form given by its Fourier coefficients a(1..N_max).

    ``normalization`` is "hecke" (a(1) = 1) or "l2" (all coefficients scaled by
    one positive number so that the mean square over the surface is 1).
    """

    parity: str
    t: float
    coefficients: np.ndarray = field(repr=False)
    normalization: str = "hecke"
    certified_error: float = 0.0

    def __post_init__(self):
        if self.parity not in PARITIES:
            raise DomainError(f"parity must be even or odd, got {self.parity!r}")
        if not (self.t > 0):
            raise DomainError("spectral parameter must be positive")
        if self.normalization not in ("hecke", "l2"):
            raise DomainError(f"unknown normalization {self.normalization!r}")
        object.__setattr__(self, "coefficients", np.asarray(self.coefficients, dtype=float))

    @property
    def n_max(self) -> int:
        return int(self.coefficients.size)

    @property
    def eigenvalue(self) -> float:
        return 0.25 + self.t**2

    @property
    def scale(self) -> float:
        """a(1); equals 1 in Hecke normalization."""
        return float(self.coefficients[0])

    @property
    def hecke(self) -> np.ndarray:
        """Hecke eigenvalues lambda(1..N_max)."""
        return self.coefficients / self.coefficients[0]

    def scaled(self, s: float, normalization: str | None = None) -> "MaassForm":
        return replace(
            self,
            coefficients=self.coefficients * s,
            normalization=normalization or self.normalization,
        )

    def label(self) -> str:
        return f"{self.parity}:{self.t:.9f}"


# ------------------------------------------------------------------ solving


def _candidates(ts, d, res):
    """Brackets where an eigenvalue may sit: sign changes and residual dips."""
    out = []
    for j in range(d.shape[1]):
        idx = np.nonzero(np.sign(d[:-1, j]) != np.sign(d[1:, j]))[0]
        out.extend((ts[i], ts[i + 1]) for i in idx)
    for i in range(1, len(ts) - 1):
        if res[i] <= res[i - 1] and res[i] <= res[i + 1]:
            out.append((ts[i - 1], ts[i + 1]))
    return out


def _refine(parity, lo, hi, m0=None, heights=None):
    """Locate an eigenvalue in [lo, hi]; None when the bracket holds only a pole."""

    def f(t, j):
        return hejhal.secular(parity, t, heights=heights, m0=m0)[0][j]

    def resid(t):
        _, s1, s2 = hejhal.secular(parity, t, heights=heights, m0=m0)
        return s1.residual + s2.residual

    root = None
    for j in (0, 1):
        flo, fhi = f(lo, j), f(hi, j)
        if np.sign(flo) != np.sign(fhi):
            r = optimize.brentq(lambda t: f(t, j), lo, hi, xtol=1e-14, rtol=1e-15)
            if resid(r) < ACCEPT_RESIDUAL:
                root = r
                break
    if root is None:
        m = optimize.minimize_scalar(resid, bounds=(lo, hi), method="bounded",
                                     options={"xatol": 1e-10})
        if m.fun > 1e-4:
            return None
        # polish on a narrow bracket around the minimum
        for w in (1e-8, 1e-6, 1e-4):
            a, b = max(lo, m.x - w), min(hi, m.x + w)
            for j in (0, 1):
                if np.sign(f(a, j)) != np.sign(f(b, j)):
                    r = optimize.brentq(lambda t: f(t, j), a, b, xtol=1e-14, rtol=1e-15)
                    if resid(r) < ACCEPT_RESIDUAL:
                        return r
        return m.x if m.fun < ACCEPT_RESIDUAL else None
    return root


def find_eigenvalues(parity: str, lo: float, hi: float, step: float = 0.005,
                     m0: int | None = None, heights=None) -> list[float]:
    """All spectral parameters of the given parity in [lo, hi] found by scanning."""
    if not (0 < lo < hi):
        raise DomainError("need 0 < lo < hi")
    n = max(3, int(math.ceil((hi - lo) / step)) + 1)
    ts = np.linspace(lo, hi, n)
    d = np.empty((n, 2))
    res = np.empty(n)
    for i, t in enumerate(ts):
        di, s1, s2 = hejhal.secular(parity, t, heights=heights, m0=m0)
        d[i] = di
        res[i] = s1.residual + s2.residual
    found: list[float] = []
    for a, b in sorted(_candidates(ts, d, res)):
        r = _refine(parity, a, b, m0=m0, heights=heights)
        if r is None or not (lo <= r <= hi):
            continue
        if all(abs(r - x) > 1e-7 for x in found):
            found.append(r)
    return sorted(found)


ALT_HEIGHTS = (0.7 * _SQRT3_2, 0.62 * _SQRT3_2)


def _coefficient_heights(t: float, n_coeffs: int):
    y0 = min(0.8 * _SQRT3_2, 0.9 * max(t, 4.0) / (2 * math.pi * n_coeffs))
    return y0, 0.93 * y0


def compute_coefficients(parity: str, t: float, n_coeffs: int):
    """a(1..n_coeffs) from two low collocation heights; returns (a, discrepancy, residual)."""
    sols = []
    for y in _coefficient_heights(t, n_coeffs):
        m0 = max(hejhal.truncation_for(t, y), n_coeffs + 2)
        sols.append(hejhal.solve_system(parity, t, y, m0))
    a = sols[0].coefficients[:n_coeffs]
    b = sols[1].coefficients[:n_coeffs]
    return a, float(np.max(np.abs(a - b))), max(s.residual for s in sols)


def default_n_coeffs(t: float, y_cutoff: float | None = None) -> int:
    from .domain import default_y_cutoff

    yc = y_cutoff if y_cutoff is not None else default_y_cutoff(t)
    return int(math.ceil(10.0 * yc * t / (2 * math.pi)))


def certify(parity: str, t: float, n_coeffs: int, truncation: int | None = None) -> MaassForm:
    """Build a form at a located eigenvalue and attach its error certificate.

    The certificate is the largest of: the collocation residuals, the change of t
    when the truncation grows by 10, the change of t under a second pair of
    collocation heights, and the coefficient discrepancy between two heights.
    """
    y1, y2 = hejhal.default_heights(t)
    m0 = truncation if truncation is not None else hejhal.truncation_for(t, y2)
    t_more = _refine(parity, t - 1e-6, t + 1e-6, m0=m0 + 10)
    t_alt = _refine(parity, t - 1e-6, t + 1e-6, heights=ALT_HEIGHTS)
    if t_more is None or t_alt is None:
        raise NumericalError(f"eigenvalue near {t} not reproduced by the certification solves")
    a, disc, resid = compute_coefficients(parity, t, n_coeffs)
    err = max(abs(t_more - t), abs(t_alt - t), disc, resid)
    return MaassForm(parity, float(t), a, "hecke", float(err))


def truncation_stability(form: MaassForm, extra: int = 10) -> float:
    """|t(M0 + extra) - t| with M0 the default truncation at the upper collocation height."""
    _, y2 = hejhal.default_heights(form.t)
    m0 = hejhal.truncation_for(form.t, y2)
    t_more = _refine(form.parity, form.t - 1e-6, form.t + 1e-6, m0=m0 + extra)
    if t_more is None:
        raise NumericalError(f"eigenvalue near {form.t} lost at truncation {m0 + extra}")
    return abs(t_more - form.t)


def solve_maass(parity: str, t_window: Sequence[float], n_coeffs: int | None = None,
                truncation: int | None = None, step: float = 0.005) -> MaassForm:
    """Locate a form of the given parity with t in ``t_window`` (length <= 1).

    When several eigenvalues lie in the window the lowest is returned.
    """
    lo, hi = float(t_window[0]), float(t_window[1])
    if not (0 < lo < hi) or hi - lo > 1.0 + 1e-12:
        raise DomainError("window must satisfy 0 < lo < hi <= lo + 1")
    ts = find_eigenvalues(parity, lo, hi, step=step, m0=truncation)
    if not ts:
        raise NotFoundError(f"no {parity} eigenvalue in [{lo}, {hi}]")
    t = ts[0]
    n = n_coeffs if n_coeffs is not None else default_n_coeffs(t)
    return certify(parity, t, n, truncation)


def find_forms(t_max: float, parities=PARITIES, t_min: float = 5.0, n_coeffs: int = 100,
               step: float = 0.005) -> list[MaassForm]:
    """All forms with t_min <= t <= t_max, sorted by t."""
    forms = []
    for par in parities:
        for t in find_eigenvalues(par, t_min, t_max, step=step):
            forms.append(certify(par, t, n_coeffs))
    return sorted(forms, key=lambda f: f.t)


def weyl_count(t: float) -> float:
    """Smooth main terms of the counting function of cusp forms with t_j <= t."""
    if t <= 1:
        return 0.0
    return t * t / 12.0 - (2 * t / math.pi) * math.log(t / (math.e * math.sqrt(math.pi / 2))) - 131.0 / 144.0


def weyl_density(t: float) -> float:
    """Derivative of weyl_count: expected number of forms per unit of t."""
    if t <= 1:
        return 0.0
    return t / 6.0 - (2 / math.pi) * (math.log(t / (math.e * math.sqrt(math.pi / 2))) + 1.0)


# --------------------------------------------------------------- Hecke data


def hecke_eigenvalue(form: MaassForm, n: int) -> float:
    """lambda(n), extended beyond N_max through the Hecke relations."""
    n = int(n)
    if n < 1:
        raise DomainError("n must be >= 1")
    lam = form.hecke
    if n <= lam.size:
        return float(lam[n - 1])
    out = 1.0
    m = n
    p = 2
    while p * p <= m:
        if m % p == 0:
            k = 0
            while m % p == 0:
                m //= p
                k += 1
            out *= _prime_power(lam, p, k)
        p += 1
    if m > 1:
        out *= _prime_power(lam, m, 1)
    return out


def _prime_power(lam, p: int, k: int) -> float:
    if p > lam.size:
        raise CapacityError(f"lambda({p}) not stored (N_max = {lam.size})")
    lp = lam[p - 1]
    prev, cur = 1.0, lp
    for _ in range(k - 1):
        prev, cur = cur, lp * cur - prev
    return float(cur) if k >= 1 else 1.0


def hecke_residual(form: MaassForm, bound: int = 100) -> float:
    """max |a(m)a(n) - sum_{d | (m,n)} a(mn/d^2)| over mn <= bound (Hecke scale)."""
    lam = form.hecke
    bound = min(bound, lam.size)
    worst = 0.0
    for m in range(1, bound + 1):
        for n in range(m, bound // m + 1):
            g = math.gcd(m, n)
            rhs = sum(lam[m * n // (d * d) - 1] for d in range(1, g + 1) if g % d == 0)
            worst = max(worst, abs(lam[m - 1] * lam[n - 1] - rhs))
    return worst


# -------------------------------------------------------------- evaluation


def terms_needed(t: float, y_min: float) -> int:
    return hejhal.truncation_for(t, y_min, eps=1e-17)


def kbessel_table(t: float, y: np.ndarray, n_terms: int) -> np.ndarray:
    """Array [n-1, i] = sqrt(y_i) Kt(2 pi n y_i) for n = 1..n_terms."""
    yu, inv = np.unique(y, return_inverse=True)
    n = np.arange(1, n_terms + 1)
    k = kernels.kbessel_scaled(t, (2 * math.pi * np.outer(n, yu)).ravel()).reshape(n_terms, yu.size)
    k *= np.sqrt(yu)[None, :]
    return k[:, inv]


def _fourier_sum(coeffs, parity, t, x, y):
    y_min = float(np.min(y))
    n_terms = terms_needed(t, y_min)
    if n_terms > coeffs.size:
        raise CapacityError(
            f"evaluation at y={y_min:.4g} needs {n_terms} coefficients, have {coeffs.size}"
        )
    tr = hejhal.trig(parity)
    out = np.zeros(np.shape(x))
    # blocks keep the (terms x points) work arrays small
    block = max(1, 2_000_000 // n_terms)
    for s in range(0, x.size, block):
        xs = x[s:s + block]
        ks = kbessel_table(t, y[s:s + block], n_terms)
        n = np.arange(1, n_terms + 1)[:, None]
        out[s:s + block] = np.einsum("n,ni->i", coeffs[:n_terms], ks * tr(2 * math.pi * n * xs[None, :]))
    return out


def evaluate_form_array(form: MaassForm, x, y) -> np.ndarray:
    """Values of the Fourier expansion at points assumed to have y >= sqrt(3)/2."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    return _fourier_sum(form.coefficients, form.parity, form.t, x, y)


def evaluate_form(form: MaassForm, z: HalfPlanePoint) -> float:
    """f(z), computed at the reduced representative of z."""
    p, _ = reduce_to_fundamental(z)
    return float(evaluate_form_array(form, [p.x], [p.y])[0])


def evaluate_on_grid(form: MaassForm, grid: QuadratureGrid) -> np.ndarray:
    return evaluate_form_array(form, grid.x, grid.y)


def l2_normalize(form: MaassForm, grid: QuadratureGrid, values=None) -> MaassForm:
    """Rescale so that (1/vol) * integral of f^2 over the surface equals 1."""
    if values is None:
        values = evaluate_on_grid(form, grid)
    norm2 = grid.integrate(values * values)
    if not (norm2 > 0) or not math.isfinite(norm2):
        raise NumericalError("L2 norm is not positive", estimate=norm2)
    if grid.estimated_error > 1e-3 * norm2:
        raise CapacityError("grid too coarse for normalization")
    s = math.sqrt(VOLUME / norm2)
    return form.scaled(s, "l2")


def petersson_norm(form: MaassForm, grid: QuadratureGrid) -> float:
    """Integral of f^2 over the (truncated) fundamental domain."""
    v = evaluate_on_grid(form, grid)
    return grid.integrate(v * v)


# -------------------------------------------------------------- Eisenstein


@dataclass(frozen=True)
class EisensteinEvaluator:
    """Real-normalized Eisenstein series at s = 1/2 + it.

    The value returned is E(z, 1/2+it) times the phase of xi(1+2it) (xi the
    completed zeta function), which is real and has the same absolute value as
    E(z, 1/2+it).
    """

    t: float
    truncation: int = 0

    @property
    def xi_log(self) -> complex:
        s = 1.0 + 2j * self.t
        return -0.5 * s * math.log(math.pi) + complex(log_gamma(0.5 * s)) + complex(np.log(zeta(s)))

    def scattering(self) -> complex:
        """phi(1/2+it) = xi(1-2it) / xi(1+2it)."""
        if self.t == 0:
            return -1.0 + 0j
        lx = self.xi_log
        return complex(np.exp(np.conj(lx) - lx))

    def constant_term(self, y):
        """The real-normalized constant term 2 sqrt(y) cos(t log y + arg xi(1+2it))."""
        y = np.asarray(y, dtype=float)
        if self.t == 0:
            return np.zeros_like(y)
        alpha = self.xi_log.imag
        return 2.0 * np.sqrt(y) * np.cos(self.t * np.log(y) + alpha)

    def coefficient_scale(self) -> float:
        """Factor in front of sum tau(n) sqrt(y) Kt(2 pi n y) cos(2 pi n x)."""
        if self.t == 0:
            return 0.0
        return 4.0 * math.exp(-0.5 * math.pi * abs(self.t) - self.xi_log.real)

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float).ravel()
        y = np.asarray(y, dtype=float).ravel()
        n_terms = max(terms_needed(abs(self.t), float(np.min(y))), self.truncation)
        coeffs = tau_table(n_terms, self.t) * self.coefficient_scale()
        t = max(abs(self.t), 0.0)
        return self.constant_term(y) + _fourier_sum(coeffs, "even", t, x, y)

    def evaluate(self, z: HalfPlanePoint) -> float:
        p, _ = reduce_to_fundamental(z)
        return float(self(p.x, p.y)[0])


def evaluate_eisenstein(e: EisensteinEvaluator, z: HalfPlanePoint) -> float:
    return e.evaluate(z)
