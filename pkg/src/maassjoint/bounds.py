"""Hecke-power combinatorics, coefficient functions, log-L upper bounds, prime
sums over Satake data, deviation counts and the Chernoff integration.

Satake data come either from computed forms (lambda(p) = 2 cos theta) or from
a synthetic model where the angles are independent across p and j:
"uniform" draws theta uniformly on [0, pi], "sato-tate" with density
(2/pi) sin^2 theta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import integrate, optimize, special

from .automorphic import MaassForm, weyl_count
from .errors import CapacityError, DomainError
from .kuznetsov import SpectralWindow, primes_upto

MODELS = ("computed", "uniform", "sato-tate")


# ---------------------------------------------------------------- combinatorics


def _check_kl(k: int, l: int):
    if k < 0 or l < 0 or l > k:
        raise DomainError(f"need 0 <= l <= k, got k={k}, l={l}")
    if (k - l) % 2:
        raise DomainError(f"k and l must have the same parity, got k={k}, l={l}")


def d_coefficient(k: int, l: int) -> int:
    """D_{k,l} = k!(l+1) / (((k+l)/2 + 1)! ((k-l)/2)!): coefficient of lambda(p^l) in lambda(p)^k."""
    _check_kl(k, l)
    num = math.factorial(k) * (l + 1)
    den = math.factorial((k + l) // 2 + 1) * math.factorial((k - l) // 2)
    q, r = divmod(num, den)
    if r:
        raise ArithmeticError(f"D_{{{k},{l}}} is not an integer")
    return q


@lru_cache(maxsize=None)
def d_coefficient_recursive(k: int, l: int) -> int:
    """D_{k,l} from D_{k,k} = 1 and D_{k,l} = binom(k, (k+l)/2) - sum_{m>0} D_{k,l+2m}."""
    _check_kl(k, l)
    if l == k:
        return 1
    head = math.comb(k, (k + l) // 2)
    return head - sum(d_coefficient_recursive(k, l + 2 * m) for m in range(1, (k - l) // 2 + 1))


def chebyshev_u(l: int, theta):
    """sin((l+1) theta) / sin(theta), continued by +-(l+1) at theta in {0, pi}."""
    theta = np.asarray(theta, dtype=float)
    s = np.sin(theta)
    small = np.abs(s) < 1e-8
    safe = np.where(small, 1.0, s)
    out = np.sin((l + 1) * theta) / safe
    # near theta = 0 or pi use the limit with its sign (cos theta)^l
    limit = (l + 1) * np.sign(np.cos(theta)) ** l
    return np.where(small, limit, out)


def power_expansion_residual(k: int, thetas=None) -> float:
    """max |(2 cos t)^k - sum_l D_{k,l} U_l(t)| / 2^k over the grid."""
    if thetas is None:
        thetas = np.linspace(0.0, math.pi, 1001)
    thetas = np.asarray(thetas, dtype=float)
    lhs = (2.0 * np.cos(thetas)) ** k
    rhs = np.zeros_like(thetas)
    for l in range(k % 2, k + 1, 2):
        rhs += d_coefficient(k, l) * chebyshev_u(l, thetas)
    return float(np.max(np.abs(lhs - rhs))) / 2.0**k


def central_sum(e: int) -> tuple[int, int]:
    """(sum over l of e!(l+1)/(((e+l)/2+1)!((e-l)/2)!), e!/(ceil(e/2)! floor(e/2)!))."""
    lhs = sum(d_coefficient(e, l) for l in range(e % 2, e + 1, 2))
    rhs = math.factorial(e) // (math.factorial((e + 1) // 2) * math.factorial(e // 2))
    return lhs, rhs


def compositions(n: int):
    """Ordered tuples of positive integers summing to n."""
    if n == 0:
        yield ()
        return
    for first in range(1, n + 1):
        for rest in compositions(n - first):
            yield (first,) + rest


def composition_sum(r: int, multinomial: bool = True) -> int:
    """Sum over compositions e of 2r of (2r)!/prod e_i! * prod e_i!/(ceil(e_i/2)! floor(e_i/2)!).

    With ``multinomial=False`` the factor (2r)!/prod e_i! is dropped.
    """
    total = 0
    for e in compositions(2 * r):
        prod = 1
        m = math.factorial(2 * r)
        for ei in e:
            prod *= math.comb(ei, ei // 2)
            m //= math.factorial(ei)
        total += m * prod if multinomial else prod
    return total


def composition_bound(r: int) -> int:
    return 2 ** (4 * r + 1)


# ---------------------------------------------------------------- coefficients


def lambda_coefficient(kind: str, theta_j, theta_fg=None, n: int = 1):
    """Lambda at p^n from Satake angles: 2cos(n tj), or (2cos(2n tf)+1) 2cos(n tj)."""
    theta_j = np.asarray(theta_j, dtype=float)
    base = 2.0 * np.cos(n * theta_j)
    if kind == "uj":
        out = base
    elif kind in ("sym2f-uj", "sym2g-uj"):
        if theta_fg is None:
            raise DomainError(f"{kind} needs the angle of f or g")
        out = (2.0 * np.cos(2 * n * np.asarray(theta_fg, dtype=float)) + 1.0) * base
    else:
        raise DomainError(f"unknown coefficient kind {kind!r}")
    return float(out) if out.ndim == 0 else out


def sym_power(k: int, theta):
    """lambda_{sym^k}(p) = U_k(theta)."""
    return chebyshev_u(k, theta)


# ---------------------------------------------------------------- Satake data


def sample_angles(model: str, size, rng: np.random.Generator) -> np.ndarray:
    if model == "uniform":
        return rng.uniform(0.0, math.pi, size)
    if model == "sato-tate":
        n = int(np.prod(size))
        out = np.empty(0)
        while out.size < n:
            th = rng.uniform(0.0, math.pi, 2 * (n - out.size) + 16)
            keep = rng.uniform(0.0, 1.0, th.size) < np.sin(th) ** 2
            out = np.concatenate([out, th[keep]])
        return out[:n].reshape(size)
    raise DomainError(f"unknown synthetic model {model!r}")


@dataclass
class SatakeSpectrum:
    """Spectral entries with Satake angles at the primes up to p_max.

    ``weights`` give the number of true forms each entry stands for (1 for
    computed data).  ``theta_f``/``theta_g`` are the angles of the two fixed
    forms entering the symmetric-square twists.
    """

    t: np.ndarray
    angles: np.ndarray  # (entries, primes)
    primes: np.ndarray
    theta_f: np.ndarray
    theta_g: np.ndarray
    model: str
    t_f: float
    t_g: float
    weights: np.ndarray = None
    seed: int | None = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise DomainError(f"model must be one of {MODELS}")
        self.t = np.asarray(self.t, dtype=float)
        self.angles = np.asarray(self.angles, dtype=float)
        if self.weights is None:
            self.weights = np.ones(self.t.size)
        if self.angles.shape != (self.t.size, self.primes.size):
            raise DomainError("angle table shape does not match entries x primes")

    @property
    def p_max(self) -> int:
        return int(self.primes[-1]) if self.primes.size else 1

    @property
    def lam(self) -> np.ndarray:
        return 2.0 * np.cos(self.angles)

    def in_window(self, w: SpectralWindow) -> np.ndarray:
        return (self.t > w.X) & (self.t <= w.X + w.Y)

    def lsym2(self, which: str) -> np.ndarray:
        th = self.theta_f if which == "f" else self.theta_g
        return sym_power(2, th)


def synthetic_spectrum(model: str, w: SpectralWindow, n_entries: int = 4000, p_max: int = 1000,
                       seed: int = 0, t_f: float | None = None, t_g: float | None = None,
                       total: float | None = None) -> SatakeSpectrum:
    """Entries uniform in the window, each standing for total/n_entries forms.

    ``total`` defaults to the smooth Weyl count of the window; t_f, t_g default
    to X/2 and X (free parameters of the model).
    """
    rng = np.random.default_rng(seed)
    primes = primes_upto(p_max)
    t = np.sort(rng.uniform(w.X, w.X + w.Y, n_entries))
    t[t <= w.X] = np.nextafter(w.X, np.inf)
    angles = sample_angles(model, (n_entries, primes.size), rng)
    th_f = sample_angles(model, primes.size, rng)
    th_g = sample_angles(model, primes.size, rng)
    if total is None:
        total = max(weyl_count(w.X + w.Y) - weyl_count(w.X), 1.0)
    weights = np.full(n_entries, total / n_entries)
    return SatakeSpectrum(t, angles, primes, th_f, th_g, model,
                          float(t_f if t_f is not None else 0.5 * w.X),
                          float(t_g if t_g is not None else w.X), weights, seed)


def computed_spectrum(forms: Sequence[MaassForm], f: MaassForm, g: MaassForm) -> SatakeSpectrum:
    """Angles arccos(lambda(p)/2) of computed forms at primes p <= min N_max."""
    n = min([u.n_max for u in forms] + [f.n_max, g.n_max])
    primes = primes_upto(n)

    def ang(u):
        return np.arccos(np.clip(u.hecke[primes - 1] / 2.0, -1.0, 1.0))

    others = [u for u in forms if u is not f and u is not g]
    return SatakeSpectrum(np.array([u.t for u in others]), np.array([ang(u) for u in others]).reshape(len(others), primes.size),
                          primes, ang(f), ang(g), "computed", f.t, g.t)


# ---------------------------------------------------------------- log-L bounds


def log_l_upper_bound(kind: str, theta_j: np.ndarray, primes: np.ndarray, x: float,
                      log_conductor: float, theta_fg: np.ndarray | None = None,
                      constant: float = 2.0) -> tuple[float, float]:
    """(prime-power sum, error envelope) of the log-L upper bound at cutoff x.

    ``log_conductor`` is log X (for u_j) or log(X + t_f) (for the twists);
    the envelope is constant * (log_conductor/log x + 1).
    """
    if not (x > 10):
        raise DomainError("x must exceed 10")
    _require_primes(primes, x)
    lx = math.log(x)
    total = 0.0
    for i, p in enumerate(primes):
        if p > x:
            break
        n = 1
        pn = float(p)
        while pn <= x:
            wgt = math.log(x / pn) / lx
            if wgt > 0:
                tf = None if theta_fg is None else theta_fg[i]
                lam = lambda_coefficient(kind, theta_j[i], tf, n)
                total += lam / (n * pn ** (0.5 + 1.0 / lx)) * wgt
            n += 1
            pn *= p
    return total, constant * (log_conductor / lx + 1.0)


# ---------------------------------------------------------------- prime sums


@dataclass(frozen=True)
class ExponentTriple:
    l1: float
    l2: float
    l3: float

    def __post_init__(self):
        if not (self.l1 > 0 and self.l2 > 0 and self.l3 > 0):
            raise DomainError("exponents must be positive")

    @property
    def square_sum(self) -> float:
        return self.l1**2 + self.l2**2 + self.l3**2

    @property
    def total(self) -> float:
        return self.l1 + self.l2 + self.l3

    @property
    def target_exponent(self) -> float:
        return sum(l * (l - 1) / 2 for l in (self.l1, self.l2, self.l3))

    def __add__(self, other: "ExponentTriple") -> "ExponentTriple":
        return ExponentTriple(self.l1 + other.l1, self.l2 + other.l2, self.l3 + other.l3)


def _ells(e) -> tuple[float, float, float]:
    """(l1, l2, l3) from an ExponentTriple or any 3-sequence (zeros allowed here)."""
    if isinstance(e, ExponentTriple):
        return e.l1, e.l2, e.l3
    l1, l2, l3 = (float(v) for v in e)
    return l1, l2, l3


def _twist(e, lsym2f, lsym2g):
    l1, l2, l3 = _ells(e)
    return l1 + l2 * np.asarray(lsym2f) + l3 * np.asarray(lsym2g)


def _require_primes(primes: np.ndarray, x: float):
    have = primes.size and primes[-1] >= x
    if not have and primes_upto(int(x)).size > primes.size:
        top = int(primes[-1]) if primes.size else 0
        raise CapacityError(f"data stop at p = {top}, need every p <= {x:g}")


def prime_sum_variance(e, x: float, y: float, primes: np.ndarray,
                       lsym2f: np.ndarray, lsym2g: np.ndarray) -> tuple[float, float]:
    """(sum over y < p <= x of (l1 + l2 lsym2f + l3 lsym2g)^2 / p, main term)."""
    if not (2 <= y <= x):
        raise DomainError("need 2 <= y <= x")
    _require_primes(primes, x)
    sel = (primes > y) & (primes <= x)
    a = _twist(e, lsym2f, lsym2g)[sel]
    left = float(np.sum(a * a / primes[sel]))
    return left, sum(v * v for v in _ells(e)) * math.log(math.log(x) / math.log(y))


def deviation_coefficients(e, spec: SatakeSpectrum, x: float, y: float,
                           log_x: float | None = None) -> np.ndarray:
    """Coefficient of lambda_j(p) in P(t_j; x, y), for every stored prime (0 beyond y).

    ``log_x`` may be given instead of x when x itself overflows.
    """
    lx = math.log(x) if log_x is None else float(log_x)
    if not (math.log(2) <= math.log(y) <= lx + 1e-12):
        raise DomainError("need 2 <= y <= x")
    p = spec.primes.astype(float)
    c = _twist(e, spec.lsym2("f"), spec.lsym2("g")) / p ** (0.5 + 1.0 / lx) * (1.0 - np.log(p) / lx)
    return np.where(p <= y, c, 0.0)


def _need_primes(spec: SatakeSpectrum, y: float):
    _require_primes(spec.primes, y)


def deviation_polynomial(spec: SatakeSpectrum, index, e: ExponentTriple, x: float, y: float):
    """P(t_j; x, y) for the entries selected by ``index``."""
    _need_primes(spec, y)
    c = deviation_coefficients(e, spec, x, y)
    return spec.lam[index] @ c


def _u2(theta: float) -> float:
    s = math.sin(theta)
    return math.sin(3 * theta) / s if abs(s) > 1e-12 else 3.0


def deviation_polynomial_reference(theta_j, spec: SatakeSpectrum, e: ExponentTriple, x: float, y: float) -> float:
    """Scalar loop over primes from the largest down; an independent evaluation path."""
    lx = math.log(x)
    total = 0.0
    for i in range(spec.primes.size - 1, -1, -1):
        p = int(spec.primes[i])
        if p > y:
            continue
        l1, l2, l3 = _ells(e)
        a = l1 + l2 * _u2(spec.theta_f[i]) + l3 * _u2(spec.theta_g[i])
        total += a * 2 * math.cos(theta_j[i]) / p ** (0.5 + 1 / lx) * (1 - math.log(p) / lx)
    return total


@dataclass
class DeviationCount:
    V: float
    count: float
    window: SpectralWindow
    x: float
    total: float = 0.0


def deviation_count(spec: SatakeSpectrum, V: float, w: SpectralWindow, x: float,
                    e: ExponentTriple) -> DeviationCount:
    """Weighted number of entries in the window with P(t_j; x, x) > V."""
    sel = spec.in_window(w)
    if not sel.any():
        raise DomainError("no spectral entries in the window")
    vals = deviation_polynomial(spec, sel, e, x, x)
    wts = spec.weights[sel]
    return DeviationCount(float(V), float(np.sum(wts[vals > V])), w, float(x), float(wts.sum()))


# ---------------------------------------------------------------- random-model tails


def _second_moment_lambda(model: str) -> float:
    return 2.0 if model == "uniform" else 1.0


def _twist_second_moment(model: str, e: ExponentTriple) -> float:
    """E (l1 + l2 A + l3 B)^2 for independent A, B distributed as lambda_{sym^2}(p)."""
    if model == "uniform":
        # lambda_{sym^2} = 1 + 2 cos 2 theta: mean 1, second moment 3
        m1, m2 = 1.0, 3.0
    else:
        m1, m2 = 0.0, 1.0
    l1, l2, l3 = e.l1, e.l2, e.l3
    return l1 * l1 + (l2 * l2 + l3 * l3) * m2 + 2 * l1 * (l2 + l3) * m1 + 2 * l2 * l3 * m1 * m1


def tail_variance(log_x: float, p_lo: float) -> float:
    """sum over p_lo < p <= x of p^{-1-2/log x} (1 - log p/log x)^2, by the prime number theorem.

    With v = log p / log x this is the integral of e^{-2v}(1-v)^2/v over
    [log p_lo / log x, 1].
    """
    if log_x <= math.log(p_lo):
        return 0.0
    v0 = math.log(p_lo) / log_x
    val, _ = integrate.quad(lambda v: math.exp(-2 * v) * (1 - v) ** 2 / v, v0, 1.0, limit=200)
    return val


def _log_mgf(model: str, s: np.ndarray):
    """log E exp(s lambda) and its first two derivatives in s."""
    s = np.abs(np.asarray(s, dtype=float))
    z = 2.0 * s
    small = s < 1e-4
    zs = np.where(small, 1.0, z)
    i0 = special.ive(0, zs)
    i1 = special.ive(1, zs)
    if model == "uniform":
        k = np.log(i0) + zs
        r = i1 / i0
        k1 = 2.0 * r
        k2 = 4.0 * (1.0 - r / zs - r * r)
        k = np.where(small, s * s, k)
        k1 = np.where(small, 2.0 * s, k1)
        k2 = np.where(small, 2.0, k2)
    else:
        ss = np.where(small, 1.0, s)
        k = np.log(i1) + zs - np.log(ss)
        q = i0 / i1
        k1 = 2.0 * q - 2.0 / ss
        # d/ds (2 I0(2s)/I1(2s)) = 4 (1 - q (q - 1/(2s)))
        k2 = 4.0 * (1.0 - q * (q - 1.0 / zs)) + 2.0 / ss**2
        k = np.where(small, 0.5 * s * s, k)
        k1 = np.where(small, s, k1)
        k2 = np.where(small, 1.0, k2)
    return k, k1, k2


@dataclass
class ModelTail:
    """Distribution of P(.; x, x) under the random model for one fixed f, g."""

    coeffs: np.ndarray  # explicit coefficients c_p for p <= p_max
    tail_var: float  # Gaussian variance of the part with p > p_max
    model: str

    def cumulants(self, h: float):
        k, k1, k2 = _log_mgf(self.model, h * self.coeffs)
        # k1 is odd in its argument and was evaluated at |h c|
        K = float(np.sum(k)) + 0.5 * h * h * self.tail_var
        K1 = math.copysign(1.0, h) * float(np.sum(k1 * np.abs(self.coeffs))) + h * self.tail_var
        K2 = float(np.sum(k2 * self.coeffs**2)) + self.tail_var
        return K, K1, K2

    @property
    def variance(self) -> float:
        return _second_moment_lambda(self.model) * float(np.sum(self.coeffs**2)) + self.tail_var

    def survival(self, V: float) -> float:
        """P(P > V) by the Lugannani-Rice saddle-point formula."""
        sd = math.sqrt(self.variance)
        if abs(V) < 1e-3 * sd:
            return 0.5
        hi = 1.0
        while self.cumulants(hi)[1] < V:
            hi *= 2.0
            if hi > 1e6:
                return 0.0
        lo = -1.0
        while self.cumulants(lo)[1] > V:
            lo *= 2.0
        h = optimize.brentq(lambda s: self.cumulants(s)[1] - V, lo, hi, xtol=1e-14)
        K, _, K2 = self.cumulants(h)
        wv = math.copysign(math.sqrt(max(2.0 * (h * V - K), 0.0)), h)
        u = h * math.sqrt(K2)
        if abs(wv) < 1e-6:
            return 0.5
        return float(special.ndtr(-wv) + math.exp(-0.5 * wv * wv) / math.sqrt(2 * math.pi) * (1.0 / u - 1.0 / wv))

    def chernoff(self, V: float) -> float:
        """inf over h >= 0 of exp(K(h) - h V), an upper bound for the survival function."""
        if V <= 0:
            return 1.0
        res = optimize.minimize_scalar(lambda s: self.cumulants(s)[0] - s * V,
                                       bounds=(0.0, 50.0 * V / self.variance + 10.0), method="bounded")
        return float(min(1.0, math.exp(res.fun)))


def model_tail(spec: SatakeSpectrum, e: ExponentTriple, log_x: float) -> ModelTail:
    """Random-model law of P(t_j; x, x) given the stored f, g angles.

    Primes up to the stored p_max are explicit; the rest contribute a Gaussian
    with the model variance, summed with the prime number theorem.
    """
    if spec.model == "computed":
        raise DomainError("the random-model tail needs a synthetic spectrum")
    c = deviation_coefficients(e, spec, 0.0, min(math.exp(min(log_x, 700.0)), spec.p_max), log_x=log_x)
    tv = 0.0
    if log_x > math.log(spec.p_max):
        tv = _second_moment_lambda(spec.model) * _twist_second_moment(spec.model, e) * tail_variance(log_x, spec.p_max)
    return ModelTail(c, tv, spec.model)


# ---------------------------------------------------------------- Chernoff integration


def gaussian_integral(sigma: float) -> tuple[float, float]:
    """(numerical integral of exp(-v^2/(2 sigma^2) + v) over |v| <= 12 sigma + 12, sqrt(2 pi) sigma e^{sigma^2/2})."""
    lim = 12.0 * sigma + 12.0
    peak = sigma * sigma
    # integrate exp(... - peak/2) to keep magnitudes moderate, then rescale
    f = lambda v: math.exp(-((v - peak) ** 2) / (2 * sigma * sigma))
    pts = [p for p in (peak - 5 * sigma, peak, peak + 5 * sigma) if -lim < p < lim]
    val, _ = integrate.quad(f, -lim, lim, points=pts, epsabs=0.0, epsrel=1e-13, limit=400)
    return val * math.exp(0.5 * peak), math.sqrt(2 * math.pi) * sigma * math.exp(0.5 * sigma * sigma)


def log_x_cutoff(V: float, w: SpectralWindow, t_g: float, eps: float, rule: str = "paper") -> float:
    """log x for x = (X+t_g)^{1/(eps V)}; rule "min" also caps x by Y^{(16-0.0001)/(9 eps V)}."""
    lx = math.log(w.X + t_g) / (eps * V)
    if rule == "min":
        lx = min(lx, math.log(w.Y) * (16 - 0.0001) / (9 * eps * V))
    elif rule != "paper":
        raise DomainError(f"unknown x rule {rule!r}")
    return lx


@dataclass
class ChernoffBreakdown:
    mu: float
    sigma2: float
    V_lo: float
    V_hi: float
    trivial_part: float
    moderate_part: float
    large_part: float
    delta_terms: float
    total_count: float
    gaussian_reference: float
    eps: float
    x_rule: str
    count_mode: str
    log_x_range: tuple
    nodes: int
    notes: list = field(default_factory=list)

    def rows(self):
        return [(k, v) for k, v in self.__dict__.items() if not isinstance(v, (list, tuple))]


def chernoff_moment_bound(spec: SatakeSpectrum, e: ExponentTriple, w: SpectralWindow,
                          eps: float = 0.1, C: float = 10.0, x_rule: str = "paper",
                          count_mode: str = "auto", nodes: int = 1000) -> tuple[float, ChernoffBreakdown]:
    """e^{mu} * integral of e^V B(V + mu) dV with B bounded by deviation counts.

    Below V_lo = sqrt(log log X) the count is the trivial total; on
    [V_lo, V_hi] it is the count of P(t_j; x, x) > (1 - 2 eps) V with
    x = exp(log_x_cutoff(V)); above V_hi it is zero.  The integral is split
    at V = sigma^2 into moderate and large deviations.  ``count_mode`` "entries" counts
    the stored entries (x is capped at the stored primes); "model" uses the
    expected count under the random model (saddle-point tail).
    """
    if not (0 < eps < 0.5):
        raise DomainError("eps must lie in (0, 1/2)")
    if count_mode == "auto":
        count_mode = "entries" if spec.model == "computed" else "model"
    sel = spec.in_window(w)
    if not sel.any():
        raise DomainError("no spectral entries in the window")
    total = float(spec.weights[sel].sum())
    llx = math.log(math.log(w.X + spec.t_g))
    mu = (-0.5 + eps) * e.total * llx
    sigma2 = e.square_sum * llx
    v_lo = math.sqrt(math.log(math.log(w.X)))
    v_hi = C * math.log(w.X + spec.t_g) / llx
    if v_hi <= v_lo:
        raise DomainError("empty V range; increase C")
    V = np.geomspace(v_lo, v_hi, nodes)
    lxs = np.array([log_x_cutoff(v, w, spec.t_g, eps, x_rule) for v in V])
    notes = []
    counts = np.empty_like(V)
    if count_mode == "entries":
        capped = np.clip(lxs, math.log(2.0), math.log(spec.p_max))
        if np.any(lxs > math.log(spec.p_max)):
            notes.append(f"x capped at stored p_max = {spec.p_max}")
        lam = spec.lam[sel]
        wts = spec.weights[sel]
        for i, (v, lx) in enumerate(zip(V, capped)):
            vals = lam @ deviation_coefficients(e, spec, 0.0, math.exp(lx), log_x=lx)
            counts[i] = float(np.sum(wts[vals > (1 - 2 * eps) * v]))
    elif count_mode == "model":
        cache = {}
        for i, (v, lx) in enumerate(zip(V, lxs)):
            key = round(lx, 6)
            if key not in cache:
                cache[key] = model_tail(spec, e, lx)
            counts[i] = total * cache[key].survival((1 - 2 * eps) * v)
    else:
        raise DomainError(f"unknown count mode {count_mode!r}")
    integrand = np.exp(V) * counts
    v_split = min(max(sigma2, v_lo), v_hi)
    lo = V <= v_split
    moderate_part = float(np.trapezoid(integrand[lo], V[lo])) if lo.sum() > 1 else 0.0
    hi = V >= v_split
    large_part = float(np.trapezoid(integrand[hi], V[hi])) if hi.sum() > 1 else 0.0
    trivial = total * math.exp(v_lo)
    delta = 0.0
    for tt in (spec.t_f, spec.t_g):
        if w.X < tt <= w.X + w.Y:
            delta += 1.0 * math.exp(e.total * v_hi)
            notes.append(f"fixed form at t = {tt:g} lies in the window; delta term uses exp(l*V_hi)")
    bound = math.exp(mu) * (trivial + moderate_part + large_part) + delta
    sigma = math.sqrt(sigma2)
    ref = math.sqrt(2 * math.pi) * sigma * math.exp(0.5 * sigma2)
    br = ChernoffBreakdown(mu, sigma2, v_lo, v_hi, math.exp(mu) * trivial, math.exp(mu) * moderate_part,
                           math.exp(mu) * large_part, delta, total, ref, eps, x_rule, count_mode,
                           (float(lxs.min()), float(lxs.max())), nodes, notes)
    return bound, br


def chernoff_exponent_fit(model: str, e: ExponentTriple, Xs: Sequence[float], y_frac: float = 0.5,
                          eps: float = 0.1, seed: int = 0, n_entries: int = 2000, p_max: int = 1000,
                          **kw) -> tuple[float, list]:
    """Slope of log(bound/(XY)) against log log X over the given X values."""
    rows = []
    for X in Xs:
        Y = y_frac * X
        M = max(1.0, min(Y / math.log(X), 2.0))
        w = SpectralWindow(X, Y, M)
        spec = synthetic_spectrum(model, w, n_entries=n_entries, p_max=p_max, seed=seed)
        b, br = chernoff_moment_bound(spec, e, w, eps=eps, **kw)
        rows.append((X, Y, b, b / (X * Y), br))
    lx = np.log(np.log(np.array([r[0] for r in rows])))
    ly = np.log(np.array([r[3] for r in rows]))
    slope = float(np.polyfit(lx, ly, 1)[0])
    return slope, rows


# ---------------------------------------------------------------- moments of P


def monte_carlo_moments(spec: SatakeSpectrum, e: ExponentTriple, x: float, r_max: int = 3):
    """Rows (r, mean of P^{2r} over entries, (2r)!/(r! 2^r) sigma^{2r}).

    sigma^2 = sum c_p^2 with c_p the smoothed coefficients of P, the analogue of
    sum a_p^2 / p.
    """
    _need_primes(spec, x)
    c = deviation_coefficients(e, spec, x, x)
    vals = spec.lam @ c
    sigma2 = float(np.sum(c * c))
    rows = []
    for r in range(1, r_max + 1):
        pred = math.factorial(2 * r) / (math.factorial(r) * 2**r) * sigma2**r
        rows.append((r, float(np.mean(vals ** (2 * r))), pred))
    return rows


def exact_fraction_check(k_max: int = 30) -> bool:
    """Closed form of D_{k,l} equals the recursion for every valid (k, l) with k <= k_max."""
    for k in range(k_max + 1):
        for l in range(k % 2, k + 1, 2):
            if Fraction(d_coefficient(k, l)) != Fraction(d_coefficient_recursive(k, l)):
                return False
    return True
