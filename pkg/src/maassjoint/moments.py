"""Joint moments of Maass forms against smooth observables, and the Parseval
expansion of <f^2, g^2> over the spectrum.
"""

from __future__ import annotations

import math
import weakref
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .automorphic import EisensteinEvaluator, MaassForm, evaluate_on_grid, weyl_count, weyl_density
from .domain import VOLUME, Observable, QuadratureGrid
from .errors import CapacityError, DomainError
from .specfun import double_factorial

_EPS = np.finfo(float).eps


def gaussian_moment(n: int) -> int:
    """E X^n for a standard normal X: (n-1)!! for even n, 0 for odd n."""
    n = int(n)
    if n < 0:
        raise DomainError("moment order must be >= 0")
    return 0 if n % 2 else double_factorial(n - 1)


# ---------------------------------------------------------------- value cache

_VALUES: dict = {}


def form_values(form: MaassForm, grid: QuadratureGrid) -> np.ndarray:
    """Values of ``form`` on the grid nodes, memoized per grid object."""
    gid = id(grid)
    if gid not in _VALUES:
        _VALUES[gid] = {}
        weakref.finalize(grid, _VALUES.pop, gid, None)
    key = (form.parity, form.t, form.n_max, float(form.coefficients[0]), float(form.coefficients[-1]))
    store = _VALUES[gid]
    if key not in store:
        store[key] = evaluate_on_grid(form, grid)
    return store[key]


def unit_values(form: MaassForm, grid: QuadratureGrid, scale: float = 1.0) -> np.ndarray:
    """Grid values rescaled so that the integral of the square is ``scale``."""
    v = form_values(form, grid)
    return v * math.sqrt(scale / grid.integrate(v * v))


# ---------------------------------------------------------------- joint moments


@dataclass
class MomentSpec:
    factors: list  # [(MaassForm, power)]
    observable: Observable | None
    grid: QuadratureGrid
    require_normalized: bool = True

    def __post_init__(self):
        if not self.factors:
            raise DomainError("at least one factor is needed")
        if len(self.factors) > 4:
            raise DomainError("at most four distinct factors are supported")
        for f, a in self.factors:
            if int(a) != a or a < 1:
                raise DomainError("powers must be positive integers")
            if self.require_normalized and f.normalization != "l2":
                raise DomainError(f"form {f.label()} is not L2-normalized")

    @property
    def t_max(self) -> float:
        return max(f.t for f, _ in self.factors)


def _relative_value_error(form: MaassForm) -> float:
    # certified_error is an absolute error on Hecke-normalized coefficients (a(1) = 1)
    return form.certified_error


def joint_moment(spec: MomentSpec) -> tuple[float, float]:
    """Integral of psi * prod f_j^{a_j} over the truncated domain, with an error estimate.

    The estimate adds the grid error scaled by the integrand's size, a rounding
    bound on the weighted sum, and the first-order effect of each form's
    certified error (relative error times power).
    """
    grid = spec.grid
    total_freq = sum(a * f.t for f, a in spec.factors)
    if not grid.resolves(spec.t_max):
        raise CapacityError(
            f"grid x-spacing {grid.max_x_spacing:.3g} does not resolve t = {spec.t_max:.3f}"
        )
    obs = spec.observable
    if obs is None or obs.kind == "constant":
        mask = slice(None)
        psi = 1.0
    else:
        psi_all = obs(grid.x, grid.y)
        mask = np.nonzero(psi_all)[0]
        psi = psi_all[mask]
    integrand = np.full(grid.x[mask].shape, 1.0) * psi
    for f, a in spec.factors:
        integrand = integrand * form_values(f, grid)[mask] ** int(a)
    w = grid.weights[mask]
    value = float(np.dot(w, integrand))
    absint = float(np.dot(w, np.abs(integrand)))
    peak = float(np.max(np.abs(integrand))) if integrand.size else 0.0
    rel = sum(int(a) * _relative_value_error(f) for f, a in spec.factors)
    rounding = _EPS * absint * math.sqrt(max(integrand.size, 1))
    # the grid probes are exact up to frequency ~ t_max; products oscillate faster
    freq_factor = max(1.0, total_freq / max(spec.t_max, 1.0))
    err = grid.estimated_error * max(peak, 1.0) * freq_factor + rounding + rel * absint
    return value, err


@dataclass
class IndependenceReport:
    t_f: float
    t_g: float
    a: int
    b: int
    measured: float
    conjectured: float
    difference: float
    error_estimate: float
    grid_error: float
    y_cutoff: float

    def as_row(self) -> dict:
        return {
            "kind": "independence",
            "t_f": self.t_f,
            "t_g": self.t_g,
            "a": self.a,
            "b": self.b,
            "measured": self.measured,
            "conjectured": self.conjectured,
            "error_estimate": self.error_estimate,
            "grid_error": self.grid_error,
            "y_cutoff": self.y_cutoff,
        }


def observable_mass(obs: Observable | None, grid: QuadratureGrid) -> float:
    if obs is None or obs.kind == "constant":
        return grid.volume
    return grid.integrate(obs(grid.x, grid.y))


def independence_report(f: MaassForm, g: MaassForm, a: int, b: int,
                        observable: Observable | None, grid: QuadratureGrid) -> IndependenceReport:
    """Measured integral of psi f^a g^b against c_a c_b * integral of psi (no verdict)."""
    if f.parity == g.parity and abs(f.t - g.t) < 1e-9:
        raise DomainError("f and g must be distinct forms")
    value, err = joint_moment(MomentSpec([(f, a), (g, b)], observable, grid))
    target = gaussian_moment(a) * gaussian_moment(b) * observable_mass(observable, grid)
    return IndependenceReport(f.t, g.t, a, b, value, float(target), value - target, err,
                              grid.estimated_error, grid.y_cutoff)


# ---------------------------------------------------------------- Parseval


@dataclass
class ParsevalReport:
    direct_value: float
    constant_term: float
    cusp_sum: float
    eisenstein_integral: float
    cutoff: float
    residual: float
    eisenstein_cutoff: float = 0.0
    odd_skipped: int = 0
    terms: list = field(default_factory=list, repr=False)  # (t_j, <f^2,u_j><u_j,g^2>)
    warnings: list = field(default_factory=list)

    @property
    def relative_residual(self) -> float:
        return self.residual / self.direct_value


def _gap_warnings(ts: Sequence[float], cutoff: float) -> list[str]:
    out = []
    ts = sorted(ts)
    if not ts:
        return [f"GAP: no even basis forms below cutoff {cutoff:g}"]
    if ts[-1] < cutoff - 2.0:
        out.append(f"GAP: basis stops at t = {ts[-1]:.3f}, cutoff {cutoff:g}")
    for a, b in zip(ts[:-1], ts[1:]):
        # mean spacing of even forms near t is 2 / N'(t)
        spacing = 2.0 / max(weyl_density(0.5 * (a + b)), 0.1)
        if b - a > 4.0 * spacing:
            out.append(f"GAP: no forms between t = {a:.3f} and {b:.3f}")
    # even forms are roughly half of the smooth count
    expected = 0.5 * weyl_count(min(cutoff, ts[-1]))
    have = len(ts)
    if have < expected - 3.0 * math.sqrt(max(expected, 1.0)) - 2:
        out.append(f"GAP: {have} even forms below {min(cutoff, ts[-1]):.2f}, smooth estimate {expected:.1f}")
    return out


def _map(fn, items, threads: int):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def parseval_series(f: MaassForm, g: MaassForm, basis: Sequence[MaassForm], grid: QuadratureGrid,
                    cutoffs: Sequence[float], t_step: float = 0.25, eisenstein_cutoff: float | None = None,
                    threads: int = 0) -> list[ParsevalReport]:
    """Parseval reports for several cusp-form cutoffs sharing one set of inner products.

    f and g are rescaled to mean square 1; basis forms to unit L2 norm.  The
    Eisenstein term integrates |t| <= T_E (default 2 max(t_f, t_g)) with the
    trapezoid rule, using evenness in t.
    """
    if f.parity == g.parity and abs(f.t - g.t) < 1e-9:
        raise DomainError("f and g must be distinct forms")
    t_need = 2 * max(f.t, g.t) + max([u.t for u in basis] + [0.0])
    if not grid.resolves(0.5 * t_need):
        raise CapacityError(f"grid does not resolve products up to frequency {t_need:.2f}")
    F2 = unit_values(f, grid, VOLUME) ** 2
    G2 = unit_values(g, grid, VOLUME) ** 2
    direct = grid.integrate(F2 * G2)
    const = (3.0 / math.pi) * grid.integrate(F2) * grid.integrate(G2)

    even = [u for u in basis if u.parity == "even"]
    odd_skipped = len(basis) - len(even)

    def cusp_term(u):
        v = unit_values(u, grid, 1.0)
        return grid.integrate(F2 * v) * grid.integrate(G2 * v)

    terms = list(zip([u.t for u in even], _map(cusp_term, even, threads)))

    te = eisenstein_cutoff if eisenstein_cutoff is not None else 2.0 * max(f.t, g.t)
    tt = np.arange(0.0, te + 0.5 * t_step, t_step)

    def eis_term(t):
        e = EisensteinEvaluator(float(t))(grid.x, grid.y)
        return grid.integrate(F2 * e) * grid.integrate(G2 * e)

    ev = np.array(_map(eis_term, tt, threads))
    eis = 2.0 * float(np.trapezoid(ev, tt)) / (4.0 * math.pi)

    reports = []
    for cut in sorted(cutoffs):
        inside = [(t, c) for t, c in terms if t <= cut]
        cusp = float(sum(c for _, c in inside))
        resid = direct - (const + cusp + eis)
        warn = _gap_warnings([t for t, _ in inside], cut)
        reports.append(ParsevalReport(direct, const, cusp, eis, float(cut), resid, float(te),
                                      odd_skipped, inside, warn))
    return reports


def parseval_check(f: MaassForm, g: MaassForm, basis: Sequence[MaassForm], grid: QuadratureGrid,
                   cutoff: float | None = None, **kw) -> ParsevalReport:
    """Parseval report at a single cutoff (default: the largest basis t)."""
    if cutoff is None:
        cutoff = max(u.t for u in basis)
    return parseval_series(f, g, basis, grid, [cutoff], **kw)[0]


# ---------------------------------------------------------------- spectral decay


@dataclass
class DecayReport:
    t: np.ndarray
    coefficients: np.ndarray
    errors: np.ndarray
    exponent: float
    fitted_on: int


def observable_spectral_decay(observable: Observable, basis: Sequence[MaassForm],
                              grid: QuadratureGrid) -> DecayReport:
    """<psi, u_j> for unit-norm u_j and a power-law fit |<psi,u_j>| ~ C t_j^{exponent}.

    The fit uses coefficients that exceed ten times their error bar.
    """
    psi = observable(grid.x, grid.y) if observable.kind != "constant" else np.ones(grid.size)
    ts, cs, es = [], [], []
    absint = grid.integrate(np.abs(psi))
    for u in basis:
        v = unit_values(u, grid, 1.0)
        c = grid.integrate(psi * v)
        err = grid.estimated_error * 10.0 + _EPS * absint * math.sqrt(grid.size) + u.certified_error * absint
        ts.append(u.t)
        cs.append(c)
        es.append(err)
    ts, cs, es = np.array(ts), np.array(cs), np.array(es)
    keep = np.abs(cs) > 10.0 * es
    if keep.sum() >= 2:
        slope = float(np.polyfit(np.log(ts[keep]), np.log(np.abs(cs[keep])), 1)[0])
    else:
        slope = float("nan")
    return DecayReport(ts, cs, es, slope, int(keep.sum()))
