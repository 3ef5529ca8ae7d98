"""Geometry of SL2(Z)\\H: reduction, hyperbolic measure, quadrature, bumps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import integrate

from .errors import CapacityError, DomainError, NumericalError

VOLUME = math.pi / 3.0
_IDENTITY = ((1, 0), (0, 1))
_EDGE_TOL = 1e-14
_MAX_NODES = 4_000_000


@dataclass(frozen=True)
class HalfPlanePoint:
    x: float
    y: float

    def __post_init__(self):
        if not (self.y > 0):
            raise DomainError(f"point must lie in the upper half-plane, got y={self.y}")

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)

    @classmethod
    def from_complex(cls, z: complex) -> "HalfPlanePoint":
        return cls(z.real, z.imag)


def mobius(g, z):
    """Action (az+b)/(cz+d) of an integer matrix on complex z (scalar or array)."""
    (a, b), (c, d) = g
    return (a * z + b) / (c * z + d)


def _matmul(g, h):
    (a, b), (c, d) = g
    (e, f), (k, l) = h
    return ((a * e + b * k, a * f + b * l), (c * e + d * k, c * f + d * l))


def reduce_to_fundamental(p: HalfPlanePoint, max_steps: int = 10_000):
    """Move ``p`` into the standard fundamental domain.

    Returns (reduced point, gamma) with gamma in SL2(Z) and gamma.p = reduced.
    On the boundary the representative with Re z <= 0 is chosen.
    """
    z = p.z
    g = _IDENTITY
    for _ in range(max_steps):
        n = math.floor(z.real + 0.5)
        if n:
            z -= n
            g = _matmul(((1, -n), (0, 1)), g)
        if abs(z) ** 2 < 1.0 - _EDGE_TOL:
            z = -1.0 / z
            g = _matmul(((0, -1), (1, 0)), g)
            continue
        break
    else:
        raise NumericalError("reduction did not terminate", estimate=abs(z))
    if abs(abs(z) ** 2 - 1.0) <= _EDGE_TOL and z.real > _EDGE_TOL:
        z = -1.0 / z
        g = _matmul(((0, -1), (1, 0)), g)
    if z.real >= 0.5 - _EDGE_TOL:
        z -= 1.0
        g = _matmul(((1, -1), (0, 1)), g)
    return HalfPlanePoint(z.real, z.imag), g


def in_fundamental_domain(x, y, tol: float = 1e-12):
    x = np.asarray(x)
    y = np.asarray(y)
    return (np.abs(x) <= 0.5 + tol) & (x * x + y * y >= 1.0 - tol)


def hyperbolic_distance(z, w):
    """Distance in H between complex points (broadcasting)."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    arg = 1.0 + np.abs(z - w) ** 2 / (2.0 * z.imag * w.imag)
    return np.arccosh(np.maximum(arg, 1.0))


@lru_cache(maxsize=4)
def short_matrices(bound: int = 3):
    """SL2(Z) elements with entries in [-bound, bound], one per +/- pair."""
    out = []
    rng = range(-bound, bound + 1)
    for a in rng:
        for b in rng:
            for c in rng:
                for d in rng:
                    # one representative of each +/- pair: (c, d) lexicographically positive
                    if a * d - b * c == 1 and (c > 0 or (c == 0 and d > 0)):
                        out.append((a, b, c, d))
    return tuple(((a, b), (c, d)) for a, b, c, d in out)


# ---------------------------------------------------------------- quadrature


@dataclass
class QuadratureGrid:
    """Nodes and hyperbolic-measure weights over {z in F : y <= y_cutoff}."""

    x: np.ndarray
    y: np.ndarray
    weights: np.ndarray
    y_cutoff: float
    estimated_error: float
    max_x_spacing: float = float("nan")

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if not (self.x.shape == self.y.shape == self.weights.shape):
            raise DomainError("grid arrays must have matching shapes")

    @property
    def size(self) -> int:
        return int(self.x.size)

    @property
    def nodes(self):
        return [HalfPlanePoint(float(a), float(b)) for a, b in zip(self.x, self.y)]

    @property
    def volume(self) -> float:
        return float(np.sum(self.weights))

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def resolves(self, t_max: float) -> bool:
        """Whether the x spacing is below 1/(4 t_max)."""
        return self.max_x_spacing < 1.0 / (4.0 * max(t_max, 1e-300))


def truncated_volume(y_cutoff: float) -> float:
    return VOLUME - 1.0 / y_cutoff


def truncated_moment(s: int, y_cutoff: float) -> float:
    """Closed form of the integral of y^s dmu over the truncated domain, s in {-1,-2}."""
    if s == -1:
        return 0.5 * (math.log(3.0) - 1.0 / y_cutoff**2)
    if s == -2:
        return (2.0 / math.sqrt(3.0) - 1.0 / y_cutoff**3) / 3.0
    if s == 0:
        return truncated_volume(y_cutoff)
    raise DomainError("closed form only for s in {0, -1, -2}")


def _gl_panels(a: float, b: float, panels: int, order: int):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    xs = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    ws = (half[:, None] * weights[None, :]).ravel()
    return xs, ws


def _oscillation_probe(m: int) -> float:
    """Exact integral of cos(2 pi m x) dmu over F (m >= 1; the cusp part vanishes).

    With x = sin(theta) the integrand of the bulk part is smooth and periodic-free.
    """
    val, _ = integrate.quad(
        lambda th: math.cos(2 * math.pi * m * math.sin(th)),
        -math.pi / 6, math.pi / 6, limit=400, epsabs=1e-14, epsrel=1e-12,
    )
    return val


def _power_probe(s: complex, y_cutoff: float) -> complex:
    """Integral of y^s dmu over the truncated domain for complex s != 1."""
    e = 0.5 * (s - 1)

    def part(fn):
        return integrate.quad(lambda x: fn((1 - x * x) ** e), -0.5, 0.5,
                              limit=400, epsabs=1e-14, epsrel=1e-12)[0]

    lower = complex(part(lambda v: v.real), part(lambda v: v.imag))
    return (y_cutoff ** (s - 1) - lower) / (s - 1)


def _assemble(y_cutoff: float, x_panels: int, y_panels: int, order: int, cusp_ratio: float):
    xs, wx = _gl_panels(-0.5, 0.5, x_panels, order)
    u, wu = _gl_panels(0.0, 1.0, y_panels, order)
    lower = np.sqrt(1.0 - xs * xs)
    top = min(2.0, y_cutoff)
    span = top - lower
    bx = np.repeat(xs, u.size)
    by = (lower[:, None] + span[:, None] * u[None, :]).ravel()
    bw = (wx[:, None] * span[:, None] * wu[None, :]).ravel() / by**2
    parts_x = [bx]
    parts_y = [by]
    parts_w = [bw]
    if y_cutoff > 2.0:
        edges = [2.0]
        while edges[-1] < y_cutoff:
            edges.append(min(edges[-1] * cusp_ratio, y_cutoff))
        gn, gw = np.polynomial.legendre.leggauss(order)
        for a, b in zip(edges[:-1], edges[1:]):
            yy = 0.5 * (a + b) + 0.5 * (b - a) * gn
            wy = 0.5 * (b - a) * gw / yy**2
            parts_x.append(np.repeat(xs, yy.size))
            parts_y.append(np.tile(yy, xs.size))
            parts_w.append((wx[:, None] * wy[None, :]).ravel())
    x = np.concatenate(parts_x)
    y = np.concatenate(parts_y)
    w = np.concatenate(parts_w)
    gaps = np.diff(np.concatenate(([-0.5], xs, [0.5])))
    return x, y, w, float(gaps.max())


def build_grid(
    y_cutoff: float,
    target_error: float = 1e-10,
    t_max: float = 10.0,
    order: int = 16,
    max_nodes: int = _MAX_NODES,
) -> QuadratureGrid:
    """Quadrature grid on the fundamental domain truncated at ``y_cutoff``.

    ``t_max`` is the largest spectral parameter the grid must resolve: the x
    spacing is kept below 1/(4 t_max) and oscillation probes cos(2 pi m x) up to
    the matching frequency are integrated against their exact values to give
    ``estimated_error``.
    """
    if not (y_cutoff >= 2.0):
        raise DomainError(f"y_cutoff must be >= 2, got {y_cutoff}")
    if not (target_error > 0):
        raise DomainError("target_error must be positive")
    t_max = max(float(t_max), 1.0)
    x_panels = max(2, math.ceil(t_max / 4.0))
    y_panels = max(2, math.ceil(t_max / 8.0))
    probes = sorted({1, 2, max(1, int(t_max / 2)), max(1, int(t_max))})
    exact = {m: _oscillation_probe(m) for m in probes}
    s_probe = 0.5 + 2j * t_max
    exact_power = _power_probe(s_probe, y_cutoff)
    log_ratio = min(math.log(1.5), 4.0 / t_max)
    while True:
        x, y, w, gap = _assemble(y_cutoff, x_panels, y_panels, order, math.exp(log_ratio))
        if gap >= 1.0 / (4.0 * t_max):
            x_panels += 1
            continue
        if x.size > max_nodes:
            raise CapacityError(
                f"grid needs more than {max_nodes} nodes for target_error={target_error:g}"
            )
        err = abs(w.sum() - truncated_volume(y_cutoff))
        err = max(err, abs(np.dot(w, 1.0 / y) - truncated_moment(-1, y_cutoff)))
        for m in probes:
            err = max(err, abs(np.dot(w, np.cos(2 * np.pi * m * x)) - exact[m]))
        err = max(err, abs(np.dot(w, y**s_probe) - exact_power))
        if err <= target_error:
            # summation roundoff of an O(1) integrand, random-walk model
            rounding = np.finfo(float).eps * float(w.sum()) * math.sqrt(x.size)
            return QuadratureGrid(x, y, w, float(y_cutoff), max(err, rounding), gap)
        x_panels = math.ceil(x_panels * 1.3)
        y_panels = math.ceil(y_panels * 1.3)
        log_ratio /= 1.3


def default_y_cutoff(t_max: float) -> float:
    return 8.0 + t_max / math.pi


# ---------------------------------------------------------------- observables


def _bump_profile(rho):
    rho = np.asarray(rho, dtype=float)
    out = np.zeros_like(rho)
    inside = rho < 1.0
    r2 = rho[inside] ** 2
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r2))
    return out


@dataclass(frozen=True)
class Observable:
    """Smooth test function on the modular surface.

    ``kind`` is "bump" (compactly supported, profile exp(1 - 1/(1-r^2)) in the
    hyperbolic distance to ``center`` divided by ``radius``) or "constant".
    """

    kind: str
    center: Optional[HalfPlanePoint] = None
    radius: float = 0.0
    images: tuple = field(default=(), repr=False)

    @classmethod
    def constant(cls) -> "Observable":
        return cls("constant")

    @property
    def support(self):
        """(y_min, y_max) of the support on the upper half-plane, or None."""
        if self.kind == "constant":
            return None
        y = self.center.y
        return (y * math.exp(-self.radius), y * math.exp(self.radius))

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "constant":
            return np.ones(np.broadcast(x, y).shape)
        z = x + 1j * y
        dist = np.full(z.shape, np.inf)
        for w in self.images:
            dist = np.minimum(dist, hyperbolic_distance(z, w))
        return _bump_profile(dist / self.radius)

    def evaluate(self, p: HalfPlanePoint) -> float:
        q, _ = reduce_to_fundamental(p)
        return float(self(q.x, q.y))


def make_bump(center: HalfPlanePoint, radius: float) -> Observable:
    """Bump of hyperbolic ``radius`` around ``center``, as a function on SL2(Z)\\H.

    Evaluation at a reduced point takes the minimum distance to the images of
    the center under short group elements, so the bump is automorphic.
    """
    if not (radius > 0):
        raise DomainError("radius must be positive")
    c, _ = reduce_to_fundamental(center)
    cz = c.z
    images = sorted({complex(round(v.real, 14), round(v.imag, 14))
                     for v in (mobius(g, cz) for g in short_matrices(3))},
                    key=lambda v: (v.real, v.imag))
    for g in short_matrices(3):
        if g == _IDENTITY or g == ((-1, 0), (0, -1)):
            continue
        d = float(hyperbolic_distance(cz, mobius(g, cz)))
        if d <= 2.0 * radius:
            raise DomainError(
                f"ball of radius {radius} at {cz} overlaps its image under {g} (distance {d:.4f})"
            )
    # every point of the ball must reduce to a point near the center's orbit
    if radius > 1.0:
        raise DomainError("radius above 1 is not supported by the short-orbit check")
    for ang in np.linspace(0.0, 2 * np.pi, 24, endpoint=False):
        bp = _point_at_distance(cz, radius * 0.999, ang)
        q, _ = reduce_to_fundamental(HalfPlanePoint(bp.real, bp.imag))
        d = min(float(hyperbolic_distance(q.z, w)) for w in images)
        if abs(d - radius * 0.999) > 1e-9:
            raise DomainError("ball boundary is not seen by the short-orbit evaluation")
    return Observable("bump", c, float(radius), tuple(images))


def _point_at_distance(c: complex, d: float, angle: float) -> complex:
    """Point at hyperbolic distance d from c in the direction ``angle``."""
    # move from i along the geodesic, then map i -> c by z -> y z + x
    w = complex(0.0, math.exp(d))
    # rotate about i by angle: elliptic element fixing i
    ca, sa = math.cos(angle / 2), math.sin(angle / 2)
    w = (ca * w + sa) / (-sa * w + ca)
    return c.imag * w + c.real
