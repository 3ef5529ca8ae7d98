"""Special functions: complex log-gamma, K_{it}, e(x), double factorials.

``log_gamma`` is a Stirling series with upward argument shifting; it is
written here rather than taken from scipy so that scipy can serve as an
independent check in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .errors import DomainError

# Bernoulli numbers B_2 .. B_26 as exact fractions.
_BERNOULLI = [
    Fraction(1, 6), Fraction(-1, 30), Fraction(1, 42), Fraction(-1, 30),
    Fraction(5, 66), Fraction(-691, 2730), Fraction(7, 6), Fraction(-3617, 510),
    Fraction(43867, 798), Fraction(-174611, 330), Fraction(854513, 138),
    Fraction(-236364091, 2730), Fraction(8553103, 6),
]
_STIRLING = np.array(
    [float(b / ((2 * k) * (2 * k - 1))) for k, b in enumerate(_BERNOULLI, start=1)]
)
_SHIFT_TARGET = 15.0
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class LogScaleValue:
    """A real number stored as sign * exp(log_magnitude)."""

    log_magnitude: float
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise DomainError(f"sign must be -1, 0 or 1, got {self.sign}")

    @classmethod
    def from_float(cls, v: float) -> "LogScaleValue":
        if v == 0:
            return cls(0.0, 0)
        return cls(math.log(abs(v)), 1 if v > 0 else -1)

    @classmethod
    def zero(cls) -> "LogScaleValue":
        return cls(0.0, 0)

    def __mul__(self, other):
        if not isinstance(other, LogScaleValue):
            other = LogScaleValue.from_float(float(other))
        if self.sign == 0 or other.sign == 0:
            return LogScaleValue.zero()
        return LogScaleValue(self.log_magnitude + other.log_magnitude, self.sign * other.sign)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, LogScaleValue):
            other = LogScaleValue.from_float(float(other))
        if other.sign == 0:
            raise ZeroDivisionError("division by a zero LogScaleValue")
        if self.sign == 0:
            return LogScaleValue.zero()
        return LogScaleValue(self.log_magnitude - other.log_magnitude, self.sign * other.sign)

    def __pow__(self, p: float):
        if self.sign == 0:
            if p <= 0:
                raise ZeroDivisionError("non-positive power of zero")
            return LogScaleValue.zero()
        if self.sign < 0 and float(p) != int(p):
            raise DomainError("fractional power of a negative value")
        sign = 1 if self.sign > 0 or int(p) % 2 == 0 else -1
        return LogScaleValue(self.log_magnitude * p, sign)

    def __float__(self):
        if self.sign == 0:
            return 0.0
        if self.log_magnitude > 709.78:
            return math.copysign(math.inf, self.sign)
        return self.sign * math.exp(self.log_magnitude)

    def value(self) -> float:
        """Plain float; may under- or overflow."""
        return float(self)


def _stirling(z):
    """log Gamma(z) for Re z >= _SHIFT_TARGET."""
    w = 1.0 / z
    w2 = w * w
    series = np.zeros_like(z)
    for c in _STIRLING[::-1]:
        series = series * w2 + c
    return (z - 0.5) * np.log(z) - z + _HALF_LOG_2PI + series * w


def log_gamma(z):
    """Principal branch of log Gamma(z) for scalar or array complex z.

    Poles (non-positive integers) raise DomainError.
    """
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex)).copy()
    pole = (z.imag == 0) & (z.real <= 0) & (z.real == np.round(z.real))
    if np.any(pole):
        raise DomainError(f"log_gamma pole at {z[pole][0].real:g}")
    shifts = np.maximum(0, np.ceil(_SHIFT_TARGET - z.real)).astype(int)
    correction = np.zeros_like(z)
    top = int(shifts.max()) if z.size else 0
    for k in range(top):
        m = shifts > k
        correction[m] += np.log(z[m] + k)
    out = _stirling(z + shifts) - correction
    return out[0] if scalar else out


def log_gamma_real(x):
    """log|Gamma(x)| for real x > 0, via the complex routine."""
    return np.real(log_gamma(np.asarray(x, dtype=float) + 0j))


def k_bessel_imag(t, y):
    """Scaled K-Bessel exp(pi t/2) K_{it}(y); ``y`` scalar or array, y > 0."""
    scalar = np.ndim(y) == 0
    ys = np.atleast_1d(np.asarray(y, dtype=float))
    if ys.size and not np.all(ys > 0):
        raise DomainError("K-Bessel argument y must be positive")
    if not math.isfinite(float(t)):
        raise DomainError("spectral parameter must be finite")
    out = kernels.kbessel_scaled(abs(float(t)), ys.ravel()).reshape(ys.shape)
    return float(out[0]) if scalar else out


def double_factorial(n: int) -> int:
    """n!! with (-1)!! = 0!! = 1."""
    n = int(n)
    if n < -1:
        raise DomainError(f"double factorial undefined for n={n}")
    return math.prod(range(n, 0, -2)) if n > 0 else 1


def additive_character(x):
    """e(x) = exp(2 pi i x), with x reduced mod 1 first."""
    frac = np.mod(np.asarray(x, dtype=float), 1.0)
    ang = 2.0 * np.pi * frac
    out = np.cos(ang) + 1j * np.sin(ang)
    return complex(out) if np.ndim(out) == 0 else out
