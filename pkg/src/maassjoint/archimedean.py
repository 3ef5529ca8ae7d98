"""Archimedean exponents Q, Q1 and the gamma-factor weight H.

The direct evaluators take the absolute-value expressions literally; the
piecewise ones use the case tables with half-open rows (upper end inclusive).
All functions accept scalars or numpy arrays.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError
from .specfun import LogScaleValue, log_gamma

_LOG_PI = math.log(math.pi)


def _out(v):
    v = np.asarray(v, dtype=float)
    return float(v) if v.ndim == 0 else v


def q_direct(tj, tf, tg):
    tj, tf, tg = (np.asarray(a, dtype=float) for a in (tj, tf, tg))
    h = 0.5 * tj
    return _out(np.abs(tf + h) + np.abs(tf - h) + np.abs(tg + h) + np.abs(tg - h) - 2 * tf - 2 * tg)


def q_piecewise(tj, tf, tg):
    """Case table for tf <= tg; tj is folded to |tj| (Q is even in tj)."""
    tj, tf, tg = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (tj, tf, tg)))
    if np.any(tf > tg):
        raise DomainError("q_piecewise needs t_f <= t_g; order the arguments")
    tj = np.abs(tj)
    out = np.select(
        [tj <= 2 * tf, tj <= 2 * tg],
        [np.zeros_like(tj), tj - 2 * tf],
        2 * tj - 2 * tf - 2 * tg,
    )
    return _out(out)


def q1_direct(tj, tf, tg, tk):
    tj, tf, tg, tk = (np.asarray(a, dtype=float) for a in (tj, tf, tg, tk))
    out = (
        np.abs(0.5 * tj + tf)
        + np.abs(0.5 * tj - tf)
        + 0.5 * (np.abs(tj + tg + tk) + np.abs(tj + tg - tk) + np.abs(tj - tg + tk) + np.abs(tj - tg - tk))
        - tj - 2 * tf - tk - tg
    )
    return _out(out)


def q1_regime(tf, tg, tk) -> str:
    """Which of the three case tables applies ('small', 'middle', 'large')."""
    lo, hi = abs(tg - tk), tg + tk
    if 2 * tf <= lo:
        return "small"
    if 2 * tf <= hi:
        return "middle"
    return "large"


def q1_piecewise(tj, tf, tg, tk):
    """Case tables for Q1, selected by where 2 t_f sits relative to t_g -+ t_k.

    The tables are written for t_k <= t_g; Q1 is symmetric in (t_g, t_k), so the
    two are swapped when t_k > t_g.
    """
    tj, tf, tg, tk = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (tj, tf, tg, tk)))
    if np.any(tj < 0) or np.any(tk < 0):
        raise DomainError("q1_piecewise needs t_j, t_k >= 0")
    if np.any(tf <= 0) or np.any(tg <= 0):
        raise DomainError("q1_piecewise needs t_f, t_g > 0")
    g = np.maximum(tg, tk)
    k = np.minimum(tg, tk)
    lo, hi, f2 = g - k, g + k, 2 * tf
    tail = 2 * tj - f2 - g - k

    small = np.select(
        [tj <= f2, tj <= lo, tj <= hi],
        [lo - tj, g - f2 - k, tj - f2],
        tail,
    )
    middle = np.select(
        [tj <= lo, tj <= f2, tj <= hi],
        [lo - tj, np.zeros_like(tj), tj - f2],
        tail,
    )
    large = np.select(
        [tj <= lo, tj <= hi, tj <= f2],
        [lo - tj, np.zeros_like(tj), tj - hi],
        tail,
    )
    out = np.where(f2 <= lo, small, np.where(f2 <= hi, middle, large))
    return _out(out)


# ------------------------------------------------------------------ gamma factors


def _log_gamma_r(s) -> np.ndarray:
    """log Gamma_R(s) = -(s/2) log pi + log Gamma(s/2)."""
    s = np.asarray(s, dtype=complex)
    return -0.5 * s * _LOG_PI + log_gamma(0.5 * s)


def _log_abs2(s) -> float:
    """log |Gamma_R(s)|^2, the log of Gamma_R(s) Gamma_R(conj s)."""
    return float(2.0 * np.real(_log_gamma_r(s)))


def log_linf_uj(s: float, tj: float) -> float:
    return _log_abs2(s + 1j * tj)


def log_linf_sym2(s: float, t: float) -> float:
    return float(np.real(_log_gamma_r(s))) + _log_abs2(s + 2j * t)


def log_linf_sym2_times(s: float, t: float, tj: float) -> float:
    """Degree-6 factor with shifts i(+-2t +- tj) and +-i tj."""
    return _log_abs2(s + 1j * (2 * t + tj)) + _log_abs2(s + 1j * (2 * t - tj)) + _log_abs2(s + 1j * tj)


def h_weight_log(tj: float, tf: float, tg: float, parity: str = "even") -> LogScaleValue:
    """The gamma-factor ratio H(t_j; t_f, t_g) in log scale (even u_j only)."""
    if parity != "even":
        raise DomainError("H is implemented for even u_j only")
    if not (tf > 0 and tg > 0):
        raise DomainError("t_f, t_g must be positive")
    if tj == 0:
        raise DomainError("t_j must be nonzero")
    tj = abs(float(tj))
    num = (
        log_linf_uj(0.5, tj)
        + 0.5 * log_linf_sym2_times(0.5, tf, tj)
        + 0.5 * log_linf_sym2_times(0.5, tg, tj)
    )
    den = log_linf_sym2(1.0, tf) + log_linf_sym2(1.0, tg) + log_linf_sym2(1.0, tj)
    value = num - den
    if not math.isfinite(value):
        raise DomainError(f"gamma pole met at t_j={tj}")
    return LogScaleValue(value, 1)


def h_envelope_log(tj: float, tf: float, tg: float) -> float:
    """log of exp(-pi Q/2) / (|tj| prod(1+|tj+-2tf|)^{1/4} prod(1+|tj+-2tg|)^{1/4})."""
    alg = 0.25 * sum(math.log1p(abs(tj + s * 2 * t)) for t in (tf, tg) for s in (1, -1))
    return -0.5 * math.pi * q_direct(tj, tf, tg) - alg - math.log(abs(tj))


def h_envelope_gap(tj: float, tf: float, tg: float) -> float:
    """log H minus the log envelope; bounded when the envelope has the right shape."""
    return h_weight_log(tj, tf, tg).log_magnitude - h_envelope_log(tj, tf, tg)


def watson_envelope_f2g(tf: float, tg: float) -> LogScaleValue:
    """exp(-pi/2 (|tf+tg/2|+|tf-tg/2|-2tf)) / (tg^{1/2} prod(1+|tg+-2tf|)^{1/4})."""
    if not (tf > 0 and tg > 0):
        raise DomainError("t_f, t_g must be positive")
    expo = abs(tf + 0.5 * tg) + abs(tf - 0.5 * tg) - 2 * tf
    alg = 0.5 * math.log(tg) + 0.25 * (math.log1p(abs(tg + 2 * tf)) + math.log1p(abs(tg - 2 * tf)))
    return LogScaleValue(-0.5 * math.pi * expo - alg, 1)


def sweep_rows(tjs, tfs, tgs, tks):
    """Rows (tj, tf, tg, tk, q_direct, q_piecewise, q1_direct, q1_piecewise, logH)."""
    rows = []
    for tj in tjs:
        for tf in tfs:
            for tg in tgs:
                a, b = (tf, tg) if tf <= tg else (tg, tf)
                for tk in tks:
                    logh = h_weight_log(tj, tf, tg).log_magnitude if tj > 0 else float("nan")
                    rows.append((tj, tf, tg, tk, q_direct(tj, tf, tg), q_piecewise(tj, a, b),
                                 q1_direct(tj, tf, tg, tk), q1_piecewise(tj, tf, tg, tk), logh))
    return rows
