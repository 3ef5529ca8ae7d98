import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maassjoint import kuznetsov as K
from maassjoint.errors import CapacityError, DomainError, NumericalError
from maassjoint.zeta import zeta


def _kloosterman_brute(a, b, c):
    return sum(cmath.exp(2j * math.pi * (a * d + b * pow(d, -1, c)) / c)
               for d in range(1, c + 1) if math.gcd(d, c) == 1).real if c > 1 else 1.0


def test_kloosterman_examples():
    assert K.kloosterman(1, 1, 1) == 1.0
    assert abs(K.kloosterman(1, 1, 3) + 1) < 1e-14
    assert abs(K.kloosterman(2, 3, 5) - _kloosterman_brute(2, 3, 5)) < 1e-13


@settings(max_examples=200)
@given(st.integers(-50, 50), st.integers(-50, 50), st.integers(1, 300))
def test_kloosterman_matches_brute_force(a, b, c):
    assert abs(K.kloosterman(a, b, c) - _kloosterman_brute(a, b, c)) < 1e-10


def test_kloosterman_table_matches_scalar():
    ns = [1, 2, 5, 9]
    tab = K.kloosterman_table(ns, 4, 77)
    assert np.allclose(tab, [K.kloosterman(n, 4, 77) for n in ns], atol=1e-12)


def test_kloosterman_symmetric():
    for c in (7, 12, 45):
        assert abs(K.kloosterman(3, 5, c) - K.kloosterman(5, 3, c)) < 1e-12


def test_weil_bound_small_moduli():
    tau = K.divisor_counts(2000)
    for c in range(1, 2001):
        s = K.kloosterman_table(np.arange(1, 11), 1, c)
        assert np.max(np.abs(s)) <= tau[c] * math.sqrt(c) + 1e-9


def test_twisted_multiplicativity():
    for c1 in range(1, 30):
        for c2 in range(1, 30):
            if math.gcd(c1, c2) != 1 or c1 * c2 > 200:
                continue
            i2, i1 = pow(c2, -1, c1) if c1 > 1 else 0, pow(c1, -1, c2) if c2 > 1 else 0
            for m, n in ((1, 1), (2, 3), (5, 7)):
                lhs = K.kloosterman(m, n, c1 * c2)
                rhs = K.kloosterman(m * i2, n * i2, c1) * K.kloosterman(m * i1, n * i1, c2)
                assert abs(lhs - rhs) < 1e-9


def test_kloosterman_rejects_bad_modulus():
    with pytest.raises(DomainError):
        K.kloosterman(1, 1, 0)


def test_divisor_counts():
    tab = K.divisor_counts(100)
    assert all(tab[n] == K.divisor_count(n) for n in range(1, 101))
    assert tab[12] == 6


# ---------------------------------------------------------------- h and Phi


def test_h_test_values():
    T, M = 7.0, 1.5
    assert K.h_test(T, T, M) == pytest.approx(1 + math.exp(-4 * T**2 / M**2))
    assert K.h_test(T + M, T, M) == pytest.approx(math.exp(-1) + math.exp(-((2 * T + M) ** 2) / M**2))
    assert K.h_test(-3.3, T, M) == K.h_test(3.3, T, M)


def test_phi_closed_form_matches_quadrature():
    rng = np.random.default_rng(11)
    for _ in range(20):
        X = rng.uniform(20, 500)
        Y = rng.uniform(0.2, 1.0) * X
        M = rng.uniform(1, Y / math.log(X))
        w = K.SpectralWindow(X, Y, M)
        for t in rng.uniform(X - 5 * M, X + Y + 5 * M, 5):
            assert abs(K.phi_weight(t, w) - K.phi_weight_quadrature(t, w)) < 1e-9


def test_phi_regimes():
    w = K.SpectralWindow(200.0, 100.0, 2.0)
    s = w.M * math.sqrt(math.log(w.X))
    assert abs(K.phi_weight(w.X + w.Y / 2, w) - 1) < 1e-6
    assert K.phi_weight(w.X - 10 * s, w) < w.X**-5
    assert abs(K.phi_weight(w.X, w) - 0.5) < w.M / w.X
    assert K.phi_regime(w.X + w.Y / 2, w) == "bulk"
    assert K.phi_regime(w.X - 10 * s, w) == "exterior"
    assert K.phi_regime(w.X, w) == "transition"


def test_window_validation():
    with pytest.raises(DomainError):
        K.SpectralWindow(10.0, 4.0, 3.0)
    with pytest.raises(DomainError):
        K.SpectralWindow(10.0, 20.0, 1.0)


# ---------------------------------------------------------------- zeta on the 1-line


def test_zeta_one_line():
    z = K.zeta_one_line(7.0)
    assert abs(z) ** 2 > 0
    assert abs(K.zeta_one_line(-7.0) - z.conjugate()) < 1e-14
    with pytest.raises(DomainError):
        K.zeta_one_line(0.005)


def test_zeta_one_line_second_evaluator():
    # Dirichlet series with an Euler-Maclaurin tail, cut at a different length
    s = complex(1, 2)
    n = 4000
    k = np.arange(1, n)
    head = np.sum(k ** (-s))
    tail = n ** (1 - s) / (s - 1) + 0.5 * n ** (-s) + s * n ** (-s - 1) / 12
    assert abs(K.zeta_one_line(1.0) - (head + tail)) < 1e-8
    assert abs(zeta(s, n_terms=60) - K.zeta_one_line(1.0)) < 1e-13


def test_continuous_weight():
    assert K.continuous_weight(0.0)[0] == 0.0
    assert K.continuous_weight(3.0)[0] == pytest.approx(1 / abs(zeta(1 + 6j)) ** 2)


def test_eta_is_divisor_sum():
    assert K.eta(0.0, 12) == 6.0
    assert K.eta(2.5, 6) == pytest.approx(2 * math.cos(2.5 * math.log(6)) + 2 * math.cos(2.5 * math.log(1.5)))


# ---------------------------------------------------------------- Bessel transform


@pytest.mark.parametrize("nu, x", [(3.0, 5.0), (10.0, 11.0), (20.0, 30.0), (6.0, 70.0), (0.5, 0.3)])
def test_jbessel_matches_mpmath(nu, x):
    v, bound = K.jbessel_scaled(np.array([nu]), x)
    ref = complex(mpmath.exp(-mpmath.pi * nu / 2) * mpmath.besselj(1j * nu, x))
    assert abs(v[0] - ref) < 1e-13
    assert bound[0] < 1e-12


def test_jbessel_range_limit():
    with pytest.raises(NumericalError):
        K.jbessel_scaled(np.array([1.0]), 100.0)


def test_bessel_transform_envelope():
    ratios = [abs(K.bessel_transform(x, T, M)) / (T * x**0.75)
              for T in (10, 20, 30) for M in (1, 2, 3) for x in np.geomspace(0.1, 20, 8)]
    # fitted constant stays O(1); measured about 0.024
    assert max(ratios) < 0.1


@pytest.mark.parametrize("T", [10.0, 20.0, 30.0])
@pytest.mark.parametrize("M", [1.0, 2.0, 3.0])
def test_bessel_transform_small_argument(T, M):
    assert abs(K.bessel_transform(0.01 * M * T, T, M)) < T**-5


def test_bessel_integrand_conjugate_symmetric():
    t = np.linspace(0.1, 20, 40)
    a = K.bessel_transform_integrand(t, 3.0, 10.0, 2.0)
    b = K.bessel_transform_integrand(-t, 3.0, 10.0, 2.0)
    assert np.allclose(b, np.conj(a), rtol=1e-12, atol=1e-15)
    # so the integral over R is real
    ts = np.linspace(-30, 30, 6001)
    vals = K.bessel_transform_integrand(ts, 3.0, 10.0, 2.0)
    assert abs(np.trapezoid(vals, ts).imag) < 1e-9
    assert np.trapezoid(vals, ts).real == pytest.approx(K.bessel_transform(3.0, 10.0, 2.0), rel=1e-6)


# ---------------------------------------------------------------- diagonal


def test_diagonal_example():
    w = K.SpectralWindow(100.0, 50.0, 5.0)
    assert abs(K.diagonal_term(w) - K.diagonal_main_term(w)) < 5 * w.M * w.Y


def test_diagonal_scales_with_y():
    a = K.diagonal_term(K.SpectralWindow(200.0, 20.0, 2.0))
    b = K.diagonal_term(K.SpectralWindow(200.0, 40.0, 2.0))
    assert abs(b / a - 2) < 0.1 * 2


def test_diagonal_tanh_saturates():
    w = K.SpectralWindow(60.0, 30.0, 3.0)
    a, b = K.diagonal_term(w), K.diagonal_term(w, with_tanh=False)
    assert abs(a - b) < 1e-10 * a


# ---------------------------------------------------------------- harnesses


@pytest.fixture(scope="module")
def desk_window():
    return K.SpectralWindow(10.0, 4.0, 1.5)


def test_spectral_average_desk(forms30, sym2_weights, desk_window):
    keep = [i for i, f in enumerate(forms30) if f.t <= 16]
    forms = [forms30[i] for i in keep]
    G = K.diagonal_term(desk_window)
    a1 = K.spectral_average(1, desk_window, forms, weights=sym2_weights[keep])
    a2 = K.spectral_average(2, desk_window, forms, weights=sym2_weights[keep])
    assert 0.5 <= a1 / G <= 2
    assert abs(a2) <= 0.5 * G


def test_spectral_average_far_form(forms30, sym2_weights, desk_window):
    top = len(forms30) - 1
    part = K.spectral_average(1, desk_window, [forms30[top]], weights=sym2_weights[top:])
    assert abs(part) < 1e-6 * sym2_weights[top]


def test_trace_check_off_diagonal(forms30, sym2_weights, desk_window):
    r = K.trace_check(1, 2, desk_window, forms30, c_max=50, weights=sym2_weights)
    assert r.geometric_diagonal == 0.0
    assert abs(r.mismatch) < 1e-6
    assert "GAP" in r.spectrum_completeness_note


def test_kloosterman_tail_estimate(desk_window):
    a, tail = K.kloosterman_term(1, 1, desk_window, 50)
    b, _ = K.kloosterman_term(1, 1, desk_window, 200)
    assert abs(a - b) < tail


def test_weights_routes_agree(forms30, grid31):
    f = forms30[0]
    L_norm = K.sym2_from_norm(f, grid31)
    L_euler, tail = K.sym2_euler(f, f.n_max)
    assert abs(L_norm - L_euler) < 2 * tail
    with pytest.raises(CapacityError):
        K.sym2_euler(f, 1000)


def test_primes():
    assert list(K.primes_upto(30)) == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert K.primes_upto(1).size == 0
