import math

import numpy as np
import pytest

from maassjoint.automorphic import (
    EisensteinEvaluator,
    MaassForm,
    evaluate_form,
    evaluate_form_array,
    hecke_eigenvalue,
    hecke_residual,
    l2_normalize,
    solve_maass,
    truncation_stability,
    weyl_count,
)
from maassjoint.domain import VOLUME, HalfPlanePoint, mobius
from maassjoint.errors import CapacityError, DomainError, NotFoundError

SQRT3_2 = math.sqrt(3) / 2


@pytest.fixture(scope="module")
def first_even(even_forms):
    return even_forms[0]


@pytest.fixture(scope="module")
def first_odd(odd_forms):
    return odd_forms[0]


def test_lowest_eigenvalues(first_even, first_odd):
    assert abs(first_even.t - 13.779751) < 1e-6
    assert abs(first_odd.t - 9.533695) < 1e-6


def test_forms_are_certified(even_forms, odd_forms):
    for f in even_forms + odd_forms:
        assert f.certified_error < 1e-7
        assert hecke_residual(f, 60) < 1e-6


def test_spectrum_count_follows_weyl(even_forms, odd_forms):
    # the smooth count is accurate to a few forms at this height
    assert abs(len([f for f in even_forms if f.t <= 30.5]) + len(odd_forms) - weyl_count(30.5)) < 4


def test_hecke_small_n(first_even):
    a = first_even.hecke
    assert a[0] == 1.0
    assert abs(a[3] - (a[1] ** 2 - 1)) < 1e-8
    assert abs(a[5] - a[1] * a[2]) < first_even.certified_error + 1e-9


def test_hecke_extension_beyond_storage(first_even):
    lam = first_even.hecke
    assert hecke_eigenvalue(first_even, 2 * 59) == pytest.approx(lam[1] * lam[58])
    with pytest.raises(CapacityError):
        hecke_eigenvalue(first_even, 67)


def test_odd_form_vanishes_on_imaginary_axis(first_odd):
    ys = np.linspace(SQRT3_2, 3.0, 20)
    assert np.max(np.abs(evaluate_form_array(first_odd, np.zeros_like(ys), ys))) < 1e-13


def test_even_form_reflection(first_even):
    xs = np.linspace(-0.5, 0.5, 11)
    ys = np.full_like(xs, 1.1)
    assert np.allclose(evaluate_form_array(first_even, xs, ys), evaluate_form_array(first_even, -xs, ys), atol=1e-13)


def test_cusp_decay(first_even):
    y = 10.0 + 5.0
    v = np.abs(evaluate_form_array(first_even, np.linspace(-0.5, 0.5, 9), np.full(9, y)))
    assert np.max(v) < 10.0 * math.exp(-2 * math.pi * y + math.pi * first_even.t / 2) * math.sqrt(y)


def _automorphy_points(rng, n):
    """Points z in F whose image -1/z also has y >= sqrt(3)/2."""
    out = []
    while len(out) < n:
        x, y = rng.uniform(-0.5, 0.5), rng.uniform(SQRT3_2, 1.15)
        if 1 <= x * x + y * y <= y / SQRT3_2:
            out.append(complex(x, y))
    return np.array(out)


@pytest.mark.parametrize("which", ["even", "odd"])
def test_automorphy_under_inversion(which, first_even, first_odd):
    f = first_even if which == "even" else first_odd
    z = _automorphy_points(np.random.default_rng(5), 100)
    w = mobius(((0, -1), (1, 0)), z)
    a = evaluate_form_array(f, z.real, z.imag)
    b = evaluate_form_array(f, w.real, w.imag)
    assert np.max(np.abs(a - b)) < 1e-7


def test_evaluate_reduces_first(first_even):
    z = HalfPlanePoint(0.3, 0.2)
    q = mobius(((0, -1), (1, 0)), z.z)
    assert evaluate_form(first_even, z) == pytest.approx(evaluate_form(first_even, HalfPlanePoint.from_complex(q)), abs=1e-10)


def test_laplace_eigenfunction(first_even):
    t = first_even.t
    x, y, h = np.array([0.13]), np.array([1.7]), 1e-3

    def f(dx, dy):
        return evaluate_form_array(first_even, x + dx, y + dy)[0]

    lap = (f(h, 0) + f(-h, 0) + f(0, h) + f(0, -h) - 4 * f(0, 0)) / h**2
    assert abs(-y[0] ** 2 * lap - (0.25 + t * t) * f(0, 0)) < 1e-4 * (0.25 + t * t)


def test_normalization_idempotent(first_even, grid31):
    g = l2_normalize(first_even, grid31)
    vals = evaluate_form_array(g, grid31.x, grid31.y)
    assert abs(grid31.integrate(vals**2) / VOLUME - 1) < 1e-4
    again = l2_normalize(g, grid31)
    assert abs(again.scale / g.scale - 1) < 1e-12
    assert g.normalization == "l2"


def test_truncation_stability(first_odd):
    assert truncation_stability(first_odd) < 1e-8


def test_solver_window_errors():
    with pytest.raises(DomainError):
        solve_maass("even", (13.0, 15.0))
    with pytest.raises(NotFoundError):
        solve_maass("even", (5.0, 5.5))


def test_form_validation():
    with pytest.raises(DomainError):
        MaassForm("both", 1.0, np.ones(3))
    with pytest.raises(DomainError):
        MaassForm("even", -1.0, np.ones(3))


# ---------------------------------------------------------------- Eisenstein


@pytest.mark.parametrize("t", [0.7, 3.0, 12.5])
def test_eisenstein_scattering_unitary(t):
    assert abs(abs(EisensteinEvaluator(t).scattering()) - 1) < 1e-12


@pytest.mark.parametrize("t", [0.7, 3.0, 12.5])
def test_eisenstein_automorphy(t):
    e = EisensteinEvaluator(t)
    z = _automorphy_points(np.random.default_rng(2), 20)
    w = mobius(((0, -1), (1, 0)), z)
    assert np.max(np.abs(e(z.real, z.imag) - e(w.real, w.imag))) < 1e-8


def test_eisenstein_continuous_at_zero():
    p = HalfPlanePoint(0.1, 1.3)
    v0 = EisensteinEvaluator(0.0).evaluate(p)
    vp, vm = EisensteinEvaluator(1e-3).evaluate(p), EisensteinEvaluator(-1e-3).evaluate(p)
    assert v0 == 0.0
    assert abs(vp) < 1e-2 and abs(vm) < 1e-2
    assert abs(EisensteinEvaluator(1e-2).evaluate(p)) > abs(vp)
