import numpy as np
import pytest

from maassjoint.automorphic import evaluate_form_array
from maassjoint.domain import build_grid
from maassjoint.errors import CapacityError, DomainError
from maassjoint.persist import (
    form_from_text,
    form_to_text,
    grid_from_text,
    grid_to_text,
    read_cache,
    read_form,
    write_form,
)


def test_form_round_trip(even_forms, odd_forms, tmp_path):
    rng = np.random.default_rng(5)
    x, y = rng.uniform(-0.5, 0.5, 100), rng.uniform(0.87, 3.0, 100)
    for form in (even_forms[0], odd_forms[1]):
        back = read_form(write_form(form, tmp_path))
        assert back.t == form.t and back.parity == form.parity
        assert np.array_equal(back.coefficients, form.coefficients)
        diff = evaluate_form_array(back, x, y) - evaluate_form_array(form, x, y)
        assert np.max(np.abs(diff)) <= 1e-12


def test_form_text_is_stable(even_forms):
    text = form_to_text(even_forms[3])
    assert form_to_text(form_from_text(text)) == text


def test_grid_round_trip():
    grid = build_grid(4.0, 1e-6, t_max=8.0)
    text = grid_to_text(grid)
    back = grid_from_text(text)
    assert grid_to_text(back) == text
    assert np.array_equal(back.weights, grid.weights)


def test_read_cache(even_forms, odd_forms, tmp_path):
    for f in (odd_forms[0], even_forms[1], even_forms[0]):
        write_form(f, tmp_path)
    forms = read_cache(tmp_path)
    assert [f.t for f in forms] == sorted(f.t for f in forms)
    assert len(read_cache(tmp_path, parity="even")) == 2


def test_read_cache_errors(tmp_path):
    with pytest.raises(CapacityError):
        read_cache(None)
    with pytest.raises(CapacityError):
        read_cache(tmp_path / "missing")
    with pytest.raises(CapacityError):
        read_cache(tmp_path)


@pytest.mark.parametrize("text", ["", "GRID v1 3\n", "MAASS v9 even 1 2 0\n", "MAASS v1 even 9.5 3 0\n1 1\n2 0.5\n"])
def test_malformed_records(text):
    with pytest.raises(DomainError):
        form_from_text(text)
