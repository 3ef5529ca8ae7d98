import math

import numpy as np
import pytest

from maassjoint.automorphic import find_forms, l2_normalize
from maassjoint.domain import build_grid, default_y_cutoff
from maassjoint.kuznetsov import sym2_from_norm
from maassjoint.moments import parseval_series

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def even_forms():
    """Every even form with 5 <= t <= 41.5 (60 coefficients each)."""
    return find_forms(41.5, parities=("even",), n_coeffs=60)


@pytest.fixture(scope="session")
def odd_forms():
    return find_forms(30.5, parities=("odd",), n_coeffs=60)


@pytest.fixture(scope="session")
def forms30(even_forms, odd_forms):
    return sorted([f for f in even_forms if f.t <= 30.5] + odd_forms, key=lambda f: f.t)


@pytest.fixture(scope="session")
def grid31():
    return build_grid(default_y_cutoff(31.0), 1e-10, t_max=31.0)


@pytest.fixture(scope="session")
def sym2_weights(forms30, grid31):
    return 2 * math.pi / np.array([sym2_from_norm(f, grid31) for f in forms30])


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def normalized_pair(even_forms, grid31):
    """The two lowest even forms scaled to mean square 1 on grid31."""
    return [l2_normalize(u, grid31) for u in even_forms[:2]]


@pytest.fixture(scope="session")
def parseval_reports(even_forms):
    grid = build_grid(10.0, 1e-10, t_max=40.0)
    f, g = even_forms[:2]
    return parseval_series(f, g, even_forms, grid, [20.0, 30.0, 41.0])
