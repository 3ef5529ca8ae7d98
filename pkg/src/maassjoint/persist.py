"""Text records for forms and quadrature grids.

Floats are written with 17 significant digits, which round-trips IEEE doubles
exactly, so write -> read -> write is byte-identical.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .automorphic import MaassForm
from .domain import QuadratureGrid
from .errors import CapacityError, DomainError

FORM_MAGIC = "MAASS"
GRID_MAGIC = "GRID"
VERSION = "v1"
CACHE_ENV = "MAASSJOINT_CACHE"
_SUFFIX = ".maass"


def _g(v: float) -> str:
    return format(float(v), ".17g")


def form_to_text(form: MaassForm) -> str:
    lines = [f"{FORM_MAGIC} {VERSION} {form.parity} {_g(form.t)} {form.n_max} {_g(form.certified_error)}"]
    lines += [f"{n} {_g(a)}" for n, a in enumerate(form.coefficients, start=1)]
    return "\n".join(lines) + "\n"


def form_from_text(text: str) -> MaassForm:
    rows = text.strip().splitlines()
    if not rows:
        raise DomainError("empty form record")
    head = rows[0].split()
    if len(head) != 6 or head[0] != FORM_MAGIC:
        raise DomainError(f"not a form record: {rows[0]!r}")
    if head[1] != VERSION:
        raise DomainError(f"unsupported form record version {head[1]}")
    parity, t, n_max, err = head[2], float(head[3]), int(head[4]), float(head[5])
    coeffs = np.empty(n_max)
    if len(rows) - 1 != n_max:
        raise DomainError(f"form record announces {n_max} coefficients, has {len(rows) - 1}")
    for i, row in enumerate(rows[1:], start=1):
        n, a = row.split()
        if int(n) != i:
            raise DomainError(f"coefficient index {n} out of order")
        coeffs[i - 1] = float(a)
    norm = "hecke" if coeffs[0] == 1.0 else "l2"
    return MaassForm(parity, t, coeffs, norm, err)


def form_filename(form: MaassForm) -> str:
    return f"{form.parity}-{form.t:.9f}{_SUFFIX}"


def default_cache_dir() -> Path | None:
    d = os.environ.get(CACHE_ENV)
    return Path(d) if d else None


def write_form(form: MaassForm, cache_dir) -> Path:
    d = Path(cache_dir)
    d.mkdir(parents=True, exist_ok=True)
    path = d / form_filename(form)
    path.write_text(form_to_text(form))
    return path


def read_form(path) -> MaassForm:
    return form_from_text(Path(path).read_text())


def read_cache(cache_dir, parity: str | None = None) -> list[MaassForm]:
    """All forms stored in ``cache_dir``, sorted by t; CapacityError if none."""
    if cache_dir is None:
        raise CapacityError(f"no form cache given (set --cache or {CACHE_ENV})")
    d = Path(cache_dir)
    if not d.is_dir():
        raise CapacityError(f"form cache {d} does not exist")
    forms = [read_form(p) for p in sorted(d.glob("*" + _SUFFIX))]
    if parity is not None:
        forms = [f for f in forms if f.parity == parity]
    if not forms:
        raise CapacityError(f"form cache {d} holds no {parity or ''} forms".replace("  ", " "))
    return sorted(forms, key=lambda f: (f.t, f.parity))


def grid_to_text(grid: QuadratureGrid) -> str:
    lines = [f"{GRID_MAGIC} {VERSION} {grid.size} {_g(grid.y_cutoff)} {_g(grid.estimated_error)} {_g(grid.max_x_spacing)}"]
    lines += [f"{_g(a)} {_g(b)} {_g(c)}" for a, b, c in zip(grid.x, grid.y, grid.weights)]
    return "\n".join(lines) + "\n"


def grid_from_text(text: str) -> QuadratureGrid:
    rows = text.strip().splitlines()
    head = rows[0].split() if rows else []
    if len(head) != 6 or head[0] != GRID_MAGIC:
        raise DomainError("not a grid record")
    if head[1] != VERSION:
        raise DomainError(f"unsupported grid record version {head[1]}")
    n = int(head[2])
    if len(rows) - 1 != n:
        raise DomainError(f"grid record announces {n} nodes, has {len(rows) - 1}")
    data = np.array([[float(v) for v in r.split()] for r in rows[1:]]).reshape(n, 3)
    return QuadratureGrid(data[:, 0], data[:, 1], data[:, 2], float(head[3]), float(head[4]), float(head[5]))
