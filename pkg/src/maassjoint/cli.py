"""maassjoint command line: solve, moment, parseval, weights, trace, bounds, selftest.

Parameters come from flags and optionally a flat ``key = value`` file given by
``--config``; flags win.  Every command writes one CSV (header, rows, and a
trailing ``#`` line with the tool version and a hash of the configuration).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import CapacityError, MaassError, UsageError

log = logging.getLogger("maassjoint")


# ---------------------------------------------------------------- parameter types


def _window(s: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in str(s).split(":"))
    except ValueError:
        raise UsageError(f"window must look like lo:hi, got {s!r}") from None
    return lo, hi


def _floats(s: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in str(s).split(",") if v.strip())
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {s!r}") from None


def _bool(s) -> bool:
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {s!r}")


def _choice(*opts):
    def conv(s: str) -> str:
        if s not in opts:
            raise UsageError(f"expected one of {', '.join(opts)}, got {s!r}")
        return s
    conv.__name__ = "choice"
    return conv


# name, converter, default, help
COMMON = [
    ("cache", str, None, "form cache directory (default: $MAASSJOINT_CACHE)"),
    ("output", str, "-", "CSV output path, - for stdout"),
    ("seed", int, 0, "random seed"),
    ("threads", int, 0, "worker threads, 0 = auto"),
]

COMMANDS = {
    "solve": [
        ("parity", _choice("even", "odd"), "even", "form parity"),
        ("window", _window, None, "spectral window lo:hi (length <= 1)"),
        ("n_coeffs", int, 0, "number of coefficients, 0 = automatic"),
    ],
    "moment": [
        ("a", int, 2, "power of f"),
        ("b", int, 2, "power of g"),
        ("tf", float, None, "pick f nearest this t (default: lowest even form)"),
        ("tg", float, None, "pick g nearest this t (default: second lowest even form)"),
        ("bump", _floats, None, "observable bump x,y,radius (default: constant 1)"),
        ("y_cutoff", float, 10.0, "truncation height of the domain"),
        ("tol", float, 1e-10, "grid target error"),
    ],
    "parseval": [
        ("tf", float, None, "pick f nearest this t"),
        ("tg", float, None, "pick g nearest this t"),
        ("cutoffs", _floats, None, "cusp-form cutoffs (default: three up to the largest cached t)"),
        ("y_cutoff", float, 10.0, "truncation height of the domain"),
        ("tol", float, 1e-10, "grid target error"),
        ("t_step", float, 0.25, "Eisenstein trapezoid step"),
        ("t_eis", float, None, "Eisenstein cutoff (default 2 max(t_f, t_g))"),
    ],
    "weights": [
        ("sweep", _bool, False, "emit the default (t_j, t_f, t_g, t_k) sweep"),
        ("tj", _floats, None, "t_j values"),
        ("tf", _floats, None, "t_f values"),
        ("tg", _floats, None, "t_g values"),
        ("tk", _floats, None, "t_k values"),
    ],
    "trace": [
        ("n", int, 1, "first Hecke index"),
        ("m", int, 1, "second Hecke index"),
        ("X", float, None, "window start"),
        ("Y", float, None, "window length"),
        ("M", float, None, "window smoothing"),
        ("cmax", int, 500, "Kloosterman modulus cutoff"),
        ("forms", str, None, "form cache directory (overrides --cache)"),
    ],
    "bounds": [
        ("model", _choice("computed", "uniform", "sato-tate"), "sato-tate", "Satake data"),
        ("l1", float, 1.0, "exponent of L(1/2, u_j)"),
        ("l2", float, 1.0, "exponent of L(1/2, sym^2 f x u_j)"),
        ("l3", float, 1.0, "exponent of L(1/2, sym^2 g x u_j)"),
        ("X", float, 1e4, "window start"),
        ("Y", float, None, "window length (default X/2)"),
        ("M", float, 2.0, "window smoothing"),
        ("x_cutoff", _choice("paper", "min"), "paper", "rule for the prime cutoff x(V)"),
        ("eps", float, 0.1, "epsilon in mu and the deviation threshold"),
        ("C", float, 10.0, "upper end of the V range is C log(X+t_g)/log log(X+t_g)"),
        ("entries", int, 2000, "synthetic spectral entries"),
        ("p_max", int, 1000, "largest prime with explicit Satake angles"),
        ("t_f", float, None, "model parameter t_f (default X/2)"),
        ("t_g", float, None, "model parameter t_g (default X)"),
        ("nodes", int, 1000, "V-integration nodes"),
    ],
    "selftest": [],
}


# closed lower / open or closed upper limits checked before any work starts
RANGES = {
    "threads": (0, None), "n_coeffs": (0, 2000), "a": (1, 12), "b": (1, 12),
    "y_cutoff": (1.0, 60.0), "tol": (1e-14, 1e-2), "t_step": (1e-3, 5.0), "t_eis": (0.0, None),
    "n": (1, None), "m": (1, None), "cmax": (1, 10**6), "l1": (1e-9, None), "l2": (1e-9, None),
    "l3": (1e-9, None), "X": (1e-9, None), "Y": (1e-9, None), "M": (1e-9, None), "eps": (1e-9, 0.499),
    "C": (1e-9, None), "entries": (1, 10**7), "p_max": (2, 10**7), "nodes": (2, 10**6),
}


def check_ranges(params: dict) -> None:
    for k, v in params.items():
        if k not in RANGES or v is None:
            continue
        lo, hi = RANGES[k]
        for x in (v if isinstance(v, tuple) else (v,)):
            if not math.isfinite(x) or x < lo or (hi is not None and x > hi):
                span = f"[{lo}, {hi}]" if hi is not None else f">= {lo}"
                raise UsageError(f"--{k.replace('_', '-')} = {x} outside {span}")
    if params.get("window") is not None:
        lo, hi = params["window"]
        if not (0 < lo < hi <= lo + 1):
            raise UsageError(f"--window {lo}:{hi} must satisfy 0 < lo < hi <= lo + 1")


@dataclass
class RunConfig:
    command: str
    params: dict
    cache_dir: str | None = None
    output: str = "-"
    seed: int = 0
    threads: int = 0
    provenance: dict = field(default_factory=dict)

    def config_hash(self) -> str:
        blob = json.dumps({"command": self.command, "seed": self.seed, **self.params},
                          sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @property
    def n_threads(self) -> int:
        return self.threads if self.threads > 0 else (os.cpu_count() or 1)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="maassjoint", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"maassjoint {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    for cmd, opts in COMMANDS.items():
        sp = sub.add_parser(cmd)
        sp.add_argument("--config", default=None, help="key = value file")
        for name, conv, default, hlp in COMMON + opts:
            if conv is _bool:
                sp.add_argument(_flag(name), dest=name, nargs="?", const="true",
                                default=argparse.SUPPRESS, help=hlp)
            else:
                sp.add_argument(_flag(name), dest=name, default=argparse.SUPPRESS, help=hlp)
    return p


def read_config_file(path) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read config file {path}: {e}") from None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{i}: expected key = value, got {raw.strip()!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _convert(table, key, value, where):
    try:
        return table[key][0](value)
    except (TypeError, ValueError):
        raise UsageError(f"bad value {value!r} for {key} ({where})") from None


def parse_config(argv=None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    if not ns.command:
        raise UsageError("a subcommand is required: " + ", ".join(COMMANDS))
    flags = {k: v for k, v in vars(ns).items() if k not in ("command", "config")}
    table = {name: (conv, default) for name, conv, default, _ in COMMON + COMMANDS[ns.command]}
    merged, prov = {}, {}
    for name, (conv, default) in table.items():
        merged[name] = default
        prov[name] = "default"
    if ns.config:
        for k, v in read_config_file(ns.config).items():
            if k not in table:
                raise UsageError(f"unknown key {k!r} in {ns.config} for command {ns.command}")
            merged[k] = _convert(table, k, v, ns.config)
            prov[k] = "file"
    for k, v in flags.items():
        if prov.get(k) == "file":
            log.info("flag --%s overrides the config file value", k)
        merged[k] = _convert(table, k, v, "flag " + _flag(k))
        prov[k] = "flag"
    check_ranges(merged)
    common = {k: merged.pop(k) for k in ("cache", "output", "seed", "threads")}
    cache = common["cache"] or os.environ.get("MAASSJOINT_CACHE")
    return RunConfig(ns.command, merged, cache, common["output"], int(common["seed"]),
                     int(common["threads"]), prov)


# ---------------------------------------------------------------- CSV output


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return v


def write_csv(cfg: RunConfig, header, rows, notes=()) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    for n in notes:
        buf.write(f"# note: {n}\n")
    buf.write(f"# maassjoint {__version__} config-hash {cfg.config_hash()}\n")
    text = buf.getvalue()
    if cfg.output == "-":
        sys.stdout.write(text)
    else:
        Path(cfg.output).write_text(text)
    return text


# ---------------------------------------------------------------- commands


def _pick(forms, t, skip=()):
    pool = [f for f in forms if f.parity == "even" and f not in skip]
    if not pool:
        raise CapacityError("the cache holds too few even forms")
    if t is None:
        return pool[0]
    return min(pool, key=lambda f: abs(f.t - t))


def cmd_solve(cfg: RunConfig) -> int:
    from .automorphic import hecke_residual, solve_maass
    from .persist import write_form

    p = cfg.params
    if p["window"] is None:
        raise UsageError("solve needs --window lo:hi")
    form = solve_maass(p["parity"], p["window"], n_coeffs=p["n_coeffs"] or None)
    path = write_form(form, cfg.cache_dir) if cfg.cache_dir else ""
    write_csv(cfg, ["parity", "t", "n_max", "certified_error", "hecke_residual", "cache_file"],
              [[form.parity, form.t, form.n_max, form.certified_error, hecke_residual(form), str(path)]])
    return 0


def _grid(p, t_max):
    from .domain import build_grid

    return build_grid(p["y_cutoff"], p["tol"], t_max=t_max)


def cmd_moment(cfg: RunConfig) -> int:
    from .automorphic import l2_normalize
    from .domain import HalfPlanePoint, make_bump
    from .moments import independence_report
    from .persist import read_cache

    p = cfg.params
    forms = read_cache(cfg.cache_dir)
    f = _pick(forms, p["tf"])
    g = _pick(forms, p["tg"], skip=(f,))
    grid = _grid(p, max(f.t, g.t))
    f, g = l2_normalize(f, grid), l2_normalize(g, grid)
    obs = None
    if p["bump"] is not None:
        if len(p["bump"]) != 3:
            raise UsageError("--bump needs x,y,radius")
        obs = make_bump(HalfPlanePoint(p["bump"][0], p["bump"][1]), p["bump"][2])
    rep = independence_report(f, g, p["a"], p["b"], obs, grid).as_row()
    write_csv(cfg, list(rep), [list(rep.values())])
    return 0


def cmd_parseval(cfg: RunConfig) -> int:
    from .moments import parseval_series
    from .persist import read_cache

    p = cfg.params
    forms = read_cache(cfg.cache_dir)
    f = _pick(forms, p["tf"])
    g = _pick(forms, p["tg"], skip=(f,))
    top = max(u.t for u in forms)
    cutoffs = p["cutoffs"] or tuple(round(top * s, 6) for s in (0.5, 0.75, 1.0))
    grid = _grid(p, 0.5 * (2 * max(f.t, g.t) + top))
    reps = parseval_series(f, g, forms, grid, cutoffs, t_step=p["t_step"],
                           eisenstein_cutoff=p["t_eis"], threads=cfg.n_threads)
    rows = [[r.cutoff, r.direct_value, r.constant_term, r.cusp_sum, r.eisenstein_integral,
             r.residual, r.relative_residual, len(r.terms), r.odd_skipped] for r in reps]
    notes = sorted({w for r in reps for w in r.warnings})
    write_csv(cfg, ["cutoff", "direct", "constant_term", "cusp_sum", "eisenstein_integral",
                    "residual", "relative_residual", "terms", "odd_skipped"], rows, notes)
    return 0


DEFAULT_SWEEP = {
    "tj": tuple(float(v) for v in np.round(np.linspace(0.5, 100.0, 40), 6)),
    "tf": (5.0, 13.75, 22.5, 31.25, 40.0),
    "tg": (5.0, 13.75, 22.5, 31.25, 40.0),
    "tk": (5.0, 20.0),
}


def cmd_weights(cfg: RunConfig) -> int:
    from .archimedean import sweep_rows

    p = cfg.params
    if p["sweep"]:
        axes = {k: p[k] or DEFAULT_SWEEP[k] for k in DEFAULT_SWEEP}
    else:
        missing = [k for k in DEFAULT_SWEEP if p[k] is None]
        if missing:
            raise UsageError("weights needs --sweep or all of --tj --tf --tg --tk")
        axes = {k: p[k] for k in DEFAULT_SWEEP}
    rows = sweep_rows(axes["tj"], axes["tf"], axes["tg"], axes["tk"])
    write_csv(cfg, ["t_j", "t_f", "t_g", "t_k", "q_direct", "q_piecewise", "q1_direct",
                    "q1_piecewise", "logH"], rows)
    return 0


def cmd_trace(cfg: RunConfig) -> int:
    from .kuznetsov import SpectralWindow, trace_check
    from .persist import read_cache

    p = cfg.params
    if None in (p["X"], p["Y"], p["M"]):
        raise UsageError("trace needs --X --Y --M")
    w = SpectralWindow(p["X"], p["Y"], p["M"])
    forms = read_cache(p["forms"] or cfg.cache_dir)
    rep = trace_check(p["n"], p["m"], w, forms, c_max=p["cmax"])
    row = rep.as_row()
    write_csv(cfg, list(row), [list(row.values())], [rep.spectrum_completeness_note])
    return 0


def cmd_bounds(cfg: RunConfig) -> int:
    from .bounds import ExponentTriple, chernoff_moment_bound, computed_spectrum, synthetic_spectrum
    from .kuznetsov import SpectralWindow
    from .persist import read_cache

    p = cfg.params
    Y = p["Y"] if p["Y"] is not None else 0.5 * p["X"]
    w = SpectralWindow(p["X"], Y, p["M"])
    e = ExponentTriple(p["l1"], p["l2"], p["l3"])
    if p["model"] == "computed":
        forms = read_cache(cfg.cache_dir)
        f = _pick(forms, p["t_f"])
        g = _pick(forms, p["t_g"], skip=(f,))
        spec = computed_spectrum(forms, f, g)
    else:
        spec = synthetic_spectrum(p["model"], w, n_entries=p["entries"], p_max=p["p_max"],
                                  seed=cfg.seed, t_f=p["t_f"], t_g=p["t_g"])
    bound, br = chernoff_moment_bound(spec, e, w, eps=p["eps"], C=p["C"], x_rule=p["x_cutoff"],
                                      nodes=p["nodes"])
    rows = [("model", spec.model), ("bound", bound), ("bound_over_XY", bound / (w.X * w.Y))]
    rows += br.rows()
    rows += [("log_x_min", br.log_x_range[0]), ("log_x_max", br.log_x_range[1])]
    write_csv(cfg, ["quantity", "value"], rows, br.notes)
    return 0


def selftest_checks():
    """Fast invariant checks: (name, passed, detail)."""
    from . import kernels
    from .archimedean import q1_direct, q1_piecewise, q_direct, q_piecewise
    from .bounds import central_sum, exact_fraction_check, gaussian_integral, power_expansion_residual
    from .kuznetsov import divisor_count, kloosterman
    from .persist import form_from_text, form_to_text
    from .automorphic import MaassForm
    from . import _kernels_py

    out = []
    rng = np.random.default_rng(0)
    tj, tf, tg, tk = (rng.uniform(0, 60, 2000) for _ in range(4))
    lo, hi = np.minimum(tf, tg), np.maximum(tf, tg)
    d = max(np.max(np.abs(q_direct(tj, lo, hi) - q_piecewise(tj, lo, hi))),
            np.max(np.abs(q1_direct(tj, tf + 0.1, tg + 0.1, tk) - q1_piecewise(tj, tf + 0.1, tg + 0.1, tk))))
    out.append(("piecewise_exponents", d <= 1e-12, f"max deviation {d:.2e}"))
    out.append(("d_coefficient_recursion", exact_fraction_check(20), "k <= 20"))
    r = max(power_expansion_residual(k) for k in range(1, 21))
    out.append(("power_expansion", r < 1e-9, f"residual {r:.2e}"))
    ok = all(a == b for a, b in (central_sum(e) for e in range(21)))
    out.append(("central_sum_identity", ok, "e <= 20"))
    g = gaussian_integral(2.0)
    out.append(("gaussian_integral", abs(g[0] / g[1] - 1) < 1e-8, f"relative {abs(g[0] / g[1] - 1):.1e}"))
    weil = all(abs(kloosterman(n, 1, c)) <= divisor_count(c) * math.sqrt(c) + 1e-9
               for c in range(1, 300) for n in (1, 2, 3))
    out.append(("weil_bound", weil, "c < 300, n <= 3"))
    y = np.linspace(0.5, 5, 50)
    kd = float(np.max(np.abs(kernels.kbessel_scaled(9.5, y) - _kernels_py.kbessel_scaled(9.5, y))))
    out.append(("kernel_backends", kd < 1e-12, f"{kernels.BACKEND} vs python {kd:.1e}"))
    form = MaassForm("even", 9.533695261353557, rng.normal(size=20), "l2", 1e-12)
    back = form_from_text(form_to_text(form))
    out.append(("cache_round_trip", np.array_equal(back.coefficients, form.coefficients) and back.t == form.t, "17 digits"))
    return out


def cmd_selftest(cfg: RunConfig) -> int:
    checks = selftest_checks()
    write_csv(cfg, ["check", "passed", "detail"], [[n, str(bool(ok)).lower(), d] for n, ok, d in checks])
    return 0 if all(ok for _, ok, _ in checks) else 70


HANDLERS = {
    "solve": cmd_solve,
    "moment": cmd_moment,
    "parseval": cmd_parseval,
    "weights": cmd_weights,
    "trace": cmd_trace,
    "bounds": cmd_bounds,
    "selftest": cmd_selftest,
}


def run(cfg: RunConfig) -> int:
    return HANDLERS[cfg.command](cfg)


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("MAASSJOINT_LOG", "WARNING"), format="%(name)s: %(message)s")
    try:
        return run(parse_config(argv))
    except MaassError as e:
        print(f"maassjoint: {e.category} error: {e}", file=sys.stderr)
        return e.exit_code
    except BrokenPipeError:
        # downstream closed the pipe (e.g. head); not an error of ours
        sys.stderr.close()
        return 0


if __name__ == "__main__":
    sys.exit(main())
