"""Command-line entry point.

Subcommands
-----------
dh-s2           S^2 golden pipeline: Picken -> Fourier -> boundary values on a xi-grid.
su2-euler       Truncated regularized Euler product against its sinc closed form.
su2-fixed       Solve and verify a fixed loop of a rank-one subtorus of T x S^1.
picken-eval     Truncated OmegaSU(2) Picken sum with an N versus 2N certificate.
dh-su2-probe    Exploratory 2D quadrature of one OmegaSU(2) DH integrand (report only).
fixtures-export Write the S^2 localization problem and its Picken hyperfunction as JSON.

Configuration is read from an optional JSON file (``--config``) whose keys
are the :class:`RunConfig` fields; command-line flags override it. Exit
codes: 0 pass, 1 numerical failure, 2 usage error, 3 internal error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import HyperlocError, InternalError, NoPeriodicSolution, TrivialCase

LOGGER = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_INTERNAL = 3

SUBCOMMANDS = ("dh-s2", "su2-euler", "su2-fixed", "picken-eval", "dh-su2-probe", "fixtures-export")

#: Per-subcommand defaults; any key may be overridden by the config file or a flag.
DEFAULTS = {
    "dh-s2": {"tolerance": 1e-3, "grid": {"min": -2.0, "max": 2.0, "steps": 41}, "xi": [-1], "delta": 0.1,
              "R0": 16.0, "exclusion": 0.1},
    "su2-euler": {"tolerance": 1e-3, "grid": {"min": -1.95, "max": 1.95, "steps": 40}, "n": 0, "K": 10_000,
                  "imag": 0.1, "exclusion": 0.1},
    "su2-fixed": {"tolerance": 1e-8, "n": 1, "m": 2},
    "picken-eval": {"tolerance": 1e-6, "points": [[0.13, 1.7]], "grid": {"min": 0.5, "max": 2.0, "steps": 3}},
    "dh-su2-probe": {"tolerance": 1e-3, "n": 0, "piece": [1, 1], "zeta": ["0.3-0.5j", "0.7-0.5j"], "R0": 8.0},
    "fixtures-export": {},
}


class UsageError(Exception):
    """Invalid configuration; mapped to exit status 2."""


@dataclass
class GridSpec:
    min: float
    max: float
    steps: int

    def __post_init__(self):
        self.min, self.max, self.steps = float(self.min), float(self.max), int(self.steps)
        if self.steps < 1:
            raise UsageError("grid must have at least one point")
        if self.steps > 1 and not self.max > self.min:
            raise UsageError("grid max must exceed grid min")

    def axis(self) -> np.ndarray:
        if self.steps == 1:
            return np.array([self.min])
        return np.linspace(self.min, self.max, self.steps)


@dataclass
class RunConfig:
    """Every knob of a run. ``None`` means "use the subcommand default"."""

    subcommand: str
    tolerance: float | None = None
    K: int | None = None
    N: int | None = None
    R0: float | None = None
    delta: float | None = None
    output: str | None = None
    grid: GridSpec | None = None
    xi: list | None = None
    n: int | None = None
    m: int | None = None
    k1: int | None = None
    k2: int | None = None
    A: float | None = None
    beta0_prime: complex | None = None
    imag: float | None = None
    exclusion: float | None = None
    points: list | None = None
    piece: list | None = None
    zeta: list | None = None
    form: str = "display"
    workers: int | None = None

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise UsageError(f"unknown subcommand {self.subcommand!r}")
        for key, value in DEFAULTS[self.subcommand].items():
            if getattr(self, key) is None:
                setattr(self, key, value)
        if isinstance(self.grid, dict):
            self.grid = GridSpec(**self.grid)
        if self.tolerance is not None and not float(self.tolerance) > 0:
            raise UsageError("tolerance must be positive")
        for key in ("K", "N"):
            v = getattr(self, key)
            if v is not None and int(v) < 1:
                raise UsageError(f"{key} must be a positive integer")
        if self.R0 is not None and not float(self.R0) > 0:
            raise UsageError("R0 must be positive")
        if self.delta is not None and not float(self.delta) > 0:
            raise UsageError("delta must be positive")
        if self.form not in ("display", "definitional"):
            raise UsageError("form must be 'display' or 'definitional'")

    @classmethod
    def from_sources(cls, subcommand: str, file_data: dict | None, overrides: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        data = dict(file_data or {})
        unknown = set(data) - names
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        data["subcommand"] = subcommand
        return cls(**data)

    def to_json(self) -> dict:
        out = dataclasses.asdict(self)
        if isinstance(self.beta0_prime, complex):
            out["beta0_prime"] = str(self.beta0_prime)
        return out


# ---------------------------------------------------------------------------
# output helpers


def _open_out(path: str | None):
    if path in (None, "-"):
        return _NoClose(sys.stdout)
    return open(path, "w", newline="")


class _NoClose:
    def __init__(self, stream):
        self.stream = stream

    def __enter__(self):
        return self.stream

    def __exit__(self, *exc):
        self.stream.flush()
        return False


def _write_csv(path: str | None, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with _open_out(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def _write_json(path: str | None, payload) -> None:
    with _open_out(path) as fh:
        json.dump(payload, fh, indent=2, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _parallel_map(fn: Callable, items: Sequence, workers: int | None) -> list:
    """Ordered map; rows come back in input order whatever the scheduling."""
    workers = workers or min(4, os.cpu_count() or 1)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _verdict(ok: bool, label: str, detail: str) -> int:
    print(f"{label}: {'PASS' if ok else 'FAIL'} ({detail})", file=sys.stderr)
    return EXIT_PASS if ok else EXIT_FAIL


def _complex(value) -> complex:
    if isinstance(value, dict):
        return complex(float(value.get("re", 0.0)), float(value.get("im", 0.0)))
    if isinstance(value, str):
        return complex(value.replace(" ", ""))
    return complex(value)


# ---------------------------------------------------------------------------
# subcommands


def cmd_dh_s2(cfg: RunConfig) -> int:
    """S^2 pipeline against the indicator of ``(-1, 1)``."""
    from .fourier import fourier_transform
    from .hyperfunction import boundary_evaluate
    from .localization import builtin_s2, picken

    xi = cfg.xi[0] if isinstance(cfg.xi, (list, tuple)) else cfg.xi
    problem = builtin_s2(xi)
    L = picken(problem)
    dh = fourier_transform(L, delta=float(cfg.delta), R0=float(cfg.R0)).hyperfunction
    grid = [float(v) for v in cfg.grid.axis()]

    def row(x):
        bv = boundary_evaluate(dh, [x])
        return x, bv

    t0 = time.perf_counter()
    results = _parallel_map(row, grid, cfg.workers)
    LOGGER.info("dh-s2: %d grid points in %.2fs", len(grid), time.perf_counter() - t0)
    rows, worst = [], 0.0
    for x, bv in results:
        rows.append([x, bv.value.real, bv.value.imag, bv.error])
        if min(abs(x - 1.0), abs(x + 1.0)) < cfg.exclusion:
            continue
        target = 1.0 if abs(x) < 1.0 else 0.0
        worst = max(worst, abs(bv.value - target) if not bv.divergent else math.inf)
    _write_csv(cfg.output, ["xi", "re", "im", "err"], rows)
    return _verdict(worst < cfg.tolerance, "dh-s2", f"max deviation {worst:.3e}, tolerance {cfg.tolerance:.1e}")


def _pole_distance(n: int, w: complex) -> float:
    """Distance of ``n + w`` from the non-zero half-integers (poles of the reciprocal)."""
    u = 2 * (n + w)
    j = round(u.real)
    cands = [c for c in (j - 1, j, j + 1) if c != 0]
    return min(abs(u - c) for c in cands) / 2


def cmd_su2_euler(cfg: RunConfig) -> int:
    """Truncated regularized product against ``sin(2 pi (n+w)) / (2 pi (n+w))``."""
    from .expr import evaluate
    from .hyperfunction import eval_defining
    from .loop_su2 import euler_class_closed_form, euler_infinite_product

    n = int(cfg.n)
    term = euler_infinite_product(n, int(cfg.K))
    closed = euler_class_closed_form(n)
    ws = [complex(x, cfg.imag) for x in cfg.grid.axis()]
    kept = [w for w in ws if _pole_distance(n, w) >= cfg.exclusion]
    if not kept:
        raise UsageError("every grid point lies within the exclusion distance of a pole")
    zs = [np.array(kept), np.ones(len(kept), dtype=complex)]
    prod = np.atleast_1d(eval_defining(term.expr, zs))
    ref = np.atleast_1d(evaluate(closed, zs))
    errs = np.abs(prod - ref)
    bound = term.truncation_error if term.truncation_error is not None else float("nan")
    rows = [[w.real, w.imag, p.real, p.imag, r.real, r.imag, e, bound] for w, p, r, e in zip(kept, prod, ref, errs)]
    _write_csv(cfg.output, ["re_w", "im_w", "re", "im", "re_closed", "im_closed", "err", "truncation_err"], rows)
    worst = float(np.max(errs))
    return _verdict(worst < cfg.tolerance, "su2-euler", f"n={n}, K={cfg.K}, max error {worst:.3e}")


def cmd_su2_fixed(cfg: RunConfig) -> int:
    """Solve and verify one fixed loop; JSON report."""
    from .loop_su2 import classify_subtorus, solve_fixed_loop, solve_fixed_loop_from_modes, verify_fixed_loop

    n, m = int(cfg.n), int(cfg.m)
    try:
        levi = classify_subtorus(n, m)
    except TrivialCase as exc:
        raise UsageError(str(exc)) from exc
    payload = {"n": n, "m": m, "levi": levi.value}
    try:
        if cfg.A is not None and cfg.beta0_prime is not None:
            loop = solve_fixed_loop(n, m, float(cfg.A), _complex(cfg.beta0_prime))
        else:
            k1, k2 = cfg.k1, cfg.k2
            if k1 is None or k2 is None:
                if (2 * n) % m:
                    raise NoPeriodicSolution(f"n/m = {n}/{m} is not a half-integer: only beta = 0 loops are fixed")
                # the lowest-energy pair of distinct modes with k1 + k2 = 2n/m
                s = 2 * n // m
                k1, k2 = ((s - 1) // 2, (s + 1) // 2) if s % 2 else (s // 2 - 1, s // 2 + 1)
            loop = solve_fixed_loop_from_modes(n, m, int(k1), int(k2), cfg.A)
    except NoPeriodicSolution as exc:
        payload.update({"status": "NoPeriodicSolution", "detail": str(exc)})
        _write_json(cfg.output, payload)
        return _verdict(False, "su2-fixed", str(exc))
    report = verify_fixed_loop(loop)
    payload.update(
        {
            "status": "solved",
            "modes": loop.modes,
            "alpha": {str(k): complex(v) for k, v in sorted(loop.alpha.items())},
            "beta": {str(k): complex(v) for k, v in sorted(loop.beta.items())},
            "residuals": report.to_json(),
        }
    )
    _write_json(cfg.output, payload)
    worst = max(report.ode_alpha, report.ode_beta, report.unitarity, report.vector_field)
    ok = report.passed and worst < cfg.tolerance
    return _verdict(ok, "su2-fixed", f"modes {loop.modes}, worst residual {worst:.2e}")


def _picken_points(cfg: RunConfig) -> list[tuple[float, float]]:
    if cfg.points:
        pts = [tuple(float(c) for c in p) for p in cfg.points]
    else:
        axis = cfg.grid.axis()
        pts = [(float(a), float(b)) for a in axis for b in axis]
    for p in pts:
        if len(p) != 2:
            raise UsageError(f"picken-eval points are 2-vectors, got {p}")
    return pts


def cmd_picken_eval(cfg: RunConfig) -> int:
    """Truncated Picken sums at ``N`` and ``2N`` with ``N`` certified by a tail majorant."""
    from .loop_su2 import certified_truncation, picken_eval

    tol = float(cfg.tolerance)

    def row(x):
        N = int(cfg.N) if cfg.N is not None else max(1, certified_truncation(x, tol))
        vN = picken_eval(N, x, form=cfg.form)
        v2N = picken_eval(2 * N, x, form=cfg.form)
        return x, N, v2N, abs(v2N - vN)

    results = _parallel_map(row, _picken_points(cfg), cfg.workers)
    rows = [[x[0], x[1], N, v.real, v.imag, d] for x, N, v, d in results]
    _write_csv(cfg.output, ["x1", "x2", "N", "re", "im", "err"], rows)
    worst = max(r[-1] for r in rows)
    return _verdict(worst < tol, "picken-eval", f"max |val(2N) - val(N)| = {worst:.3e}")


def cmd_dh_su2_probe(cfg: RunConfig) -> int:
    """Report-only 2D DH quadrature; exit 0 unless the pipeline itself fails."""
    from .loop_su2 import dh_su2_probe

    zeta = tuple(_complex(c) for c in cfg.zeta)
    if len(zeta) != 2 or len(cfg.piece) != 2:
        raise UsageError("zeta and piece must have two components")
    rep = dh_su2_probe(int(cfg.n), tuple(int(s) for s in cfg.piece), zeta, R0=float(cfg.R0))
    payload = dataclasses.asdict(rep)
    payload["report_only"] = True
    _write_json(cfg.output, payload)
    print(f"dh-su2-probe: REPORT ({rep.status}, spread {rep.spread})", file=sys.stderr)
    return EXIT_PASS


def cmd_fixtures_export(cfg: RunConfig) -> int:
    """Write the S^2 problem (and its Picken hyperfunction) as one JSON document."""
    from .hyperfunction import hyperfunction_to_json
    from .localization import builtin_s2, picken, problem_to_json

    xi = cfg.xi[0] if isinstance(cfg.xi, (list, tuple)) else (cfg.xi if cfg.xi is not None else -1)
    problem = builtin_s2(xi)
    _write_json(cfg.output, {"s2_problem": problem_to_json(problem), "s2_picken": hyperfunction_to_json(picken(problem))})
    return EXIT_PASS


COMMANDS = {
    "dh-s2": cmd_dh_s2,
    "su2-euler": cmd_su2_euler,
    "su2-fixed": cmd_su2_fixed,
    "picken-eval": cmd_picken_eval,
    "dh-su2-probe": cmd_dh_su2_probe,
    "fixtures-export": cmd_fixtures_export,
}


# ---------------------------------------------------------------------------
# argument parsing


def _csv_floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyperloc", description="Localization formulas as hyperfunctions.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="repeat for more logging")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=COMMANDS[name].__doc__.splitlines()[0])
        p.add_argument("--config", help="JSON file with RunConfig fields")
        p.add_argument("-o", "--output", help="output path (default: stdout)")
        p.add_argument("--tolerance", type=float)
        p.add_argument("--workers", type=int)
        if name in ("dh-s2", "su2-euler", "picken-eval"):
            p.add_argument("--grid-min", type=float)
            p.add_argument("--grid-max", type=float)
            p.add_argument("--grid-steps", type=int)
        if name in ("dh-s2", "fixtures-export"):
            p.add_argument("--xi", type=float, help="polarization of the S^2 problem (+1 or -1)")
        if name == "dh-s2":
            p.add_argument("--delta", type=float)
            p.add_argument("--R0", type=float)
            p.add_argument("--exclusion", type=float)
        if name == "su2-euler":
            p.add_argument("--n", type=int)
            p.add_argument("--K", type=int)
            p.add_argument("--imag", type=float, help="imaginary part of w along the grid")
            p.add_argument("--exclusion", type=float)
        if name == "su2-fixed":
            p.add_argument("--n", type=int)
            p.add_argument("--m", type=int)
            p.add_argument("--k1", type=int)
            p.add_argument("--k2", type=int)
            p.add_argument("--A", type=float)
            p.add_argument("--beta0-prime", dest="beta0_prime", type=complex)
        if name == "picken-eval":
            p.add_argument("--N", type=int)
            p.add_argument("--point", action="append", type=_csv_floats, dest="points")
            p.add_argument("--form", choices=("display", "definitional"))
        if name == "dh-su2-probe":
            p.add_argument("--n", type=int)
            p.add_argument("--piece", type=lambda s: [int(t) for t in s.split(",")])
            p.add_argument("--zeta", type=lambda s: [complex(t) for t in s.split(",")])
            p.add_argument("--R0", type=float)
    return parser


def _overrides(ns: argparse.Namespace) -> dict:
    skip = {"config", "verbose", "subcommand", "grid_min", "grid_max", "grid_steps"}
    out = {k: v for k, v in vars(ns).items() if k not in skip and v is not None}
    if "xi" in out:
        out["xi"] = [out["xi"]]
    return out


def _grid_override(ns: argparse.Namespace, base) -> dict | None:
    vals = {k: getattr(ns, f"grid_{k}", None) for k in ("min", "max", "steps")}
    if all(v is None for v in vals.values()):
        return None
    if isinstance(base, GridSpec):
        base = dataclasses.asdict(base)
    merged = dict(base or {})
    merged.update({k: v for k, v in vals.items() if v is not None})
    return merged


def load_config(ns: argparse.Namespace) -> RunConfig:
    file_data = None
    if ns.config:
        try:
            with open(ns.config) as fh:
                file_data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {ns.config}: {exc}") from exc
        if not isinstance(file_data, dict):
            raise UsageError("config file must hold a JSON object")
    overrides = _overrides(ns)
    base_grid = (file_data or {}).get("grid", DEFAULTS[ns.subcommand].get("grid"))
    grid = _grid_override(ns, base_grid)
    if grid is not None:
        overrides["grid"] = grid
        # an explicit grid on the command line replaces the default probe points
        overrides.setdefault("points", [])
    try:
        return RunConfig.from_sources(ns.subcommand, file_data, overrides)
    except TypeError as exc:
        raise UsageError(str(exc)) from exc


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PASS if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.WARNING - 10 * min(ns.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(ns)
        return COMMANDS[cfg.subcommand](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InternalError as exc:
        print(f"internal error in {ns.subcommand}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except HyperlocError as exc:
        print(f"{ns.subcommand} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to the internal exit status
        LOGGER.exception("unexpected failure")
        print(f"internal error in {ns.subcommand}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
