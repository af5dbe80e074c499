"""Boundary-value hyperfunctions as finite formal sums of (F, cone) terms."""
from __future__ import annotations

import csv
import itertools
import json
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .cones import ConvexCone, cone_from_json, cone_to_json, intersect_cones
from .errors import (
    ConeEmpty,
    ConvergenceError,
    DimensionMismatch,
    EvaluationBlocked,
    HyperlocError,
    PoleError,
    ProductUndefined,
)
from .expr import (
    Const,
    Expr,
    GrowthClass,
    Mul,
    TruncatedProduct,
    classify_growth,
    evaluate,
    expr_from_json,
    expr_to_json,
)

LOGGER = logging.getLogger(__name__)

DEFAULT_EPS = tuple(2.0 ** -j for j in range(4, 15))
RICHARDSON_LEVELS = 3
PROBE_ATOL = 1e-8

__all__ = [
    "BoundaryValueTerm",
    "Hyperfunction",
    "BoundaryValue",
    "ProbeVerdict",
    "add",
    "product",
    "infinite_product",
    "boundary_evaluate",
    "equality_probe",
    "write_boundary_csv",
    "hyperfunction_to_json",
    "hyperfunction_from_json",
]


def eval_defining(expr, zs):
    """Evaluate a grammar expression or any object exposing ``evaluate(zs)``."""
    if isinstance(expr, Expr):
        return evaluate(expr, zs)
    return expr.evaluate(zs)


def witness_vector(cone: ConvexCone) -> np.ndarray:
    return np.array([float(c) for c in cone.interior_witness()])


@dataclass(frozen=True)
class BoundaryValueTerm:
    """``b_cone(expr)``: boundary value of ``expr`` from the wedge over ``cone``."""

    expr: object
    cone: ConvexCone
    growth: GrowthClass | None = None
    truncation_error: float | None = None

    def __post_init__(self):
        if not self.cone.is_open_nonempty():
            raise ConeEmpty(f"boundary-value term over empty cone {self.cone}")
        if self.growth is None:
            g = classify_growth(self.expr, self.cone) if isinstance(self.expr, Expr) else GrowthClass.unclassified()
            object.__setattr__(self, "growth", g)

    @property
    def dim(self) -> int:
        return self.cone.dim

    def evaluate_near(self, x, eps):
        """Values of the defining function at ``x + i eps v`` (v the cone witness)."""
        v = witness_vector(self.cone)
        eps = np.asarray(eps, dtype=float)
        zs = [xj + 1j * eps * vj for xj, vj in zip(x, v)]
        return eval_defining(self.expr, zs)


@dataclass(frozen=True)
class Hyperfunction:
    terms: tuple[BoundaryValueTerm, ...]
    dim: int

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for t in self.terms:
            if t.dim != self.dim:
                raise DimensionMismatch(f"term of dim {t.dim} in hyperfunction of dim {self.dim}")

    @classmethod
    def zero(cls, dim: int) -> "Hyperfunction":
        return cls((), dim)

    @classmethod
    def single(cls, expr, cone: ConvexCone, growth=None) -> "Hyperfunction":
        return cls((BoundaryValueTerm(expr, cone, growth),), cone.dim)

    def __add__(self, other):
        return add(self, other)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return add(self, -other)

    def __mul__(self, other):
        if isinstance(other, Hyperfunction):
            return product(self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def scale(self, c: complex) -> "Hyperfunction":
        c = complex(c)
        terms = []
        for t in self.terms:
            if isinstance(t.expr, Expr):
                new = Mul((Const(c), t.expr))
            else:
                new = _ScaledNumeric(t.expr, c)
            terms.append(replace(t, expr=new))
        return Hyperfunction(tuple(terms), self.dim)


@dataclass(frozen=True)
class _ScaledNumeric:
    inner: object
    factor: complex

    def evaluate(self, zs):
        return self.factor * self.inner.evaluate(zs)


def add(f: Hyperfunction, g: Hyperfunction) -> Hyperfunction:
    if f.dim != g.dim:
        raise DimensionMismatch(f"cannot add hyperfunctions of dim {f.dim} and {g.dim}")
    return Hyperfunction(f.terms + g.terms, f.dim)


def product(f: Hyperfunction, g: Hyperfunction) -> Hyperfunction:
    """Termwise product ``sum_{j,k} b_{gamma_j & Delta_k}(F_j G_k)``.

    Every pair of cones must intersect in an open nonempty cone.
    """
    if f.dim != g.dim:
        raise DimensionMismatch(f"cannot multiply hyperfunctions of dim {f.dim} and {g.dim}")
    terms = []
    for (j, a), (m, b) in itertools.product(enumerate(f.terms), enumerate(g.terms)):
        cone = intersect_cones([a.cone, b.cone])
        if not cone.is_open_nonempty():
            raise ProductUndefined(f"cones of terms {j} and {m} do not intersect", pair=(j, m))
        if isinstance(a.expr, Expr) and isinstance(b.expr, Expr):
            expr = Mul((a.expr, b.expr))
        else:
            expr = _NumericProduct(a.expr, b.expr)
        terms.append(BoundaryValueTerm(expr, cone))
    return Hyperfunction(tuple(terms), f.dim)


@dataclass(frozen=True)
class _NumericProduct:
    a: object
    b: object

    def evaluate(self, zs):
        return eval_defining(self.a, zs) * eval_defining(self.b, zs)


_PROBE_X = (0.31, 0.87, -0.62, 1.13)


def _default_probe(cone: ConvexCone) -> list[list[complex]]:
    """A few points ``x + i v/4`` with nonzero, unequal real coordinates."""
    v = witness_vector(cone)
    n = cone.dim
    pts = []
    for shift in range(len(_PROBE_X)):
        xs = [_PROBE_X[(shift + i) % len(_PROBE_X)] for i in range(n)]
        pts.append([x + 0.25j * vj for x, vj in zip(xs, v)])
    return pts


def infinite_product(
    factors: Callable[[int], BoundaryValueTerm] | Iterable[BoundaryValueTerm],
    K: int,
    *,
    template: Expr | None = None,
    probe: Sequence[Sequence[complex]] | None = None,
    tol: float = 1e-3,
) -> BoundaryValueTerm:
    """Truncated infinite product of boundary-value terms.

    ``factors`` is either ``k -> term`` (k >= 1) or an iterable yielding at
    least ``2K`` terms. The cone of the result is the intersection over
    ``k <= K``; the factors ``K < k <= 2K`` must add no constraint to it.
    ``template``, a factor expression in the product index ``k``, lets the
    result be stored as a :class:`TruncatedProduct` instead of a finite
    product of ``K`` nodes.

    The Cauchy estimate ``max |P_2K - P_K|`` over the probe points is stored
    as ``truncation_error``; above ``tol * max(1, |P_2K|)`` the product is
    declared non-convergent.
    """
    if callable(factors) and template is not None:
        terms = [factors(j) for j in range(1, K + 1)]
        later = [(j, factors(j)) for j in _stability_sample(K)]
    else:
        if callable(factors):
            all_terms = [factors(j) for j in range(1, 2 * K + 1)]
        else:
            all_terms = list(itertools.islice(iter(factors), 2 * K))
        if len(all_terms) < 2 * K:
            raise ValueError(f"need {2 * K} factors for the Cauchy estimate, got {len(all_terms)}")
        terms = all_terms[:K]
        later = list(enumerate(all_terms[K:], start=K + 1))
    dim = terms[0].dim
    cone = _incremental_intersection(terms, dim)
    for j, t in later:
        if not all(cone.is_redundant(w) for w in t.cone.weights):
            raise ProductUndefined(f"factor {j} still cuts the cone; intersection not stable at K={K}", pair=(j, None))

    if template is not None:
        expr_k, expr_2k = TruncatedProduct(template, K), TruncatedProduct(template, 2 * K)
    else:
        expr_k = Mul(tuple(t.expr for t in terms))
        expr_2k = Mul(tuple(t.expr for t in terms) + tuple(t.expr for _, t in later))

    pts = probe if probe is not None else _default_probe(cone)
    zs = [np.array([p[i] for p in pts], dtype=complex) for i in range(dim)]
    with np.errstate(over="ignore", invalid="ignore"):
        try:
            pk = np.asarray(evaluate(expr_k, zs))
            p2k = np.asarray(evaluate(expr_2k, zs))
        except PoleError as exc:
            raise ConvergenceError(f"partial products hit a pole on the probe grid: {exc}", estimate=np.inf) from exc
        except HyperlocError as exc:
            raise ConvergenceError(f"partial products grow without bound ({exc})", estimate=np.inf) from exc
    if not (np.all(np.isfinite(pk)) and np.all(np.isfinite(p2k))):
        raise ConvergenceError("partial products grow without bound on the probe grid", estimate=np.inf)
    estimate = float(np.max(np.abs(p2k - pk)))
    scale = max(1.0, float(np.max(np.abs(p2k))))
    if estimate > tol * scale:
        raise ConvergenceError(
            f"Cauchy estimate |P_2K - P_K| = {estimate:.3g} exceeds {tol:g} * {scale:.3g}", estimate=estimate
        )
    return BoundaryValueTerm(expr_k, cone, truncation_error=estimate)


def _stability_sample(K: int) -> list[int]:
    """Indices in ``(K, 2K]``: the first 32, then geometrically spaced up to ``2K``."""
    idx = set(range(K + 1, min(2 * K, K + 32) + 1))
    idx.update(int(v) for v in np.unique(np.geomspace(K + 1, 2 * K, 32).round()))
    return sorted(i for i in idx if K < i <= 2 * K)


def _incremental_intersection(terms: Sequence[BoundaryValueTerm], dim: int) -> ConvexCone:
    weights = []
    cone = ConvexCone.full(dim)
    seen = set()
    for j, t in enumerate(terms, start=1):
        for w in t.cone.weights:
            if w.primitive in seen:
                continue
            seen.add(w.primitive)
            if cone.halfspaces and cone.is_open_nonempty() and cone.is_redundant(w):
                continue
            weights.append(w)
            cone = ConvexCone.from_weights(weights, dim=dim)
            if not cone.is_open_nonempty():
                raise ProductUndefined(f"cone intersection becomes empty at factor {j}", pair=(j, None))
            cone = cone.prune()
            weights = list(cone.weights)
    return cone


# ---------------------------------------------------------------------------
# numerical boundary values


@dataclass(frozen=True)
class BoundaryValue:
    value: complex
    error: float
    divergent: bool = False
    trend: float | None = None

    @property
    def ok(self) -> bool:
        return not self.divergent


def _richardson(values: Sequence[complex], levels: int) -> tuple[complex, float]:
    """Extrapolate ``S(eps)`` sampled at halving eps to eps -> 0."""
    table = [list(values)]
    for lev in range(1, levels + 1):
        prev = table[-1]
        fac = 2.0**lev - 1.0
        table.append([prev[j + 1] + (prev[j + 1] - prev[j]) / fac for j in range(len(prev) - 1)])
    best = table[-1]
    if len(best) >= 2:
        return best[-1], abs(best[-1] - best[-2])
    return best[-1], abs(table[-2][-1] - table[-2][-2])


def boundary_evaluate(
    f: Hyperfunction,
    x: Sequence[float],
    eps_sequence: Sequence[float] = DEFAULT_EPS,
    levels: int = RICHARDSON_LEVELS,
) -> BoundaryValue:
    """Limit of ``sum_j F_j(x + i eps v_j)`` as ``eps -> 0+``.

    Raises
    ------
    EvaluationBlocked
        A probe point hit the polar locus of some term.
    """
    if len(x) != f.dim:
        raise DimensionMismatch(f"point of dim {len(x)} for hyperfunction of dim {f.dim}")
    eps = np.asarray(eps_sequence, dtype=float)
    if np.any(np.diff(eps) >= 0) or np.any(eps <= 0):
        raise ValueError("eps sequence must be positive and strictly decreasing")
    total = np.zeros(eps.shape, dtype=complex)
    quad_err = 0.0
    for j, t in enumerate(f.terms):
        try:
            vals = t.evaluate_near(x, eps)
        except PoleError as exc:
            raise EvaluationBlocked(f"term {j} blocked at x={list(x)}: {exc}") from exc
        total = total + np.broadcast_to(np.asarray(vals, dtype=complex), eps.shape)
        if hasattr(t.expr, "error"):
            v = witness_vector(t.cone)
            zs = [xj + 1j * eps * vj for xj, vj in zip(x, v)]
            quad_err += float(np.max(t.expr.error(zs)))
    if not np.all(np.isfinite(total)):
        return BoundaryValue(complex("nan"), float("inf"), divergent=True, trend=float("inf"))
    mags = np.abs(total)
    tail = mags[-4:]
    if tail[0] > 0 and np.all(np.diff(tail) > 0) and tail[-1] / tail[0] > 4.0:
        trend = float((tail[-1] / tail[0]) ** (1.0 / (len(tail) - 1)))
        return BoundaryValue(complex(total[-1]), float("inf"), divergent=True, trend=trend)
    value, err = _richardson(list(total), min(levels, len(total) - 1))
    # three Richardson levels amplify per-sample errors by at most 3 * 5/3 * 9/7 < 6.5
    return BoundaryValue(complex(value), float(err) + 6.5 * quad_err)


@dataclass(frozen=True)
class ProbeVerdict:
    consistent: bool
    x: tuple[float, ...] | None = None
    gap: float | None = None
    skipped: tuple[tuple[float, ...], ...] = field(default_factory=tuple)

    @property
    def kind(self) -> str:
        return "ConsistentWithEqual" if self.consistent else "Distinguished"


def _grid(window, steps):
    axes = [np.linspace(lo, hi, steps) for lo, hi in window]
    return [tuple(float(v) for v in p) for p in itertools.product(*axes)]


def equality_probe(
    f: Hyperfunction,
    g: Hyperfunction,
    window: Sequence[tuple[float, float]],
    steps: int = 9,
    atol: float = PROBE_ATOL,
    eps_sequence: Sequence[float] = DEFAULT_EPS,
) -> ProbeVerdict:
    """Heuristic numerical comparison of two hyperfunctions on a window.

    ``f - g`` is boundary-evaluated on a grid; a point whose extrapolated
    value exceeds ``10 * error + atol`` distinguishes them. Blocked points
    are skipped and reported. A consistent verdict is not a proof.
    """
    diff = f - g
    skipped = []
    for x in _grid(window, steps):
        try:
            bv = boundary_evaluate(diff, x, eps_sequence)
        except EvaluationBlocked:
            skipped.append(x)
            continue
        if bv.divergent:
            return ProbeVerdict(False, x, float("inf"), tuple(skipped))
        gap = abs(bv.value)
        if gap > 10 * bv.error + atol:
            return ProbeVerdict(False, x, gap, tuple(skipped))
    return ProbeVerdict(True, skipped=tuple(skipped))


def write_boundary_csv(f: Hyperfunction, points: Iterable[Sequence[float]], out, eps_sequence=DEFAULT_EPS) -> list:
    """Stream ``x..., re, im, err`` rows to the text stream ``out``."""
    writer = csv.writer(out)
    writer.writerow([f"x{i + 1}" for i in range(f.dim)] + ["re", "im", "err"])
    rows = []
    for x in points:
        bv = boundary_evaluate(f, x, eps_sequence)
        row = [*x, bv.value.real, bv.value.imag, bv.error]
        writer.writerow(row)
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# serialization


def hyperfunction_to_json(f: Hyperfunction) -> list:
    out = []
    for t in f.terms:
        out.append(
            {
                "expr": expr_to_json(t.expr),
                "cone": cone_to_json(t.cone),
                "dim": t.dim,
                "growth": t.growth.to_json(),
            }
        )
    return out


def hyperfunction_from_json(data, dim: int | None = None) -> Hyperfunction:
    terms = []
    for item in data:
        d = item.get("dim", dim)
        cone = cone_from_json(item["cone"], dim=d)
        terms.append(BoundaryValueTerm(expr_from_json(item["expr"]), cone, GrowthClass.from_json(item["growth"])))
    if dim is None:
        if not terms:
            raise ValueError("dimension required for an empty hyperfunction")
        dim = terms[0].dim
    return Hyperfunction(tuple(terms), dim)


def dumps_hyperfunction(f: Hyperfunction) -> str:
    return json.dumps(hyperfunction_to_json(f))
