"""Exact rational geometry of weights, half-spaces and open polyhedral cones.

Every membership decision is made with :class:`fractions.Fraction` (or
integer) arithmetic. Linear programs are solved exactly with the rational
simplex in :mod:`sympy.solvers.simplex`.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from math import gcd, lcm
from typing import Iterable, Sequence

import numpy as np
import sympy
from scipy.optimize import linprog

from .errors import ConeEmpty, DegenerateWeight, DimensionMismatch

__all__ = [
    "Weight",
    "HalfSpace",
    "ConvexCone",
    "PolarizedWeightSet",
    "as_fraction",
    "as_rational_vector",
    "halfspace_of_weight",
    "intersect_cones",
    "is_open_nonempty",
    "contains",
    "polar_dual",
    "polarize",
    "weight_to_json",
    "weight_from_json",
    "cone_to_json",
    "cone_from_json",
    "dumps_cone",
    "loads_cone",
]


def as_fraction(value) -> Fraction:
    """Convert ints, Fractions, ``"p/q"`` strings or floats to a Fraction.

    Floats are converted exactly (their binary value), not rounded.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rational numbers")
    if isinstance(value, (int, float, str)):
        return Fraction(value)
    if isinstance(value, sympy.Rational):
        return Fraction(int(value.p), int(value.q))
    raise TypeError(f"cannot interpret {value!r} as a rational number")


def as_rational_vector(values) -> tuple[Fraction, ...]:
    return tuple(as_fraction(v) for v in values)


def _is_exact(values) -> bool:
    return all(isinstance(v, (int, Fraction)) and not isinstance(v, bool) for v in values)


@dataclass(frozen=True)
class Weight:
    """A rational linear functional ``y -> sum_i c_i y_i``."""

    coefficients: tuple[Fraction, ...]

    def __post_init__(self):
        coeffs = as_rational_vector(self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        if not coeffs:
            raise DegenerateWeight("weight must have at least one coefficient")
        if all(c == 0 for c in coeffs):
            raise DegenerateWeight("zero weight defines no half-space", weight=self)

    @classmethod
    def of(cls, *coefficients) -> "Weight":
        return cls(tuple(coefficients))

    @property
    def dim(self) -> int:
        return len(self.coefficients)

    def __call__(self, y):
        """Evaluate at ``y``.

        Exact for rational input. For float, complex or array input the
        coefficients are converted to floats and the result follows numpy
        broadcasting of the components of ``y``.
        """
        if len(y) != self.dim:
            raise DimensionMismatch(f"weight of dim {self.dim} evaluated at point of dim {len(y)}")
        if _is_exact(y):
            return sum((c * v for c, v in zip(self.coefficients, y)), Fraction(0))
        total = 0
        for c, v in zip(self.coefficients, y):
            if c:
                total = total + float(c) * v
        return total

    def __neg__(self) -> "Weight":
        return Weight(tuple(-c for c in self.coefficients))

    def __str__(self):
        return "(" + ", ".join(str(c) for c in self.coefficients) + ")"

    @cached_property
    def primitive(self) -> tuple[int, ...]:
        """Primitive integer vector positively proportional to the weight."""
        den = reduce(lcm, (c.denominator for c in self.coefficients), 1)
        ints = [int(c * den) for c in self.coefficients]
        g = reduce(gcd, (abs(i) for i in ints), 0)
        return tuple(i // g for i in ints)


@dataclass(frozen=True)
class HalfSpace:
    """The open half-space ``{y : weight(y) > 0}``."""

    weight: Weight

    @property
    def dim(self) -> int:
        return self.weight.dim

    def contains(self, y) -> bool:
        return _int_dot(self.weight.primitive, y) > 0 if _is_exact(y) else bool(self.weight(y) > 0)


def _int_dot(prim: Sequence[int], y: Sequence) -> Fraction:
    return sum((p * v for p, v in zip(prim, y) if p), Fraction(0))


@dataclass(frozen=True)
class ConvexCone:
    """Open convex polyhedral cone: the intersection of open half-spaces.

    An empty half-space list stands for the whole of R^n.
    """

    halfspaces: tuple[HalfSpace, ...]
    dim: int
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        hs = tuple(h if isinstance(h, HalfSpace) else HalfSpace(h) for h in self.halfspaces)
        object.__setattr__(self, "halfspaces", hs)
        for h in hs:
            if h.dim != self.dim:
                raise DimensionMismatch(f"half-space of dim {h.dim} in cone of dim {self.dim}")

    @classmethod
    def from_weights(cls, weights: Iterable, dim: int | None = None) -> "ConvexCone":
        ws = [w if isinstance(w, Weight) else Weight(tuple(w)) for w in weights]
        if dim is None:
            if not ws:
                raise ValueError("dimension required for a cone without half-spaces")
            dim = ws[0].dim
        return cls(tuple(HalfSpace(w) for w in ws), dim)

    @classmethod
    def full(cls, dim: int) -> "ConvexCone":
        return cls((), dim)

    @property
    def weights(self) -> tuple[Weight, ...]:
        return tuple(h.weight for h in self.halfspaces)

    def _check_dim(self, y):
        if len(y) != self.dim:
            raise DimensionMismatch(f"point of dim {len(y)} tested against cone of dim {self.dim}")

    def contains(self, y) -> bool:
        self._check_dim(y)
        if _is_exact(y):
            return all(_int_dot(w.primitive, y) > 0 for w in self.weights)
        return all(bool(w(y) > 0) for w in self.weights)

    def contains_closure(self, y) -> bool:
        self._check_dim(y)
        y = as_rational_vector(y)
        return all(_int_dot(w.primitive, y) >= 0 for w in self.weights)

    # -- linear programming -------------------------------------------------

    def _centering_lp(self) -> tuple[Fraction, tuple[Fraction, ...]]:
        """Find an interior point and its margin ``min_w w(y) / sum |y_j|``.

        Cheap routes are tried first and their answer is always checked in
        exact arithmetic: the normalised sum of the defining functionals,
        then a floating-point centring LP whose optimum is rounded to a
        rational point. Only when neither certifies a strict interior point
        is the exact generator-based test (which also certifies emptiness) run.
        """
        if "lp" in self._cache:
            return self._cache["lp"]
        n = self.dim
        if not self.halfspaces:
            result = (Fraction(1), tuple(Fraction(0) for _ in range(n)))
        else:
            prims = sorted({w.primitive for w in self.weights})
            result = None
            for route in (_sum_candidate, _float_centre):
                candidate = route(prims, n)
                if candidate is not None:
                    margin = _margin(prims, candidate)
                    if margin > 0:
                        result = (margin, candidate)
                        break
            if result is None:
                result = _exact_centre(prims, n)
        self._cache["lp"] = result
        return result

    def is_open_nonempty(self) -> bool:
        margin, _ = self._centering_lp()
        return margin > 0

    def interior_witness(self) -> tuple[Fraction, ...]:
        """A well-centred interior point with ``sum |y_j| = 1`` (zero for R^n)."""
        margin, point = self._centering_lp()
        if margin <= 0:
            raise ConeEmpty("cone has empty interior")
        norm = sum(abs(c) for c in point)
        if norm == 0:
            return point
        return tuple(c / norm for c in point)

    # -- generators of the closure -----------------------------------------

    def generators(self) -> tuple[tuple[Fraction, ...], ...]:
        """Generators of the closed cone ``{y : w(y) >= 0 for all w}``.

        Lineality directions appear as a ``+v, -v`` pair; the remaining
        vectors are primitive extreme rays of the pointed part.
        """
        if "gens" in self._cache:
            return self._cache["gens"]
        gens = _closed_cone_generators([w.primitive for w in self.weights], self.dim)
        self._cache["gens"] = gens
        return gens

    def is_redundant(self, weight: Weight) -> bool:
        """True iff adding ``weight > 0`` does not shrink this (nonempty) cone."""
        prim = weight.primitive
        return all(sum(p * g for p, g in zip(prim, gen)) >= 0 for gen in self._integer_generators())

    def _integer_generators(self) -> tuple[tuple[int, ...], ...]:
        if "igens" not in self._cache:
            out = []
            for gen in self.generators():
                den = reduce(lcm, (c.denominator for c in gen), 1)
                out.append(tuple(int(c * den) for c in gen))
            self._cache["igens"] = tuple(out)
        return self._cache["igens"]

    def prune(self) -> "ConvexCone":
        """Drop half-spaces certified redundant by LP; membership is unchanged."""
        if not self.is_open_nonempty():
            return self
        kept: list[Weight] = []
        seen = set()
        for w in self.weights:
            if w.primitive not in seen:
                seen.add(w.primitive)
                kept.append(w)
        i = 0
        while i < len(kept):
            others = kept[:i] + kept[i + 1 :]
            probe = ConvexCone.from_weights(others + [-kept[i]], dim=self.dim)
            if not probe.is_open_nonempty():
                kept = others
            else:
                i += 1
        return ConvexCone.from_weights(kept, dim=self.dim)

    def intersect(self, other: "ConvexCone") -> "ConvexCone":
        return intersect_cones([self, other])

    def same_membership(self, other: "ConvexCone") -> bool:
        """Exact test that two nonempty cones have identical interiors."""
        if self.dim != other.dim:
            return False
        a_empty, b_empty = not self.is_open_nonempty(), not other.is_open_nonempty()
        if a_empty or b_empty:
            return a_empty and b_empty
        return all(other.is_redundant(w) for w in self.weights) and all(
            self.is_redundant(w) for w in other.weights
        )

    def __str__(self):
        if not self.halfspaces:
            return f"R^{self.dim}"
        return " & ".join(f"{w}>0" for w in self.weights)



def _margin(prims, y) -> Fraction:
    den = lcm(*(c.denominator for c in y)) if y else 1
    iy = [int(c * den) for c in y]
    norm = sum(abs(c) for c in iy)
    if norm == 0:
        return Fraction(0)
    return Fraction(min(sum(p * c for p, c in zip(prim, iy)) for prim in prims), norm)


def _sum_candidate(prims, n):
    """Sum of the defining functionals, each scaled to unit l1 norm (integer form)."""
    norms = [sum(abs(c) for c in p) for p in prims]
    L = lcm(*norms)
    acc = [0] * n
    for p, s in zip(prims, norms):
        f = L // s
        for j, c in enumerate(p):
            acc[j] += c * f
    g = reduce(gcd, acc, 0) or 1
    return tuple(Fraction(c // g) for c in acc)


def _float_centre(prims, n):
    """Centring LP in floating point (HiGHS); ``None`` if it finds no margin."""
    m = len(prims)
    # variables: y (n), u (n), t
    c = np.zeros(2 * n + 1)
    c[-1] = -1.0
    rows, rhs = [], []
    for p in prims:
        r = np.zeros(2 * n + 1)
        r[:n] = -np.asarray(p, dtype=float)
        r[-1] = 1.0
        rows.append(r)
        rhs.append(0.0)
    for j in range(n):
        for sgn in (1.0, -1.0):
            r = np.zeros(2 * n + 1)
            r[j] = sgn
            r[n + j] = -1.0
            rows.append(r)
            rhs.append(0.0)
    r = np.zeros(2 * n + 1)
    r[n : 2 * n] = 1.0
    rows.append(r)
    rhs.append(1.0)
    bounds = [(None, None)] * n + [(0, None)] * n + [(None, 1.0)]
    res = linprog(c, A_ub=np.array(rows), b_ub=np.array(rhs), bounds=bounds, method="highs")
    if res.status != 0 or -res.fun <= 1e-9 * max(1, m):
        return None
    return tuple(Fraction(float(v)).limit_denominator(10**6) for v in res.x[:n])


def _exact_centre(prims, n):
    """Exact fallback: centre the closure's extreme rays and test the margin.

    The closed cone ``{y : p(y) >= 0}`` has non-empty interior exactly when
    the sum of its unit-normalised extreme rays (lineality pairs cancel) is
    a strict interior point, so the margin of that sum decides emptiness
    without any floating-point step.
    """
    gens = _closed_cone_generators(list(prims), n)
    acc = [Fraction(0)] * n
    for g in gens:
        norm = sum(abs(c) for c in g)
        acc = [a + c / norm for a, c in zip(acc, g)]
    point = tuple(acc)
    if all(c == 0 for c in point):
        return Fraction(0), point
    return _margin(prims, point), point


def _nullspace(rows: list[Sequence[int]], n: int) -> list[tuple[Fraction, ...]]:
    if not rows:
        return [tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n)]
    basis = sympy.Matrix(rows).nullspace()
    return [tuple(as_fraction(sympy.Rational(x)) for x in v) for v in basis]


def _primitive(vec: Sequence[Fraction]) -> tuple[Fraction, ...]:
    den = reduce(lcm, (Fraction(v).denominator for v in vec), 1)
    ints = [int(Fraction(v) * den) for v in vec]
    g = reduce(gcd, (abs(i) for i in ints), 0)
    return tuple(Fraction(i // g) for i in ints)


def _closed_cone_generators(rows: list[tuple[int, ...]], n: int):
    rows = sorted(set(rows))
    lineality = _nullspace(rows, n)
    gens: list[tuple[Fraction, ...]] = []
    for v in lineality:
        p = _primitive(v)
        gens.extend([p, tuple(-c for c in p)])
    lin_rows = [tuple(_primitive(v)) for v in lineality]
    k = n - 1 - len(lineality)
    if k < 0:
        return tuple(gens)
    rays = set()
    for subset in itertools.combinations(rows, k):
        system = list(subset) + lin_rows
        null = _nullspace(system, n) if system else _nullspace([], n)
        if len(null) != 1:
            continue
        r = null[0]
        vals = [sum(a * b for a, b in zip(row, r)) for row in rows]
        if all(v >= 0 for v in vals):
            rays.add(_primitive(r))
        elif all(v <= 0 for v in vals):
            rays.add(_primitive(tuple(-c for c in r)))
    gens.extend(sorted(rays))
    return tuple(gens)


@dataclass(frozen=True)
class PolarizedWeightSet:
    original: tuple[Weight, ...]
    polarized: tuple[Weight, ...]
    sign: int
    cone: ConvexCone
    xi: tuple[Fraction, ...]

    @property
    def flips(self) -> int:
        return sum(1 for a, b in zip(self.original, self.polarized) if a != b)


# -- module-level operations ---------------------------------------------------


def halfspace_of_weight(w: Weight) -> HalfSpace:
    if not isinstance(w, Weight):
        w = Weight(tuple(w))
    return HalfSpace(w)


def intersect_cones(cones: Sequence[ConvexCone], prune: bool = False) -> ConvexCone:
    if not cones:
        raise ValueError("need at least one cone")
    dim = cones[0].dim
    for c in cones:
        if c.dim != dim:
            raise DimensionMismatch("cones of different dimension")
    hs = tuple(h for c in cones for h in c.halfspaces)
    out = ConvexCone(hs, dim)
    return out.prune() if prune else out


def is_open_nonempty(c: ConvexCone) -> bool:
    return c.is_open_nonempty()


def contains(c: ConvexCone, y) -> bool:
    if any(isinstance(v, str) for v in y):
        y = as_rational_vector(y)
    return c.contains(y)


def polar_dual(c: ConvexCone) -> ConvexCone:
    """Dual cone ``{xi : xi(y) >= 0 on c}``, stored through its interior.

    The generators of the closure of ``c`` become the defining
    functionals, so a dual with empty interior (e.g. a ray) is returned as
    a cone whose ``is_open_nonempty`` is False but whose closure is right.
    """
    if not c.is_open_nonempty():
        raise ConeEmpty("polar dual of an empty cone is not represented")
    return ConvexCone.from_weights([Weight(g) for g in c.generators()], dim=c.dim)


def polarize(weights: Sequence[Weight], xi) -> PolarizedWeightSet:
    xi = as_rational_vector(xi)
    ws = tuple(w if isinstance(w, Weight) else Weight(tuple(w)) for w in weights)
    den = reduce(lcm, (c.denominator for c in xi), 1)
    ixi = [int(c * den) for c in xi]
    polarized = []
    sign = 1
    for w in ws:
        if w.dim != len(xi):
            raise DimensionMismatch(f"weight {w} and polarization {xi} differ in dimension")
        v = sum(p * c for p, c in zip(w.primitive, ixi))
        if v == 0:
            raise DegenerateWeight(f"weight {w} vanishes on polarization vector {xi}", weight=w)
        if v > 0:
            polarized.append(w)
        else:
            polarized.append(-w)
            sign = -sign
    cone = ConvexCone.from_weights(polarized, dim=len(xi))
    return PolarizedWeightSet(ws, tuple(polarized), sign, cone, xi)


# -- serialization ---------------------------------------------------------


def _frac_str(c: Fraction) -> str:
    return f"{c.numerator}/{c.denominator}"


def weight_to_json(w: Weight) -> list[str]:
    return [_frac_str(c) for c in w.coefficients]


def weight_from_json(data) -> Weight:
    return Weight(tuple(Fraction(s) for s in data))


def cone_to_json(c: ConvexCone) -> list[list[str]]:
    return [weight_to_json(w) for w in c.weights]


def cone_from_json(data, dim: int | None = None) -> ConvexCone:
    return ConvexCone.from_weights([weight_from_json(w) for w in data], dim=dim)


def dumps_cone(c: ConvexCone) -> str:
    return json.dumps(cone_to_json(c))


def loads_cone(text: str, dim: int | None = None) -> ConvexCone:
    return cone_from_json(json.loads(text), dim=dim)
