"""Assemble Picken hyperfunctions from isolated fixed-point data.

For a Hamiltonian torus action with isolated fixed points ``p`` the Picken
hyperfunction is

    L(x) = (2 pi i)^(-d) sum_p (-1)^p exp(i mu(p)(x)) / e_p(x),

where the weights ``lambda`` at ``p`` are flipped to ``lambda~`` so that they
are positive on a polarization vector ``xi``, ``(-1)^p`` counts the flips and
``1/e_p`` is read as the boundary value ``b_{gamma_p}(prod 1/lambda~)`` from
the cone ``gamma_p = {y : lambda~(y) > 0 for all weights}``.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

from .cones import (
    PolarizedWeightSet,
    Weight,
    as_rational_vector,
    polarize,
    weight_from_json,
    weight_to_json,
)
from .errors import ConeEmpty, DimensionMismatch
from .expr import Add, Const, Div, Exp, Expr, GrowthClass, Linear, Mul, Var, classify_growth
from .hyperfunction import BoundaryValueTerm, Hyperfunction

LOGGER = logging.getLogger(__name__)

__all__ = [
    "FixedPointDatum",
    "LocalizationProblem",
    "euler_reciprocal",
    "phase",
    "picken",
    "builtin_s2",
    "problem_to_json",
    "problem_from_json",
    "dumps_problem",
    "loads_problem",
]


@dataclass(frozen=True)
class FixedPointDatum:
    """An isolated fixed point: moment value, isotropy weights, polarization."""

    label: str
    moment_value: tuple[float, ...]
    weights: tuple[Weight, ...]
    xi: tuple[Fraction, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "moment_value", tuple(float(m) for m in self.moment_value))
        ws = tuple(w if isinstance(w, Weight) else Weight(tuple(w)) for w in self.weights)
        object.__setattr__(self, "weights", ws)
        for w in ws:
            if w.dim != len(self.moment_value):
                raise DimensionMismatch(f"weight {w} and moment value {self.moment_value} at {self.label}")
        if self.xi is not None:
            object.__setattr__(self, "xi", as_rational_vector(self.xi))
            self.polarized  # validates the polarization eagerly

    @property
    def dim(self) -> int:
        return len(self.moment_value)

    @property
    def polarized(self) -> PolarizedWeightSet:
        if self.xi is None:
            raise ValueError(f"fixed point {self.label} has no polarization vector")
        return polarize(self.weights, self.xi)

    @property
    def sign(self) -> int:
        """``(-1)^p``: the parity of the number of flipped weights."""
        return self.polarized.sign

    def with_polarization(self, xi) -> "FixedPointDatum":
        return replace(self, xi=as_rational_vector(xi))


def euler_reciprocal(p: FixedPointDatum) -> BoundaryValueTerm:
    """``b_{gamma_p}(prod 1/lambda~)``; the flip sign is kept separately in ``p.sign``."""
    pol = p.polarized
    if not pol.cone.is_open_nonempty():
        raise ConeEmpty(f"weights at {p.label} do not lie in an open half-space")
    if not pol.polarized:
        return BoundaryValueTerm(Const(1), pol.cone, GrowthClass.slowly_increasing())
    den = pol.polarized[0] if len(pol.polarized) == 1 else None
    den_expr = Linear(den) if den is not None else Mul(tuple(Linear(w) for w in pol.polarized))
    expr = Div(Const(1), den_expr)
    return BoundaryValueTerm(expr, pol.cone)


def phase(moment: Sequence[float]) -> Expr:
    """``exp(i mu(z))`` for the moment value ``mu``."""
    parts = [Mul((Const(1j * m), Var(j))) for j, m in enumerate(moment) if m != 0]
    if not parts:
        return Const(1)
    return Exp(parts[0] if len(parts) == 1 else Add(tuple(parts)))


@dataclass(frozen=True)
class LocalizationProblem:
    """Torus rank, fixed points and a polarization vector valid for all of them."""

    rank: int
    fixed_points: tuple[FixedPointDatum, ...]
    polarization: tuple[Fraction, ...]

    def __post_init__(self):
        xi = as_rational_vector(self.polarization)
        if len(xi) != self.rank:
            raise DimensionMismatch(f"polarization of length {len(xi)} for rank {self.rank}")
        object.__setattr__(self, "polarization", xi)
        pts = []
        for p in self.fixed_points:
            if p.dim != self.rank:
                raise DimensionMismatch(f"fixed point {p.label} has dimension {p.dim}, rank is {self.rank}")
            pts.append(p.with_polarization(xi))
        object.__setattr__(self, "fixed_points", tuple(pts))

    def with_polarization(self, xi) -> "LocalizationProblem":
        return LocalizationProblem(self.rank, self.fixed_points, as_rational_vector(xi))

    def point(self, label: str) -> FixedPointDatum:
        for p in self.fixed_points:
            if p.label == label:
                return p
        raise KeyError(label)


def picken(problem: LocalizationProblem) -> Hyperfunction:
    """One boundary-value term per fixed point, normalized by ``(2 pi i)^(-d)``."""
    norm = (2j * math.pi) ** (-problem.rank)
    terms = []
    for p in problem.fixed_points:
        base = euler_reciprocal(p)
        expr = Mul((Const(p.sign * norm), phase(p.moment_value), base.expr))
        growth = classify_growth(expr, base.cone)
        terms.append(BoundaryValueTerm(expr, base.cone, growth))
        LOGGER.debug("fixed point %s: sign %+d, cone %s, growth %s", p.label, p.sign, base.cone, growth.kind.name)
    return Hyperfunction(tuple(terms), problem.rank)


def builtin_s2(xi=-1) -> LocalizationProblem:
    """Rotation of the 2-sphere: poles N (moment +1, weight +1) and S (moment -1, weight -1)."""
    pts = (
        FixedPointDatum("N", (1.0,), (Weight.of(1),)),
        FixedPointDatum("S", (-1.0,), (Weight.of(-1),)),
    )
    return LocalizationProblem(1, pts, (xi,))


# ---------------------------------------------------------------------------
# JSON


def _frac(c: Fraction) -> str:
    return f"{c.numerator}/{c.denominator}"


def problem_to_json(problem: LocalizationProblem) -> dict:
    return {
        "rank": problem.rank,
        "polarization": [_frac(c) for c in problem.polarization],
        "fixed_points": [
            {"label": p.label, "moment": list(p.moment_value), "weights": [weight_to_json(w) for w in p.weights]}
            for p in problem.fixed_points
        ],
    }


def problem_from_json(data: dict) -> LocalizationProblem:
    pts = tuple(
        FixedPointDatum(
            str(fp["label"]),
            tuple(float(m) for m in fp["moment"]),
            tuple(weight_from_json(w) for w in fp["weights"]),
        )
        for fp in data.get("fixed_points", [])
    )
    return LocalizationProblem(int(data["rank"]), pts, tuple(data["polarization"]))


def dumps_problem(problem: LocalizationProblem) -> str:
    return json.dumps(problem_to_json(problem), indent=2)


def loads_problem(text: str) -> LocalizationProblem:
    return problem_from_json(json.loads(text))
