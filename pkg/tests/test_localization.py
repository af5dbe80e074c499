"""Picken hyperfunctions assembled from fixed-point data."""
import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hyperloc.cones import ConvexCone, Weight
from hyperloc.errors import DegenerateWeight, DimensionMismatch
from hyperloc.expr import evaluate
from hyperloc.hyperfunction import boundary_evaluate, equality_probe
from hyperloc.localization import (
    FixedPointDatum,
    LocalizationProblem,
    builtin_s2,
    dumps_problem,
    euler_reciprocal,
    loads_problem,
    picken,
    problem_from_json,
    problem_to_json,
)

LOWER = ConvexCone.from_weights([Weight.of(-1)])
TWO_PI_I = 2j * np.pi


def cp2(xi=(1, 2), flip_first=False, moment_scale=1.0):
    """CP^2 under T^2: moments at the vertices of the standard simplex."""
    s = -1 if flip_first else 1
    data = [
        ("p0", (0.0, 0.0), [(1, 0), (0, 1)]),
        ("p1", (1.0, 0.0), [(-1, 0), (-1, 1)]),
        ("p2", (0.0, 1.0), [(0, -1), (1, -1)]),
    ]
    pts = tuple(
        FixedPointDatum(lab, (s * moment_scale * m[0], moment_scale * m[1]), tuple(Weight.of(s * a, b) for a, b in ws))
        for lab, m, ws in data
    )
    return LocalizationProblem(2, pts, (s * xi[0], xi[1]))


# -- fixed points and Euler reciprocals --------------------------------------------


def test_north_pole_reciprocal():
    p = builtin_s2(-1).point("N")
    term = euler_reciprocal(p)
    assert term.cone.same_membership(LOWER)
    assert evaluate(term.expr, [0.5 - 0.2j]) == pytest.approx(1 / -(0.5 - 0.2j))
    assert p.sign == -1


def test_single_weight_in_plane():
    p = FixedPointDatum("p", (0.0, 0.0), (Weight.of(1, 0),), xi=(1, 0))
    term = euler_reciprocal(p)
    assert term.cone.same_membership(ConvexCone.from_weights([Weight.of(1, 0)]))
    assert evaluate(term.expr, [0.3 + 0.1j, 5.0]) == pytest.approx(1 / (0.3 + 0.1j))


def test_opposite_weights_cannot_be_polarized_along_their_kernel():
    with pytest.raises(DegenerateWeight):
        FixedPointDatum("p", (0.0, 0.0), (Weight.of(1, 0), Weight.of(-1, 0)), xi=(0, 1))


def test_opposite_weights_polarize_to_a_double_factor():
    p = FixedPointDatum("p", (0.0, 0.0), (Weight.of(1, 0), Weight.of(-1, 0)), xi=(1, 0))
    assert p.sign == -1
    assert p.polarized.polarized == (Weight.of(1, 0), Weight.of(1, 0))


def test_dimension_checks():
    with pytest.raises(DimensionMismatch):
        FixedPointDatum("p", (0.0,), (Weight.of(1, 0),))
    with pytest.raises(DimensionMismatch):
        LocalizationProblem(2, (), (1,))


# -- S^2 ---------------------------------------------------------------------------------


def test_s2_signs_and_cones():
    prob = builtin_s2(-1)
    n, s = prob.point("N"), prob.point("S")
    assert n.sign == -1
    assert s.sign == 1  # the weight -1 is already positive on xi = -1
    assert n.polarized.cone.same_membership(s.polarized.cone)
    assert n.polarized.cone.same_membership(LOWER)


def test_s2_picken_pair():
    """2 pi i L = [0, (e^{iz} - e^{-iz}) / z] from below."""
    L = picken(builtin_s2(-1))
    assert len(L.terms) == 2 and all(t.cone.same_membership(LOWER) for t in L.terms)
    z = 0.7 - 0.3j
    total = sum(evaluate(t.expr, [z]) for t in L.terms)
    assert TWO_PI_I * total == pytest.approx((np.exp(1j * z) - np.exp(-1j * z)) / z)


def test_s2_other_polarization_lives_above():
    L = picken(builtin_s2(1))
    assert all(t.cone.contains((Fraction(1),)) for t in L.terms)
    z = 0.7 + 0.3j
    total = sum(evaluate(t.expr, [z]) for t in L.terms)
    assert TWO_PI_I * total == pytest.approx((np.exp(1j * z) - np.exp(-1j * z)) / z)


def test_empty_problem_is_zero():
    L = picken(LocalizationProblem(1, (), (1,)))
    assert L.terms == ()
    assert boundary_evaluate(L, [0.2]).value == 0


def test_s2_polarizations_agree():
    assert equality_probe(picken(builtin_s2(-1)), picken(builtin_s2(1)), [(-3, 3)], steps=13).consistent


@given(st.sampled_from([Fraction(1, 3), Fraction(2), Fraction(-1, 2), Fraction(-5)]))
def test_s2_polarization_independence(xi):
    verdict = equality_probe(picken(builtin_s2(-1)), picken(builtin_s2(xi)), [(-2.5, 2.5)], steps=6)
    assert verdict.consistent


def test_cp2_polarization_independence():
    a, b = picken(cp2((1, 2))), picken(cp2((-3, 1)))
    verdict = equality_probe(a, b, [(-1.3, 1.1), (-0.9, 1.7)], steps=4)
    assert verdict.consistent and not verdict.skipped


# -- reflections and scaling ------------------------------------------------------------

points2 = st.tuples(st.floats(-2, 2), st.floats(-2, 2)).filter(
    lambda x: min(abs(x[0]), abs(x[1]), abs(x[0] - x[1])) > 0.2
)


@given(points2)
def test_reflecting_a_coordinate(x):
    """Negating the first weight components, moment components and xi_1 reflects L."""
    L, Lr = picken(cp2()), picken(cp2(flip_first=True))
    a = boundary_evaluate(Lr, list(x))
    b = boundary_evaluate(L, [-x[0], x[1]])
    assert abs(a.value - b.value) <= 10 * (a.error + b.error) + 1e-9


@given(points2)
def test_doubling_moments(x):
    """With moments doubled, L_2(x) = 2^{#weights} L(2x)."""
    L, L2 = picken(cp2()), picken(cp2(moment_scale=2.0))
    a = boundary_evaluate(L2, list(x))
    b = boundary_evaluate(L, [2 * x[0], 2 * x[1]])
    assert abs(a.value - 4 * b.value) <= 10 * (a.error + 4 * b.error) + 1e-9


# -- JSON -----------------------------------------------------------------------------------


def test_problem_json_round_trip():
    prob = cp2((-3, 1))
    back = loads_problem(dumps_problem(prob))
    assert back == prob
    assert problem_from_json(json.loads(json.dumps(problem_to_json(builtin_s2())))) == builtin_s2()


def test_problem_json_schema():
    data = problem_to_json(builtin_s2(-1))
    assert set(data) == {"rank", "polarization", "fixed_points"}
    assert data["fixed_points"][0] == {"label": "N", "moment": [1.0], "weights": [["1/1"]]}
