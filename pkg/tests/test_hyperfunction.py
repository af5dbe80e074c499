"""Boundary-value hyperfunctions: algebra, products, numerical boundary values."""
import io
import math
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hyperloc.cones import ConvexCone, Weight
from hyperloc.errors import ConeEmpty, ConvergenceError, DimensionMismatch, EvaluationBlocked, ProductUndefined
from hyperloc.expr import Const, Div, Exp, GrowthClass, I, Log, Mul, Var, evaluate, z
from hyperloc.hyperfunction import (
    BoundaryValueTerm,
    Hyperfunction,
    add,
    boundary_evaluate,
    dumps_hyperfunction,
    equality_probe,
    hyperfunction_from_json,
    hyperfunction_to_json,
    infinite_product,
    product,
    write_boundary_csv,
)
from hyperloc.localization import builtin_s2, picken
from hyperloc.loop_su2 import GAMMA_0, euler_infinite_product, unregularized_product

UPPER = ConvexCone.from_weights([Weight.of(1)])
LOWER = ConvexCone.from_weights([Weight.of(-1)])
z1 = z(1)
xs = st.floats(min_value=-3, max_value=3, allow_nan=False).filter(lambda x: abs(x) > 0.05)


def test_term_over_empty_cone_rejected():
    with pytest.raises(ConeEmpty):
        BoundaryValueTerm(Const(1), ConvexCone.from_weights([Weight.of(1), Weight.of(-1)]))


def test_sum_evaluates_to_sum():
    f = Hyperfunction.single(Exp(I * z1) / z1, UPPER)
    g = Hyperfunction.single(Exp(-I * z1) / z1, LOWER)
    h = f + g
    assert len(h.terms) == 2
    x = [0.7]
    total = boundary_evaluate(h, x)
    parts = [boundary_evaluate(f, x), boundary_evaluate(g, x)]
    assert abs(total.value - sum(p.value for p in parts)) <= total.error + sum(p.error for p in parts) + 1e-12


def test_add_zero_is_identity():
    f = Hyperfunction.single(Exp(I * z1) / z1, UPPER)
    assert add(f, Hyperfunction.zero(1)) == f


def test_add_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        add(Hyperfunction.zero(1), Hyperfunction.zero(2))


def test_product_same_cone():
    f = Hyperfunction.single(Exp(I * z1), UPPER)
    g = Hyperfunction.single(Const(1) / z1, UPPER)
    fg = product(f, g)
    assert fg.terms[0].cone.same_membership(UPPER)
    assert evaluate(fg.terms[0].expr, [0.3 + 0.2j]) == pytest.approx(np.exp(1j * (0.3 + 0.2j)) / (0.3 + 0.2j))


def test_product_disjoint_cones():
    with pytest.raises(ProductUndefined):
        product(Hyperfunction.single(Const(1), UPPER), Hyperfunction.single(Const(1), LOWER))


def test_product_of_first_loop_weights_lands_on_gamma0():
    a = Hyperfunction.single(Const(1) / (2 * z(1) + z(2)), ConvexCone.from_weights([Weight.of(2, 1)]))
    b = Hyperfunction.single(Const(1) / (z(2) - 2 * z(1)), ConvexCone.from_weights([Weight.of(-2, 1)]))
    assert (a * b).terms[0].cone.same_membership(GAMMA_0)


@given(st.lists(st.tuples(st.integers(-3, 3), st.integers(-3, 3)).filter(lambda t: t != (0, 0)), min_size=1, max_size=3),
       st.lists(st.tuples(st.integers(-3, 3), st.integers(-3, 3)).filter(lambda t: t != (0, 0)), min_size=1, max_size=3))
def test_product_cone_is_exact_intersection(wa, wb):
    ca = ConvexCone.from_weights([Weight.of(*w) for w in wa])
    cb = ConvexCone.from_weights([Weight.of(*w) for w in wb])
    if not (ca.is_open_nonempty() and cb.is_open_nonempty()):
        return
    both = ConvexCone.from_weights(list(ca.weights) + list(cb.weights))
    f, g = Hyperfunction.single(Const(1), ca), Hyperfunction.single(Const(2), cb)
    if not both.is_open_nonempty():
        with pytest.raises(ProductUndefined):
            product(f, g)
    else:
        assert product(f, g).terms[0].cone.same_membership(both)


# -- infinite products -----------------------------------------------------------


def test_regularized_euler_product_matches_sinc():
    term = euler_infinite_product(0, 10_000)
    assert term.cone.same_membership(GAMMA_0)
    zs = [0.25 + 0.1j, 1 + 0j]
    w = zs[0] / zs[1]
    assert abs(evaluate(term.expr, zs) - np.sin(2 * np.pi * w) / (2 * np.pi * w)) < 1e-3
    assert term.truncation_error < 1e-3


def test_unit_factors():
    term = infinite_product(lambda k: BoundaryValueTerm(Const(1), UPPER), 20)
    assert term.cone.same_membership(UPPER)
    assert evaluate(term.expr, [0.5 + 0.5j]) == 1
    assert term.truncation_error == 0


def test_unregularized_product_diverges():
    with pytest.raises(ConvergenceError) as info:
        unregularized_product(0, 200)
    assert info.value.estimate > 1e-3


def test_unregularized_cauchy_estimate_grows():
    estimates = []
    for K in (4, 8, 16, 32):
        with pytest.raises(ConvergenceError) as info:
            unregularized_product(1, K)
        estimates.append(info.value.estimate)
    assert all(b > a for a, b in zip(estimates, estimates[1:]))


def test_product_independent_of_ordering():
    K = 100

    def factor(k):
        return BoundaryValueTerm(1 - (2 * (Var(0) / Var(1)) / k) ** 2, GAMMA_0, GrowthClass.slowly_increasing())

    ordered = [factor(k) for k in range(1, 2 * K + 1)]
    shuffled = ordered[:K]
    random.Random(7).shuffle(shuffled)
    zs = [0.3 + 0.05j, 1.0 + 0.1j]
    a = infinite_product(ordered, K, probe=[zs], tol=1e-2)
    b = infinite_product(shuffled + ordered[K:], K, probe=[zs], tol=1e-2)
    assert abs(evaluate(a.expr, zs) - evaluate(b.expr, zs)) < 1e-12


# -- boundary evaluation ---------------------------------------------------------


def test_zero_expression():
    bv = boundary_evaluate(Hyperfunction.single(Const(0), UPPER), [0.4])
    assert bv.value == 0 and bv.error == 0


def test_dirac_type_singularity_diverges():
    bv = boundary_evaluate(Hyperfunction.single(Const(1) / z1, UPPER), [0.0])
    assert bv.divergent and bv.trend > 1.5


def test_regular_point_converges():
    bv = boundary_evaluate(Hyperfunction.single(Log(z1 - 1), UPPER), [0.5])
    assert abs(bv.value - (math.log(0.5) + 1j * math.pi)) < 1e-8


def test_blocked_point():
    f = Hyperfunction.single(Const(1) / (Var(0) - 0.25j), UPPER)
    with pytest.raises(EvaluationBlocked):
        boundary_evaluate(f, [0.0], eps_sequence=[0.5, 0.25, 0.125])


@given(xs)
def test_s2_picken_conjugate_symmetry(x):
    """Swapping x -> -x conjugates the S^2 Picken hyperfunction."""
    L = picken(builtin_s2(-1))
    a, b = boundary_evaluate(L, [x]), boundary_evaluate(L, [-x])
    assert abs(a.value - np.conj(b.value)) <= 10 * (a.error + b.error) + 1e-9


@given(xs)
def test_boundary_evaluation_is_additive(x):
    f = Hyperfunction.single(Exp(I * z1) / (z1 + 4), UPPER)
    g = Hyperfunction.single(Log(z1 + 5j), LOWER)
    s = boundary_evaluate(f + g, [x])
    parts = boundary_evaluate(f, [x]), boundary_evaluate(g, [x])
    assert abs(s.value - parts[0].value - parts[1].value) <= s.error + parts[0].error + parts[1].error + 1e-12


# -- equality probe --------------------------------------------------------------------


def test_polarizations_of_s2_consistent():
    verdict = equality_probe(picken(builtin_s2(-1)), picken(builtin_s2(1)), [(-2.5, 2.5)], steps=11)
    assert verdict.kind == "ConsistentWithEqual"


def test_reciprocal_distinguished_from_zero():
    verdict = equality_probe(Hyperfunction.single(Const(1) / z1, UPPER), Hyperfunction.zero(1), [(-0.5, 0.5)], steps=5)
    assert verdict.kind == "Distinguished"


def test_log_tanh_minus_log_extends_across_axis():
    """Log tanh(pi(zeta-1)/2) - Log(zeta-1) is analytic near the real axis away from 1."""
    from hyperloc.expr import Tanh

    a = Hyperfunction.single(Log(Tanh(Mul((Const(math.pi / 2), Var(0) - 1)))) - Log(Var(0) - 1), UPPER)
    b = Hyperfunction.single(Log(Tanh(Mul((Const(math.pi / 2), Var(0) - 1)))) - Log(Var(0) - 1), LOWER)
    verdict = equality_probe(a, b, [(1.2, 2.0)], steps=5)
    assert verdict.kind == "ConsistentWithEqual"


# -- serialization -------------------------------------------------------------------------


def test_json_round_trip():
    f = picken(builtin_s2(-1))
    back = hyperfunction_from_json(hyperfunction_to_json(f))
    assert back.dim == 1 and len(back.terms) == 2
    for t, u in zip(f.terms, back.terms):
        assert t.expr == u.expr and t.cone.same_membership(u.cone) and t.growth.kind is u.growth.kind
    assert dumps_hyperfunction(back) == dumps_hyperfunction(f)


def test_csv_stream_has_error_column():
    buf = io.StringIO()
    rows = write_boundary_csv(picken(builtin_s2(-1)), [[0.5], [1.5]], buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "x1,re,im,err"
    assert len(rows) == 2 and all(r[-1] >= 0 for r in rows)
