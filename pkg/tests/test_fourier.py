"""Partitions of unity, contour quadrature, residue oracle and Fourier transforms."""
import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hyperloc.cones import ConvexCone, Weight
from hyperloc.errors import ContourBlocked, NotIntegrable, NotSlowlyIncreasing, PoleError, Unsupported
from hyperloc.expr import Const, Exp, GrowthClass, I, Logistic, Mul, Sin, Var, evaluate, z
from hyperloc.fourier import (
    Contour,
    contour_integral_1d,
    fit_decay_rate,
    fourier_transform,
    mixed_partition_2d,
    orthant,
    orthant_partition,
    residue_sum_1d,
)
from hyperloc.hyperfunction import Hyperfunction, boundary_evaluate
from hyperloc.localization import builtin_s2, picken

LOWER = ConvexCone.from_weights([Weight.of(-1)])
UPPER = ConvexCone.from_weights([Weight.of(1)])
coords = st.floats(min_value=-4, max_value=4, allow_nan=False)
# the partition poles sit at Im z = odd multiples of pi (or of 1 for the pi z2 factor)
imag_parts = st.floats(min_value=-0.5, max_value=0.5, allow_nan=False)


def oracle_integrand(zeta, a=1.0, s=1):
    """``exp(-i(zeta - a) z) / (z (1 + exp(s z)))``."""
    return Exp(Mul((Const(-1j * (zeta - a)), Var(0)))) / (Var(0) * (1 + Exp(Mul((Const(s), Var(0))))))


# -- partitions of unity -------------------------------------------------------------


def test_orthant_partition_1d_pieces():
    p = orthant_partition(1)
    assert p.labels == [(1,), (-1,)]
    t = 0.7 - 0.2j
    assert evaluate(p.piece((1,)), [t]) == pytest.approx(1 / (1 + cmath.exp(-t)))
    assert evaluate(p.piece((-1,)), [t]) == pytest.approx(1 / (1 + cmath.exp(t)))


def test_orthant_partition_2d_sum():
    p = orthant_partition(2)
    assert len(p.pieces) == 4
    assert abs(p.total([1 + 1j, 2 - 1j]) - 1) < 1e-14


def test_orthant_piece_small_outside():
    assert abs(evaluate(orthant_partition(2).piece((1, 1)), [-10 + 0j, -10 + 0j])) < math.exp(-10)


def test_mixed_partition_sum_and_symmetry():
    p = mixed_partition_2d()
    assert abs(p.total([0.5 + 0.2j, -1 + 0.1j]) - 1) < 1e-14
    for _, chi, _ in p.pieces:
        assert evaluate(chi, [0j, 0j]) == pytest.approx(0.25, abs=1e-15)


def test_mixed_piece_decays_along_diagonal():
    chi = mixed_partition_2d().piece((-1, -1))  # 1/((1+e^{z1})(1+e^{pi z2}))
    rate, _ = fit_decay_rate(lambda zs: evaluate(chi, zs), [0.1j, 0.1j], [1, 1])
    assert rate > 0.9


@pytest.mark.parametrize("make", [lambda: orthant_partition(1), lambda: orthant_partition(2), mixed_partition_2d])
@given(data=st.data())
def test_partition_sums_to_one_and_covers(make, data):
    p = make()
    pts = [complex(data.draw(coords), data.draw(imag_parts)) for _ in range(p.dim)]
    assert abs(p.total(pts) - 1) < 1e-13
    y = [int(data.draw(st.integers(-5, 5))) for _ in range(p.dim)]
    assert p.covers(y)


@pytest.mark.parametrize("signs", [(1,), (-1,), (1, 1), (1, -1), (-1, -1)])
def test_pieces_decay_outside_their_orthant(signs):
    p = orthant_partition(len(signs))
    chi = p.piece(signs)
    d = [-float(s) for s in signs]
    rate, _ = fit_decay_rate(lambda zs: evaluate(chi, zs), [0.05j] * len(signs), d)
    assert rate > 0.9


# -- contours and quadrature -------------------------------------------------------------


def test_contour_offset_must_be_inside_cone():
    with pytest.raises(ValueError):
        Contour((0.1,), cone=LOWER)
    assert Contour.for_cone(LOWER, 0.3).y0 == (-0.3,)


@pytest.mark.parametrize("zeta", [1j, 0.3 + 0.5j, -2 + 0.9j, 2.5 + 0.05j])
def test_quadrature_matches_residue_closed_form(zeta):
    r = contour_integral_1d(oracle_integrand(zeta), Contour((-0.1,)))
    assert abs(r.value - evaluate(residue_sum_1d(1.0), [zeta])) < 1e-6
    assert r.error < 1e-6


@pytest.mark.parametrize("zeta", [1j, 0.4 + 0.3j])
def test_contour_height_independence(zeta):
    a = contour_integral_1d(oracle_integrand(zeta), Contour((-0.1,)))
    b = contour_integral_1d(oracle_integrand(zeta), Contour((-0.3,)))
    assert abs(a.value - b.value) < 1e-6


def test_pole_on_contour_blocks():
    with pytest.raises(ContourBlocked):
        contour_integral_1d(Const(1) / (Var(0) + 0.1j) * Logistic(Var(0)), Contour((-0.1,)))


def test_non_decaying_integrand():
    with pytest.raises(NotIntegrable):
        contour_integral_1d(Exp(Mul((Const(0.5), Var(0)))) + Exp(Mul((Const(-0.5), Var(0)))),
                            Contour((-0.1,), tails="horizontal"))


def test_gaussian_integral():
    r = contour_integral_1d(Exp(-(Var(0) * Var(0))), Contour((0.2,)))
    assert abs(r.value - math.sqrt(math.pi)) < 1e-12


# -- residue oracle ----------------------------------------------------------------------------


@pytest.mark.parametrize("a", [1.0, -1.0])
def test_residue_closed_form_shape(a):
    zeta = 0.2 + 0.4j
    assert evaluate(residue_sum_1d(a), [zeta]) == pytest.approx(cmath.log(cmath.tanh(math.pi * (zeta - a) / 2)))


def test_residue_closed_form_branch_point():
    with pytest.raises(PoleError):
        evaluate(residue_sum_1d(1.0), [1 + 0j])


def test_residue_sign_checked():
    with pytest.raises(Unsupported):
        residue_sum_1d(1.0, sign=2)


@pytest.mark.parametrize("zeta", [-0.5j, 0.3 - 0.5j, -1.7 - 0.2j])
def test_lower_sign_oracle(zeta):
    r = contour_integral_1d(oracle_integrand(zeta, -1.0, -1), Contour((-0.1,)))
    assert abs(r.value - evaluate(residue_sum_1d(-1.0, -1), [zeta])) < 1e-6


# -- transforms ---------------------------------------------------------------------------------


def test_transform_of_zero():
    res = fourier_transform(Hyperfunction.zero(1))
    assert res.hyperfunction.terms == ()
    assert boundary_evaluate(res.hyperfunction, [0.3]).value == 0


def test_output_cones_are_negated_duals():
    res = fourier_transform(Hyperfunction.single(Exp(I * z(1)) / z(1), LOWER))
    for prov in res.provenance:
        assert prov.cone.same_membership(orthant(tuple(-s for s in prov.piece)))


def test_single_s2_term_matches_residue_oracle():
    """The chi_+ piece of b_{y<0}(e^{iz}/z) is the lower-sign residue sum shifted to 1."""
    res = fourier_transform(Hyperfunction.single(Exp(I * z(1)) / z(1), LOWER))
    fn = dict(zip([p.piece for p in res.provenance], res.functions()))
    for zeta in (0.3 - 0.5j, -1.2 - 0.25j, 2.0 - 0.7j):
        assert abs(fn[(1,)].evaluate([zeta]) - evaluate(residue_sum_1d(1.0, -1), [zeta])) < 1e-4
    for zeta in (0.3 + 0.5j, 2.0 + 0.25j):
        assert abs(fn[(-1,)].evaluate([zeta]) - evaluate(residue_sum_1d(1.0, 1), [zeta])) < 1e-4


def test_unclassified_term_rejected():
    f = Hyperfunction.single(Sin(z(1)) * Exp(z(1) * z(1)), UPPER, GrowthClass.unclassified())
    with pytest.raises(NotSlowlyIncreasing):
        fourier_transform(f)


def test_transform_is_linear():
    f = Hyperfunction.single(Exp(I * z(1)) / z(1), LOWER)
    g = Hyperfunction.single(Exp(-I * z(1)) / z(1), LOWER)
    both = fourier_transform(f + g).hyperfunction
    sep = fourier_transform(f).hyperfunction + fourier_transform(g).hyperfunction
    for x in (-0.4, 1.6):
        a, b = boundary_evaluate(both, [x]), boundary_evaluate(sep, [x])
        assert abs(a.value - b.value) <= a.error + b.error + 1e-12


@pytest.mark.parametrize("x, expected", [(0.0, 1.0), (2.0, 0.0)])
def test_s2_duistermaat_heckman(x, expected):
    dh = fourier_transform(picken(builtin_s2(-1))).hyperfunction
    bv = boundary_evaluate(dh, [x])
    assert abs(bv.value - expected) < 1e-3
    assert bv.error < 1e-6
