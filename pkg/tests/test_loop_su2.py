"""The based loop group of SU(2): weights, cones, Euler classes, Picken sums, fixed loops."""
import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hyperloc.errors import NoPeriodicSolution, PoleError, TrivialCase
from hyperloc.expr import Add, evaluate
from hyperloc.fourier import mixed_partition_2d, orthant_partition
from hyperloc.loop_su2 import (
    GAMMA_0,
    GAMMA_NE0,
    XI,
    FixedLoopSU2,
    IsotropyWeightFamily,
    Levi,
    LoopFixedPoint,
    certified_truncation,
    classify_subtorus,
    count_flips,
    dh_integrand,
    euler_class_closed_form,
    euler_infinite_product,
    fixed_point_sign,
    picken_convergence,
    picken_eval,
    picken_omega_su2,
    polarization_cone,
    polarized_weights,
    regularized_euler,
    regularized_factor_template,
    slow_increase_probe,
    solve_fixed_loop,
    solve_fixed_loop_from_modes,
    verify_fixed_loop,
)

F = Fraction
small = st.floats(min_value=-2, max_value=2, allow_nan=False)


# -- fixed points, weights, cones, signs --------------------------------------------------


@pytest.mark.parametrize("n", [-4, 0, 3])
def test_moment_value(n):
    assert LoopFixedPoint(n).moment_value == (n, F(n * n, 2))


def test_weights_n1_k1():
    vals = sorted(float(w((F(1), F(1)))) for w in IsotropyWeightFamily(1).at(1))
    assert vals == [-3, 1, 1, 5]


def test_n0_weights_symmetric():
    for k in range(1, 6):
        ws = IsotropyWeightFamily(0).at(k)
        mirrored = {(-w.coefficients[0], w.coefficients[1]) for w in ws}
        assert mirrored == {tuple(w.coefficients) for w in ws}


def test_negative_root_weights_for_n1():
    neg = [k for k in range(1, 50) if IsotropyWeightFamily(1).at(k)[3](XI) < 0]
    assert neg == [1, 2]


@given(st.integers(-10, 10), st.integers(1, 100))
def test_polarized_inequalities(n, k):
    """lambda_f^(k)(xi) < 0 iff k <= 2n (n > 0); lambda_e^(k)(xi) < 0 iff k < 2|n| (n < 0)."""
    _, _, e, f = IsotropyWeightFamily(n).at(k)
    assert (f(XI) < 0) == (n > 0 and k <= 2 * n)
    assert (e(XI) < 0) == (n < 0 and k < 2 * abs(n))


@pytest.mark.parametrize(
    "n, expected",
    [(0, GAMMA_0), (5, GAMMA_NE0), (-3, GAMMA_NE0), (7, GAMMA_NE0)],
)
def test_polarization_cones(n, expected):
    computed = polarized_weights(n, 2 * abs(n) + 3).cone
    assert computed.same_membership(expected)
    assert polarization_cone(n).same_membership(expected)


def test_gamma_ne0_strictly_inside_gamma0():
    assert GAMMA_NE0.same_membership(GAMMA_0.intersect(GAMMA_NE0))
    assert GAMMA_0.contains((F(-1, 10), F(1))) and not GAMMA_NE0.contains((F(-1, 10), F(1)))


@pytest.mark.parametrize("n", [-3, 0, 1, 4])
def test_polarized_weights_positive_on_witness(n):
    v = polarization_cone(n).interior_witness()
    assert all(w(v) > 0 for w in polarized_weights(n, 100).polarized)


@pytest.mark.parametrize("n, sign", [(0, 1), (3, 1), (-2, -1)])
def test_fixed_point_signs(n, sign):
    assert fixed_point_sign(n) == sign


@pytest.mark.parametrize("n", range(-10, 11))
def test_sign_matches_flip_parity(n):
    assert fixed_point_sign(n) == (-1) ** count_flips(n, 2 * abs(n) + 5)


# -- regularized Euler classes -------------------------------------------------------------


@given(small, small, st.floats(0.5, 2), st.floats(0.1, 1), st.integers(-3, 3), st.integers(1, 50))
def test_regularization_identity(x1, x2, y2, y1_frac, n, k):
    z1, z2 = complex(x1, y1_frac * y2 / 2), complex(x2, y2)
    _, _, e, f = IsotropyWeightFamily(n).at(k)
    lhs = (float(e.coefficients[0]) * z1 + float(e.coefficients[1]) * z2) * (
        float(f.coefficients[0]) * z1 + float(f.coefficients[1]) * z2
    ) / (k * z2) ** 2
    t = regularized_factor_template(n)
    from hyperloc.expr import TruncatedProduct

    # the template at index k equals the one-factor truncated product starting at k
    rhs = evaluate(TruncatedProduct(t, 1, start=k), [z1, z2])
    assert abs(lhs - rhs) <= 1e-12 * max(1, abs(lhs))


def test_reciprocal_at_zero():
    assert evaluate(regularized_euler(0).expr, [1e-9 + 0j, 1 + 0j]) == pytest.approx(1)


def test_closed_form_vs_product_n0():
    term = euler_infinite_product(0, 10_000)
    zs = [0.25 + 0.1j, 1 + 0j]
    assert abs(evaluate(term.expr, zs) - evaluate(euler_class_closed_form(0), zs)) < 1e-3
    assert abs(evaluate(term.expr, zs) * evaluate(regularized_euler(0).expr, zs) - 1) < 5e-3


def test_reciprocal_pole():
    with pytest.raises(PoleError):
        evaluate(regularized_euler(1).expr, [0.5 + 0j, 1 + 0j])


# -- Picken hyperfunction -----------------------------------------------------------------------


def test_picken_n0_single_term():
    L = picken_omega_su2(0)
    assert len(L.terms) == 1 and L.terms[0].cone.same_membership(GAMMA_0)


def test_picken_n3_bookkeeping():
    L = picken_omega_su2(3)
    assert len(L.terms) == 2
    grouped = L.terms[0].expr.factors[1]
    assert isinstance(grouped, Add) and len(grouped.terms) + 1 == 7


@pytest.mark.parametrize("form", ["display", "definitional"])
def test_picken_converges_at_probe(form):
    N, vN, v2N, diff = picken_convergence((0.13, 1.7), 1e-6, form=form)
    assert diff < 1e-6 and N >= 1


def test_forms_differ_only_on_negative_n():
    x = (0.4, 1.1)
    diff = picken_eval(4, x, form="display") - picken_eval(4, x, form="definitional")
    assert abs(diff) > 1e-6  # the n < 0 summands change sign
    assert picken_eval(0, x, form="display") == pytest.approx(picken_eval(0, x, form="definitional"))


def test_certified_truncation_decreases_with_tolerance():
    assert certified_truncation((0.13, 1.7), 1e-3) <= certified_truncation((0.13, 1.7), 1e-9)


# -- DH integrand -----------------------------------------------------------------------------------


def test_dh_integrand_zero_phase():
    z = (0.25j, 1j)
    chi = orthant_partition(2).piece((1, 1))
    val = dh_integrand(0, (0, 0), z, (1, 1), orthant_partition(2))
    expect = evaluate(regularized_euler(0).expr, list(z)) * evaluate(chi, list(z))
    assert val == pytest.approx(expect)


@pytest.mark.parametrize("piece", [(1, 1), (1, -1), (-1, 1), (-1, -1)])
def test_dh_integrand_factorizes_and_is_finite(piece):
    z = (0.25 + 0.1j, 1 + 0j)
    zeta = (0.3, -0.2)
    n = 2
    val = dh_integrand(n, zeta, z, piece)
    w = z[0] / z[1]
    kernel = cmath.exp(-1j * (zeta[0] - n) * z[0] - 1j * (zeta[1] - n * n / 2) * z[1])
    ratio = 2 * math.pi * (n + w) / cmath.sin(2 * math.pi * w)
    chi = evaluate(mixed_partition_2d().piece(piece), list(z))
    assert np.isfinite(val) and val == pytest.approx(kernel * ratio * chi)


# -- slow increase -------------------------------------------------------------------------------------


@pytest.mark.parametrize("n", [0, 1])
@pytest.mark.parametrize("slope", [0.0, 0.3, -0.45])
def test_slow_increase(n, slope):
    radii, damped = slow_increase_probe(n, slope)
    assert radii[-1] >= 999
    assert damped[-1] < 1e-30 and damped[-1] < damped[0]


# -- fixed loops -----------------------------------------------------------------------------------------


@pytest.mark.parametrize("n, m, levi", [(1, 2, Levi.G), (1, 3, Levi.T), (2, 1, Levi.G), (3, 2, Levi.G), (2, 6, Levi.T)])
def test_classify_subtorus(n, m, levi):
    assert classify_subtorus(n, m) is levi


def test_trivial_subtorus():
    with pytest.raises(TrivialCase):
        classify_subtorus(1, 0)


@pytest.mark.parametrize("n, m, modes", [(1, 2, [0, 1]), (3, 2, [1, 2])])
def test_solve_from_initial_data(n, m, modes):
    nu = n / m
    A = -nu + 0.3
    b = cmath.sqrt(0.25 - 0.09) * cmath.exp(0.7j)
    loop = solve_fixed_loop(n, m, A, b)
    assert loop.modes == modes
    rep = verify_fixed_loop(loop)
    assert rep.passed and max(rep.ode_alpha, rep.ode_beta, rep.unitarity) < 1e-10


def test_third_has_no_periodic_solution():
    with pytest.raises(NoPeriodicSolution):
        solve_fixed_loop(1, 3, 0.2, 0.4 + 0.1j)


def test_inconsistent_mode_pair():
    with pytest.raises(ValueError):
        solve_fixed_loop_from_modes(1, 2, 0, 2)


def test_constant_loop_is_fixed():
    rep = verify_fixed_loop(FixedLoopSU2(1, 2, {0: 1 + 0j}, {}))
    assert rep.passed


def test_corrupted_loop_fails():
    loop = solve_fixed_loop_from_modes(1, 2, 0, 1)
    bad = FixedLoopSU2(1, 2, {k: v + (0.01 if k == 0 else 0) for k, v in loop.alpha.items()}, loop.beta)
    rep = verify_fixed_loop(bad)
    assert not rep.passed
    assert 1e-3 < max(rep.ode_alpha, rep.ode_beta, rep.unitarity) < 1e-1


@given(st.integers(-6, 6), st.integers(1, 6), st.floats(-1, 1), st.floats(0.05, 2), st.floats(0, 6.3))
def test_two_mode_solution_iff_half_integer(n, m, shift, bmod, phase):
    nu = n / m
    b = bmod * cmath.exp(1j * phase)
    C = math.sqrt(shift**2 + bmod**2)
    if classify_subtorus(n, m) is Levi.T:
        with pytest.raises(NoPeriodicSolution):
            solve_fixed_loop(n, m, -nu + shift, b)
        return
    # pick C so that nu +- C are integers: C = half the gap of the nearest symmetric pair
    s = 2 * n // m
    gap = 1 if s % 2 else 2
    scale = (gap / 2) / C
    loop = solve_fixed_loop(n, m, -nu + shift * scale, b * scale)
    assert len(loop.modes) == 2 and verify_fixed_loop(loop).passed


@pytest.mark.parametrize("n, m, k1, k2", [(1, 2, 0, 1), (3, 2, 1, 2), (2, 1, 1, 3), (2, 1, -1, 5)])
def test_loops_from_modes(n, m, k1, k2):
    loop = solve_fixed_loop_from_modes(n, m, k1, k2, phase=0.4)
    rep = verify_fixed_loop(loop)
    assert loop.modes == [k1, k2]
    assert rep.passed and rep.vector_field < 1e-10
