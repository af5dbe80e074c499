"""The based loop group of SU(2) under the torus T x S^1.

Coordinates on Lie(T x S^1) are ``(z1, z2)``: ``z1`` along the coroot of the
maximal torus and ``z2`` along loop rotation, normalized so that the fixed
loop ``gamma_n(theta) = diag(e^{i n theta}, e^{-i n theta})`` has moment value
``(n, n^2/2)``. At ``gamma_n`` the isotropy weights at level ``k >= 1`` are

    k z2 (twice),   k z2 + 2(n z2 + z1),   k z2 - 2(n z2 + z1).

Dividing each root weight by ``k z2`` regularizes the infinite product, which
converges to ``sin(2 pi (n + w)) / (2 pi (n + w))`` with ``w = z1/z2``.
"""
from __future__ import annotations

import cmath
import enum
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .cones import ConvexCone, PolarizedWeightSet, Weight, polarize
from .errors import NoPeriodicSolution, TrivialCase
from .expr import (
    Add,
    Const,
    Div,
    Exp,
    Expr,
    GrowthClass,
    Index,
    Mul,
    Neg,
    Pow,
    Sin,
    Sinc,
    Var,
    evaluate,
)
from .fourier import Contour, PartitionOfUnity, contour_integral_nd, mixed_partition_2d
from .hyperfunction import BoundaryValueTerm, Hyperfunction, infinite_product, witness_vector

LOGGER = logging.getLogger(__name__)

XI = (Fraction(1, 4), Fraction(1))
PROBE_SCALE = 0.25
TWO_PI = 2 * math.pi

__all__ = [
    "XI",
    "LoopFixedPoint",
    "IsotropyWeightFamily",
    "isotropy_weights",
    "polarized_weights",
    "polarization_cone",
    "fixed_point_sign",
    "count_flips",
    "regularized_factor",
    "regularized_factor_template",
    "regularized_euler",
    "euler_class_closed_form",
    "euler_infinite_product",
    "unregularized_product",
    "picken_omega_su2",
    "picken_eval",
    "certified_truncation",
    "picken_convergence",
    "dh_integrand",
    "dh_integrand_expr",
    "dh_su2_probe",
    "slow_increase_probe",
    "Levi",
    "classify_subtorus",
    "FixedLoopSU2",
    "solve_fixed_loop",
    "solve_fixed_loop_from_modes",
    "verify_fixed_loop",
    "LoopReport",
]


# ---------------------------------------------------------------------------
# fixed points and weights


@dataclass(frozen=True)
class LoopFixedPoint:
    n: int

    @property
    def moment_value(self) -> tuple[Fraction, Fraction]:
        return (Fraction(self.n), Fraction(self.n * self.n, 2))


@dataclass(frozen=True)
class IsotropyWeightFamily:
    n: int

    def at(self, k: int) -> tuple[Weight, Weight, Weight, Weight]:
        """``(lambda_h, lambda_h, lambda_e, lambda_f)`` at level ``k``."""
        if k < 1:
            raise ValueError("levels start at k = 1")
        h = Weight.of(0, k)
        return (h, h, Weight.of(2, k + 2 * self.n), Weight.of(-2, k - 2 * self.n))

    def levels(self, k_max: int):
        for k in range(1, k_max + 1):
            yield k, self.at(k)


def isotropy_weights(n: int, k_max: int) -> list[Weight]:
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    fam = IsotropyWeightFamily(n)
    return [w for _, ws in fam.levels(k_max) for w in ws]


def polarized_weights(n: int, k_max: int, xi=XI) -> PolarizedWeightSet:
    return polarize(isotropy_weights(n, k_max), xi)


def count_flips(n: int, k_max: int | None = None, xi=XI) -> int:
    """Number of weights negative on ``xi`` (all of them occur for ``k <= 2|n|``)."""
    k_max = k_max if k_max is not None else 2 * abs(n) + 1
    return polarized_weights(n, k_max, xi).flips


GAMMA_0 = ConvexCone.from_weights([Weight.of(2, 1), Weight.of(-2, 1)])
GAMMA_NE0 = ConvexCone.from_weights([Weight.of(2, 1), Weight.of(-2, 1), Weight.of(1, 0)])


def polarization_cone(n: int) -> ConvexCone:
    """``{y2 > 2|y1|}`` for ``n = 0`` and its half ``{y1 > 0}`` otherwise."""
    return GAMMA_0 if n == 0 else GAMMA_NE0


def fixed_point_sign(n: int) -> int:
    """``(-1)^{p_n}``: ``2n`` flips for ``n > 0``, ``2|n| - 1`` for ``n < 0``."""
    return -1 if n < 0 else 1


# ---------------------------------------------------------------------------
# regularized Euler classes


def _w() -> Expr:
    return Div(Var(0), Var(1))


def _shifted(n: int) -> Expr:
    return Add((Const(n), _w())) if n else _w()


def regularized_factor_template(n: int, reciprocal: bool = False) -> Expr:
    """``lambda_e lambda_f / (k z2)^2 = 1 - (2(n + w)/k)^2`` in the index ``k``."""
    ratio = Div(Mul((Const(2), _shifted(n))), Index())
    factor = Add((Const(1), Neg(Pow(ratio, 2))))
    return Div(Const(1), factor) if reciprocal else factor


def regularized_factor(n: int, k: int, reciprocal: bool = False) -> BoundaryValueTerm:
    """Level-``k`` factor of the regularized Euler class at ``gamma_n``.

    The two Cartan weights contribute ``k z2 / (k z2) = 1`` and only their
    half-planes; the root weights give ``1 - (2(n + w)/k)^2``.
    """
    ratio = Mul((Const(2 / k), _shifted(n)))
    factor = Add((Const(1), Neg(Pow(ratio, 2))))
    expr = Div(Const(1), factor) if reciprocal else factor
    ws = IsotropyWeightFamily(n).at(k)
    cone = polarize(ws, XI).cone
    return BoundaryValueTerm(expr, cone, GrowthClass.slowly_increasing())


def regularized_euler(n: int) -> BoundaryValueTerm:
    """``b_{gamma_n}(2 pi (n + w) / sin(2 pi (n + w)))``, the reciprocal sinc form.

    Tagged slowly increasing by construction: the growth proposition for
    ``(n + w)/sin(2 pi w)`` on ``R^2 + i gamma_n`` is outside the rule-based
    classifier.
    """
    expr = Div(Const(1), Sinc(Mul((Const(TWO_PI), _shifted(n)))))
    return BoundaryValueTerm(expr, polarization_cone(n), GrowthClass.slowly_increasing())


def euler_class_closed_form(n: int) -> Expr:
    """``sin(2 pi (n + w)) / (2 pi (n + w))``."""
    return Sinc(Mul((Const(TWO_PI), _shifted(n))))


def _euler_probe(n: int):
    y = PROBE_SCALE * witness_vector(polarization_cone(n))
    return [[x1 + 1j * y[0], x2 + 1j * y[1]] for x1, x2 in ((0.25, 1.0), (-0.6, 1.3), (0.9, 0.7))]


def euler_infinite_product(n: int, K: int = 10_000, tol: float = 1e-3, reciprocal: bool = False) -> BoundaryValueTerm:
    """Regularized Euler class (or its reciprocal) as a certified truncated product."""
    return infinite_product(
        lambda k: regularized_factor(n, k, reciprocal),
        K,
        template=regularized_factor_template(n, reciprocal),
        probe=_euler_probe(n),
        tol=tol,
    )


def unregularized_product(n: int, K: int = 200, tol: float = 1e-3) -> BoundaryValueTerm:
    """The root weights multiplied without dividing by ``k z2``.

    Expected to fail: the partial products grow without bound.
    """
    w = Weight.of

    def factor(k):
        e = Mul((Add((Mul((Const(k), Var(1))), Mul((Const(2), Add((Mul((Const(n), Var(1))), Var(0))))))),
                 Add((Mul((Const(k), Var(1))), Neg(Mul((Const(2), Add((Mul((Const(n), Var(1))), Var(0))))))))))
        cone = polarize([w(2, k + 2 * n), w(-2, k - 2 * n), w(0, k)], XI).cone
        return BoundaryValueTerm(e, cone, GrowthClass.slowly_increasing())

    return infinite_product(factor, K, probe=_euler_probe(n), tol=tol)


# ---------------------------------------------------------------------------
# Picken hyperfunction


def _summand(n: int, form: str) -> Expr:
    phase = Exp(Add((Mul((Const(1j * n), Var(0))), Mul((Const(0.5j * n * n), Var(1))))))
    if form == "display":
        ratio = Div(Mul((Const(TWO_PI), _shifted(n))), Sin(Mul((Const(TWO_PI), _w()))))
        coeff = fixed_point_sign(n)
    elif form == "definitional":
        ratio = Div(Const(1), Sinc(Mul((Const(TWO_PI), _shifted(n)))))
        coeff = 1
    else:
        raise ValueError("form must be 'display' or 'definitional'")
    return Mul((Const(coeff), phase, ratio))


def picken_omega_su2(N: int, form: str = "display") -> Hyperfunction:
    """Truncated Picken hyperfunction, fixed points ``|n| <= N``.

    ``form="display"`` reproduces the published formula term for term:
    ``sign(n) exp(i(n z1 + n^2 z2/2)) 2 pi (n + w) / sin(2 pi w)``.
    ``form="definitional"`` assembles ``(-1)^{p_n} / e_{gamma_n}`` from the
    polarized weights, which gives ``2 pi (n + w) / sin(2 pi (n + w))``
    without the sign factor. The two differ by ``sign(n)`` on ``n < 0``.
    """
    if N < 0:
        raise ValueError("truncation N must be non-negative")
    norm = Const((2j * math.pi) ** -2)
    w_over_sinc = Div(Const(1), Sinc(Mul((Const(TWO_PI), _w()))))
    terms = []
    if N > 0:
        summands = tuple(_summand(n, form) for n in range(-N, N + 1) if n != 0)
        terms.append(BoundaryValueTerm(Mul((norm, Add(summands))), GAMMA_NE0, GrowthClass.slowly_increasing()))
    terms.append(BoundaryValueTerm(Mul((norm, w_over_sinc)), GAMMA_0, GrowthClass.slowly_increasing()))
    return Hyperfunction(tuple(terms), 2)


def _probe_offsets(scale: float = PROBE_SCALE):
    return {0: scale * witness_vector(GAMMA_0), 1: scale * witness_vector(GAMMA_NE0)}


def picken_eval(N: int, x: Sequence[float], scale: float = PROBE_SCALE, form: str = "display") -> complex:
    """Sum of the defining functions at ``x + i y_j``, ``y_j = scale * witness_j``."""
    f = picken_omega_su2(N, form)
    total = 0j
    for t in f.terms:
        y = scale * witness_vector(t.cone)
        total += complex(evaluate(t.expr, [x[0] + 1j * y[0], x[1] + 1j * y[1]]))
    return total


def certified_truncation(x: Sequence[float], tol: float, scale: float = PROBE_SCALE, n_cap: int = 100_000) -> int:
    """Smallest ``N`` whose omitted fixed points contribute less than ``tol``.

    Bounds ``|n| > N`` summands at the probe point of the ``gamma_{!=0}``
    term by ``(2 pi)^-2 2 pi (|n| + |w|) e^{-n^2 y2/2 + |n| |y1|} / |sin 2 pi w|``
    and sums that majorant until its terms fall below ``1e-3 tol``.
    """
    y = scale * witness_vector(GAMMA_NE0)
    z1, z2 = x[0] + 1j * y[0], x[1] + 1j * y[1]
    w = z1 / z2
    s = abs(cmath.sin(TWO_PI * w))
    if s == 0:
        raise ValueError("probe point on the polar locus")
    y1, y2 = abs(y[0]), y[1]

    def bound(n):
        return TWO_PI * (n + abs(w)) * math.exp(-n * n * y2 / 2 + n * y1) / s / (4 * math.pi**2)

    # tail sums for each N, computed from the far end
    n_top = 1
    while bound(n_top) > 1e-3 * tol * 1e-6 or n_top < 2 * y1 / y2 + 2:
        n_top += 1
        if n_top > n_cap:
            raise ValueError("no certified truncation below the cap")
    tail = 2 * sum(bound(n) for n in range(n_top, n_top + 50))
    for N in range(n_top - 1, -1, -1):
        tail += 2 * bound(N + 1)
        if tail >= tol:
            return N + 1
    return 0


def picken_convergence(x: Sequence[float], tol: float = 1e-6, scale: float = PROBE_SCALE, form: str = "display"):
    """``(N, val(N), val(2N), |val(2N) - val(N)|)`` at the certified ``N``."""
    N = max(1, certified_truncation(x, tol, scale))
    vN = picken_eval(N, x, scale, form)
    v2N = picken_eval(2 * N, x, scale, form)
    return N, vN, v2N, abs(v2N - vN)


# ---------------------------------------------------------------------------
# Duistermaat-Heckman integrand


def dh_integrand_expr(n: int, zeta: Sequence[complex], piece, partition: PartitionOfUnity | None = None) -> Expr:
    partition = partition or mixed_partition_2d()
    chi = partition.piece(piece)
    kernel = Exp(
        Add((Mul((Const(-1j * (complex(zeta[0]) - n)), Var(0))), Mul((Const(-1j * (complex(zeta[1]) - n * n / 2)), Var(1)))))
    )
    if n == 0:
        ratio = Div(Const(1), Sinc(Mul((Const(TWO_PI), _w()))))
    else:
        ratio = Div(Mul((Const(TWO_PI), _shifted(n))), Sin(Mul((Const(TWO_PI), _w()))))
    return Mul((kernel, ratio, chi))


def dh_integrand(n: int, zeta: Sequence[complex], z: Sequence[complex], piece, partition=None) -> complex:
    """``e^{-i(zeta1 - n) z1 - i(zeta2 - n^2/2) z2} 2 pi (n + w)/sin(2 pi w) chi_piece(z)``."""
    return complex(evaluate(dh_integrand_expr(n, zeta, piece, partition), list(z)))


@dataclass(frozen=True)
class DHProbeReport:
    n: int
    piece: tuple
    zeta: tuple
    values: tuple
    errors: tuple
    offsets: tuple
    spread: float | None
    status: str


def dh_su2_probe(n: int, piece, zeta, scales=(0.25, 0.5), R0: float = 8.0, order: int = 32) -> DHProbeReport:
    """Exploratory 2D quadrature of one DH integrand at two contour heights.

    Report only: no closed form is known, so the outcome is a pair of
    values, their error estimates, and the contour-independence spread.
    """
    from .errors import HyperlocError

    cone = polarization_cone(n)
    v = witness_vector(cone)
    e = dh_integrand_expr(n, zeta, tuple(piece))
    vals, errs, offs = [], [], []
    status = "ok"
    for s in scales:
        c = Contour(tuple(s * v), R0=R0, order=order, tails="horizontal", cone=cone)
        try:
            r = contour_integral_nd(e, c)
        except HyperlocError as exc:
            status = f"{type(exc).__name__}: {exc}"
            vals.append(None)
            errs.append(None)
        else:
            vals.append(r.value)
            errs.append(r.error)
        offs.append(tuple(c.y0))
    spread = abs(vals[0] - vals[1]) if all(v is not None for v in vals) else None
    return DHProbeReport(n, tuple(piece), tuple(zeta), tuple(vals), tuple(errs), tuple(offs), spread, status)


def slow_increase_probe(n: int, slope: float, y: Sequence[float] | None = None, eps: float = 0.1, r_max: float = 1e3,
                        samples: int = 200):
    """Damped magnitude ``|I_n(z)| e^{-eps |Re z|}`` along ``x1 = slope * x2``.

    ``I_n = (n + w)/sin(2 pi w)``. Returns ``(radii, damped)``; slow increase
    shows up as ``damped`` tending to zero.
    """
    y = np.asarray(y if y is not None else PROBE_SCALE * witness_vector(polarization_cone(n)), dtype=float)
    x2 = np.geomspace(1.0, r_max / math.hypot(1.0, slope), samples)
    z1 = slope * x2 + 1j * y[0]
    z2 = x2 + 1j * y[1]
    w = z1 / z2
    if n == 0:
        # w / sin(2 pi w) written through sinc so that w = 0 is regular
        vals = np.abs(1.0 / (TWO_PI * np.sinc(2 * w)))
    else:
        vals = np.abs((n + w) / np.sin(TWO_PI * w))
    radii = x2 * math.hypot(1.0, slope)
    return radii, vals * np.exp(-eps * radii)


# ---------------------------------------------------------------------------
# fixed loops of rank-one subtori


class Levi(enum.Enum):
    G = "LeviIsG"
    T = "LeviIsT"


def classify_subtorus(n: int, m: int) -> Levi:
    """``G = SU(2)`` exactly when ``n/m`` is a half-integer."""
    if m == 0:
        raise TrivialCase("m = 0: the subtorus acts by conjugation only")
    return Levi.G if (2 * n) % m == 0 else Levi.T


@dataclass(frozen=True)
class FixedLoopSU2:
    """``gamma(t) = [[alpha, -conj(beta)], [beta, conj(alpha)]]`` from its Fourier modes.

    ``alpha(t) = sum_k alpha_k e^{-ikt}`` and likewise for ``beta``.
    """

    n: int
    m: int
    alpha: dict = field(default_factory=dict)
    beta: dict = field(default_factory=dict)

    @property
    def nu(self) -> float:
        return self.n / self.m

    def _series(self, coeffs: dict, t, deriv: bool = False):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, dtype=complex)
        for k, c in coeffs.items():
            term = c * np.exp(-1j * k * t)
            out = out + (-1j * k * term if deriv else term)
        return out

    def alpha_at(self, t, deriv=False):
        return self._series(self.alpha, t, deriv)

    def beta_at(self, t, deriv=False):
        return self._series(self.beta, t, deriv)

    @property
    def alpha0_prime(self) -> complex:
        return complex(self.alpha_at(0.0, True))

    @property
    def beta0_prime(self) -> complex:
        return complex(self.beta_at(0.0, True))

    @property
    def modes(self) -> list[int]:
        return sorted(k for k, c in self.alpha.items() if abs(c) > 1e-14)

    def matrix(self, t):
        a, b = self.alpha_at(t), self.beta_at(t)
        return np.array([[a, -np.conj(b)], [b, np.conj(a)]])


def solve_fixed_loop_from_modes(n: int, m: int, k1: int, k2: int, A: float | None = None,
                                phase: float = 0.0) -> FixedLoopSU2:
    """Two-mode fixed loop with ``alpha`` supported on ``{k1, k2}``.

    Requires ``n/m = (k1 + k2)/2``; then ``C = |k2 - k1|/2`` and any
    ``A`` with ``(A + n/m)^2 < C^2`` works (default ``A = -n/m``), with
    ``|beta'(0)|^2 = C^2 - (A + n/m)^2``.
    """
    classify_subtorus(n, m)
    if k1 == k2:
        raise ValueError("mode pair must be distinct")
    k1, k2 = sorted((k1, k2))
    if Fraction(n, m) != Fraction(k1 + k2, 2):
        raise ValueError(f"modes {k1}, {k2} are inconsistent with n/m = {Fraction(n, m)}")
    nu = n / m
    C = (k2 - k1) / 2
    A = -nu if A is None else float(A)
    b2 = C * C - (A + nu) ** 2
    if b2 <= 0:
        raise ValueError("A leaves no room for a non-zero beta'(0)")
    b = math.sqrt(b2) * cmath.exp(1j * phase)
    return _two_mode_loop(n, m, k1, k2, A, b)


def _two_mode_loop(n, m, k1, k2, A, b) -> FixedLoopSU2:
    p = (A + k2) / (k2 - k1)
    q = -(A + k1) / (k2 - k1)
    alpha = {k1: complex(p), k2: complex(q)}
    beta = {}
    for k, c in alpha.items():
        # conj(beta_{-k}) = (alpha'(0) + ik) alpha_k / beta'(0)
        beta[-k] = np.conj((1j * A + 1j * k) * c / b)
    return FixedLoopSU2(n, m, alpha, {k: complex(v) for k, v in beta.items()})


def solve_fixed_loop(n: int, m: int, A: float, beta0_prime: complex, atol: float = 1e-9) -> FixedLoopSU2:
    """Fixed loop with initial data ``alpha'(0) = iA`` and ``beta'(0)``.

    Periodic solutions need integer ``k = n/m +- C`` with
    ``C = sqrt((A + n/m)^2 + |beta'(0)|^2)``.

    Raises
    ------
    NoPeriodicSolution
        The required modes are not integers.
    """
    classify_subtorus(n, m)
    nu = n / m
    b = complex(beta0_prime)
    C = math.sqrt((A + nu) ** 2 + abs(b) ** 2)
    ks = [nu - C, nu + C]
    if abs(b) <= atol:
        k = -A
        if abs(k - round(k)) <= atol:
            return FixedLoopSU2(n, m, {int(round(k)): 1 + 0j}, {})
        raise NoPeriodicSolution(f"alpha'(0) = {A}i is not an integer frequency")
    if not all(abs(k - round(k)) <= atol for k in ks):
        raise NoPeriodicSolution(
            f"modes n/m +- C = {ks[0]:.6g}, {ks[1]:.6g} are not both integers; only beta = 0 loops are fixed"
        )
    k1, k2 = (int(round(k)) for k in ks)
    return _two_mode_loop(n, m, k1, k2, A, b)


@dataclass(frozen=True)
class LoopReport:
    ode_alpha: float
    ode_beta: float
    unitarity: float
    initial: float
    vector_field: float
    mode_count: int
    threshold: float = 1e-8

    @property
    def passed(self) -> bool:
        worst = max(self.ode_alpha, self.ode_beta, self.unitarity, self.initial, self.vector_field)
        return worst < self.threshold and self.mode_count <= 2

    def to_json(self) -> dict:
        return {
            "ode_alpha": self.ode_alpha,
            "ode_beta": self.ode_beta,
            "unitarity": self.unitarity,
            "initial": self.initial,
            "vector_field": self.vector_field,
            "mode_count": self.mode_count,
            "passed": self.passed,
        }


def verify_fixed_loop(loop: FixedLoopSU2, samples: int = 64) -> LoopReport:
    """Residuals of the fixed-loop equations on ``samples`` points of ``[0, 2 pi)``.

    The vector-field residual is that of ``m X_E + X_tau`` with
    ``X_E = gamma'(t) - gamma(t) gamma'(0)``, ``X_tau = tau gamma - gamma tau``
    and ``tau = diag(i n, -i n)``, which vanishes exactly on fixed loops.
    """
    t = np.linspace(0.0, 2 * math.pi, samples, endpoint=False)
    a, b = loop.alpha_at(t), loop.beta_at(t)
    da, db = loop.alpha_at(t, True), loop.beta_at(t, True)
    a0p, b0p = loop.alpha0_prime, loop.beta0_prime
    nu = loop.nu
    r_alpha = np.max(np.abs(da - (a * a0p - np.conj(b) * b0p)))
    r_beta = np.max(np.abs(db - (b0p * np.conj(a) + (2j * nu + a0p) * b)))
    unit = np.max(np.abs(np.abs(a) ** 2 + np.abs(b) ** 2 - 1))
    init = abs(complex(loop.alpha_at(0.0)) - 1) + abs(complex(loop.beta_at(0.0)))
    g = np.array([[a, -np.conj(b)], [b, np.conj(a)]]).transpose(2, 0, 1)
    dg = np.array([[da, -np.conj(db)], [db, np.conj(da)]]).transpose(2, 0, 1)
    g0p = np.array([[a0p, -np.conj(b0p)], [b0p, np.conj(a0p)]])
    tau = np.diag([1j * loop.n, -1j * loop.n])
    field_ = loop.m * (dg - g @ g0p) + (tau @ g - g @ tau)
    vf = float(np.max(np.abs(field_)))
    return LoopReport(float(r_alpha), float(r_beta), float(unit), float(init), vf, len(loop.modes))
