"""Fourier transforms of slowly increasing hyperfunctions.

Each term ``b_gamma(F)`` is cut into pieces by a holomorphic partition of
unity ``sum_sigma chi_sigma = 1``. The piece ``F chi_sigma`` is exponentially
decreasing along the reals, so

    integral of exp(-i zeta . z) F(z) chi_sigma(z) dz   over  Im z = y0 in gamma

is holomorphic for ``Im zeta`` in the negated polar dual of the orthant of
``sigma``; it is the defining function of the transformed term.

Integrals are computed by composite Gauss-Legendre quadrature on a straight
contour. In one dimension the contour's tails may be turned onto vertical
rays when that makes the integrand decay faster (see :class:`Contour`).
"""
from __future__ import annotations

import itertools
import logging
import math
import threading
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .cones import ConvexCone, HalfSpace, Weight, polar_dual
from .errors import (
    ContourBlocked,
    ConvergenceError,
    DimensionMismatch,
    HyperlocError,
    InternalError,
    NotIntegrable,
    NotSlowlyIncreasing,
    PoleError,
    Unsupported,
)
from .expr import (
    Add,
    Const,
    Exp,
    Expr,
    GrowthClass,
    GrowthKind,
    Log,
    Logistic,
    Mul,
    Neg,
    Tanh,
    Var,
    evaluate,
    singular_loci,
)
from .hyperfunction import BoundaryValueTerm, Hyperfunction, witness_vector

LOGGER = logging.getLogger(__name__)

DEFAULT_R0 = 16.0
DEFAULT_ORDER = 64
DEFAULT_DELTA = 0.1
DEFAULT_TOL = 1e-10
POLE_CLEARANCE = 1e-3
MAX_TAIL = 2.0**14
_FIT_TS = np.array([1.0, 2.0, 4.0, 8.0, 16.0, 32.0])
_MIN_RATE = 1e-3

__all__ = [
    "PartitionOfUnity",
    "orthant_partition",
    "mixed_partition_2d",
    "Contour",
    "QuadResult",
    "contour_integral_1d",
    "contour_integral_nd",
    "residue_sum_1d",
    "fourier_transform",
    "FourierResult",
    "FourierTermFunction",
    "fit_decay_rate",
]


# ---------------------------------------------------------------------------
# partitions of unity


def orthant(signs: Sequence[int]) -> ConvexCone:
    n = len(signs)
    hs = []
    for i, s in enumerate(signs):
        coeffs = [0] * n
        coeffs[i] = s
        hs.append(HalfSpace(Weight.of(*coeffs)))
    return ConvexCone(tuple(hs), n)


@dataclass(frozen=True)
class PartitionOfUnity:
    """Pieces ``(label, chi, cone)``; ``chi`` is small away from ``cone``."""

    pieces: tuple[tuple[tuple[int, ...], Expr, ConvexCone], ...]
    dim: int

    def __post_init__(self):
        for label, _, cone in self.pieces:
            if cone.dim != self.dim or len(label) != self.dim:
                raise DimensionMismatch("partition piece of the wrong dimension")

    @property
    def labels(self):
        return [p[0] for p in self.pieces]

    def piece(self, label) -> Expr:
        for lab, chi, _ in self.pieces:
            if lab == tuple(label):
                return chi
        raise KeyError(label)

    def total(self, zs):
        """``sum_sigma chi_sigma`` at ``zs`` (should be 1)."""
        return sum(evaluate(chi, zs) for _, chi, _ in self.pieces)

    def covers(self, y) -> bool:
        """Is the real vector ``y`` in the closure of some piece's cone?"""
        return any(cone.contains_closure(y) for _, _, cone in self.pieces)


def orthant_partition(n: int) -> PartitionOfUnity:
    """``chi_sigma(z) = prod_i 1/(1 + exp(-sigma_i z_i))`` over sign vectors."""
    if n < 1:
        raise ValueError("dimension must be at least 1")
    pieces = []
    for signs in itertools.product((1, -1), repeat=n):
        factors = tuple(Logistic(Mul((Const(-s), Var(i)))) for i, s in enumerate(signs))
        chi = factors[0] if n == 1 else Mul(factors)
        pieces.append((signs, chi, orthant(signs)))
    return PartitionOfUnity(tuple(pieces), n)


def mixed_partition_2d() -> PartitionOfUnity:
    """``1/(1+e^{+-z1}) * 1/(1+e^{+-pi z2})``, four pieces.

    The factor ``1/(1+e^{s u})`` is close to 1 where ``s Re u < 0``, so the
    piece with exponent signs ``(s1, s2)`` carries the label ``(-s1, -s2)``.
    """
    pieces = []
    for s1, s2 in itertools.product((1, -1), repeat=2):
        chi = Mul((Logistic(Mul((Const(s1), Var(0)))), Logistic(Mul((Const(s2 * math.pi), Var(1))))))
        label = (-s1, -s2)
        pieces.append((label, chi, orthant(label)))
    return PartitionOfUnity(tuple(pieces), 2)


def fit_decay_rate(fn: Callable, p: complex | Sequence[complex], d, ts=_FIT_TS) -> tuple[float, float]:
    """Fit ``|fn(p + t d)| <= C exp(-r t)`` on the sample times ``ts``.

    ``p`` and ``d`` are scalars (1D) or sequences (points in C^n). Returns
    ``(r, C)`` with ``C`` the smallest envelope constant for the fitted rate;
    ``r = inf`` when the function vanishes identically on the samples.
    """
    ts = np.asarray(ts, dtype=float)
    if np.ndim(p) == 0:
        pts = [complex(p) + ts * complex(d)]
    else:
        pts = [complex(pi) + ts * complex(di) for pi, di in zip(p, d)]
    vals = np.abs(np.asarray(fn(pts) if np.ndim(p) else fn(pts[0]), dtype=complex))
    if not np.all(np.isfinite(vals)):
        return -math.inf, math.inf
    keep = vals > 0
    if not np.any(keep):
        return math.inf, 0.0
    if np.count_nonzero(keep) < 2:
        return 0.0, float(np.max(vals))
    slope, _ = np.polyfit(ts[keep], np.log(vals[keep]), 1)
    r = -float(slope)
    C = float(np.max(vals[keep] * np.exp(r * ts[keep])))
    return r, C


# ---------------------------------------------------------------------------
# quadrature


@lru_cache(maxsize=8)
def _gauss(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


@dataclass(frozen=True)
class Contour:
    """Straight contour ``Im z = y0`` with Gauss-Legendre panels.

    ``tails="horizontal"`` keeps the whole contour on ``Im z = y0`` and
    extends it until the fitted tail bound drops below the tolerance.
    ``tails="auto"`` (1D only) may instead leave ``+-R0 + i y0`` along a
    vertical ray, whichever of the admissible directions decays fastest.
    This is exact by Cauchy's theorem when the integrand has no singular
    points with ``|Re z| >= R0``, which holds for the integrands of this
    package (their poles sit on the imaginary axis).
    """

    y0: tuple[float, ...]
    R0: float = DEFAULT_R0
    order: int = DEFAULT_ORDER
    panel: float = 1.0
    tails: str = "auto"
    cone: ConvexCone | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "y0", tuple(float(v) for v in np.atleast_1d(self.y0)))
        if self.tails not in ("auto", "horizontal"):
            raise ValueError("tails must be 'auto' or 'horizontal'")
        if self.order < 4 or self.order % 2:
            raise ValueError("quadrature order must be an even number >= 4")
        if self.cone is not None and not self.cone.contains(self.y0):
            raise ValueError(f"contour offset {self.y0} is not inside {self.cone}")

    @classmethod
    def for_cone(cls, cone: ConvexCone, delta: float = DEFAULT_DELTA, **kw) -> "Contour":
        """Offset ``delta * v`` with ``v`` the unit-sum interior witness of ``cone``."""
        v = witness_vector(cone)
        return cls(tuple(delta * v), cone=cone, **kw)

    @property
    def dim(self) -> int:
        return len(self.y0)


@dataclass(frozen=True)
class QuadResult:
    value: complex
    error: float
    R: float = 0.0
    tails: tuple = ()


def _as_function(e, nvars: int = 1):
    if isinstance(e, Expr):
        return lambda *zs: evaluate(e, list(zs))
    return e


def _panels(f, start: complex, direction: complex, length: float, order: int, width: float = 1.0):
    """Integrate ``f`` along ``start + t direction`` for ``0 <= t <= length``.

    Returns ``(value, error)`` with the error from the order/2 rule.
    """
    npan = max(1, int(math.ceil(length / width - 1e-12)))
    h = length / npan
    x, w = _gauss(order)
    xh, wh = _gauss(order // 2)
    lefts = np.arange(npan) * h
    t = lefts[:, None] + (x[None, :] + 1) * h / 2
    th = lefts[:, None] + (xh[None, :] + 1) * h / 2
    fz = np.asarray(f(start + direction * t), dtype=complex)
    fh = np.asarray(f(start + direction * th), dtype=complex)
    per = (fz * w[None, :]).sum(axis=1) * h / 2 * direction
    perh = (fh * wh[None, :]).sum(axis=1) * h / 2 * direction
    if not (np.all(np.isfinite(per)) and np.all(np.isfinite(perh))):
        raise NotIntegrable("integrand overflows on the contour")
    return complex(per.sum()), float(np.abs(per - perh).sum())


def _pole_guard(e, points: np.ndarray):
    """Raise ContourBlocked if a singular point lies within POLE_CLEARANCE of ``points``."""
    if not isinstance(e, Expr):
        return
    for den in singular_loci(e):
        h = 1e-6
        with np.errstate(all="ignore"):
            try:
                d0 = np.asarray(evaluate(den, [points]), dtype=complex)
            except HyperlocError as exc:
                raise ContourBlocked(f"singular locus of {den!r} meets the contour") from exc
            dp = np.asarray(evaluate(den, [points + h]), dtype=complex)
            dm = np.asarray(evaluate(den, [points - h]), dtype=complex)
            deriv = (dp - dm) / (2 * h)
            dist = np.abs(d0) / np.abs(deriv)
        dist = np.where(np.isfinite(dist), dist, np.inf)
        j = int(np.argmin(dist))
        if dist[j] < POLE_CLEARANCE:
            raise ContourBlocked(
                f"zero of {den!r} within {dist[j]:.2e} of the contour near z = {points[j]:.6g}"
            )


def _ray(f, p: complex, d: complex, r: float, C: float, tol: float, order: int, width: float):
    """Integral of ``f`` along ``p + t d``, ``t >= 0``, with a fitted tail bound."""
    T = 16.0
    while True:
        bound = C * math.exp(-r * T) / r if math.isfinite(r) else 0.0
        if bound < tol / 4 or T >= MAX_TAIL:
            break
        T *= 2
    if bound >= tol / 4:
        raise NotIntegrable(f"tail decays too slowly (rate {r:.3g}) along direction {d}")
    val, err = _panels(f, p, d, T, order, width)
    return val, err + bound


def _choose_direction(f, p: complex, candidates) -> tuple[complex, float, float]:
    best = None
    for d in candidates:
        try:
            with np.errstate(all="ignore"):
                r, C = fit_decay_rate(f, p, d)
        except (PoleError, InternalError):
            continue
        if r > _MIN_RATE and math.isfinite(C) and (best is None or r > best[1]):
            best = (d, r, C)
    if best is None:
        raise NotIntegrable(f"integrand does not decay exponentially beyond {p}")
    return best


def contour_integral_1d(e, c: Contour, tol: float = DEFAULT_TOL) -> QuadResult:
    """``integral f(z) dz`` along ``Im z = y0`` from ``-inf`` to ``+inf``.

    ``e`` is an expression in ``z1`` or a vectorized callable.

    Raises
    ------
    ContourBlocked
        A singular point of ``e`` lies within 1e-3 of the finite segment.
    NotIntegrable
        No admissible tail direction decays exponentially.
    """
    if c.dim != 1:
        raise DimensionMismatch("contour_integral_1d needs a one-dimensional contour")
    f = _as_function(e)
    y0 = c.y0[0]
    R = c.R0
    start = complex(-R, y0)
    guard = start + np.linspace(0.0, 2 * R, int(16 * 2 * R) + 1)
    _pole_guard(e, guard)
    try:
        val, err = _panels(f, start, 1.0, 2 * R, c.order, c.panel)
    except PoleError as exc:
        raise ContourBlocked(str(exc)) from exc
    tails = []
    for side in (-1, 1):
        p = complex(side * R, y0)
        cands = [complex(side)] if c.tails == "horizontal" else [complex(side), 1j, -1j]
        d, r, C = _choose_direction(f, p, cands)
        try:
            tv, te = _ray(f, p, d, r, C, tol, c.order, c.panel)
        except PoleError as exc:
            raise ContourBlocked(f"pole on the tail ray: {exc}") from exc
        # the left tail runs from infinity back to p
        val += tv if side > 0 else -tv
        err += te
        tails.append((side, d, r))
    return QuadResult(val, err, R, tuple(tails))


def contour_integral_nd(e, c: Contour, tol: float = DEFAULT_TOL, order_of_integration=None) -> QuadResult:
    """Iterated integral over ``Im z = y0`` in ``C^n`` on the box ``|Re z_i| <= R``.

    The inner integrals follow ``order_of_integration`` (default z1, z2, ...).
    Tails are bounded by the largest integrand value on the faces of the box
    times the fitted decay length along each axis; the estimate is returned
    in ``error`` and is not certified.
    """
    n = c.dim
    f = _as_function(e)
    if n == 1:
        return contour_integral_1d(e, c, tol)
    axes_order = list(order_of_integration or range(n))
    R = c.R0
    x, w = _gauss(c.order)
    xh, wh = _gauss(c.order // 2)
    npan = int(math.ceil(2 * R / c.panel))
    h = 2 * R / npan

    def nodes(xx):
        lefts = -R + np.arange(npan) * h
        return (lefts[:, None] + (xx[None, :] + 1) * h / 2).ravel()

    def weights(ww):
        return np.tile(ww * h / 2, npan)

    def tensor(xx, ww):
        pts = [nodes(xx) + 1j * yj for yj in c.y0]
        wts = weights(ww)
        vals = np.asarray(f(*np.meshgrid(*pts, indexing="ij")), dtype=complex)
        # contract the inner variables first, as in the iterated integral
        remaining = list(range(n))
        for ax in axes_order:
            pos = remaining.index(ax)
            vals = np.tensordot(vals, wts, axes=([pos], [0]))
            remaining.pop(pos)
        return complex(vals)

    try:
        with np.errstate(all="ignore"):
            val = tensor(x, w)
            valh = tensor(xh, wh)
    except PoleError as exc:
        raise ContourBlocked(str(exc)) from exc
    if not (np.isfinite(val) and np.isfinite(valh)):
        raise NotIntegrable("integrand overflows on the contour box")
    err = abs(val - valh)
    # tail estimate from the decay along each coordinate axis
    tail = 0.0
    for i in range(n):
        for side in (-1, 1):
            p = [complex(0, yj) for yj in c.y0]
            p[i] = complex(side * R, c.y0[i])
            d = [0j] * n
            d[i] = complex(side)
            r, C = fit_decay_rate(lambda zs: f(*zs), p, d)
            if not (r > 0):
                raise NotIntegrable(f"integrand does not decay along axis {i + 1}")
            tail += (2 * R) ** (n - 1) * C / r if math.isfinite(r) else 0.0
    return QuadResult(val, err + tail, R, ())


# ---------------------------------------------------------------------------
# residue oracle


def residue_sum_1d(a: float, sign: int = 1) -> Expr:
    """Closed form of ``integral exp(-i(zeta - a) z) / (z (1 + exp(+-z))) dz``.

    The contour is ``Im z = -delta`` with ``0 < delta < pi``. Summing the
    residues at the poles ``z = -i pi (2k+1)`` of the logistic factor gives a
    geometric series whose sum is ``Log tanh(pi (zeta - a) / 2)`` for
    ``sign=+1`` (valid for ``0 < Im zeta < 1``). The ``sign=-1`` integrand
    follows from ``z -> -z`` and the residue ``1/2`` at ``z = 0``:
    ``pi i - Log(-tanh(pi (zeta - a) / 2))`` for ``-1 < Im zeta < 0``.
    The result is an expression in ``z1`` standing for ``zeta``.
    """
    if sign not in (1, -1):
        raise Unsupported(f"no closed form for the sign {sign!r}")
    if not math.isfinite(a):
        raise Unsupported("shift must be a finite real number")
    th = Tanh(Mul((Const(math.pi / 2), Add((Var(0), Const(-a))))))
    if sign == 1:
        return Log(th)
    return Add((Const(math.pi * 1j), Neg(Log(Neg(th)))))


# ---------------------------------------------------------------------------
# transforms


def _dual_piece_cone(cone: ConvexCone) -> ConvexCone:
    """Negated polar dual ``-sigma°`` of a piece's cone."""
    d = polar_dual(cone)
    return ConvexCone(tuple(HalfSpace(-h.weight) for h in d.halfspaces), d.dim)


def _kernel(zeta: Sequence[complex], n: int) -> Expr:
    lin = Add(tuple(Mul((Const(-1j * complex(zj)), Var(j))) for j, zj in enumerate(zeta)))
    return Exp(lin)


class FourierTermFunction:
    """Numeric defining function ``zeta -> integral exp(-i zeta.z) F chi dz``.

    Values are computed on demand and memoized per point; the cache is
    guarded by a lock so distinct points may be evaluated concurrently.
    """

    def __init__(self, F: Expr, chi: Expr, contour: Contour, tol: float):
        self.F = F
        self.chi = chi
        self.contour = contour
        self.tol = tol
        self.dim = contour.dim
        self._cache: dict[tuple, QuadResult] = {}
        self._lock = threading.Lock()

    def integrand(self, zeta) -> Expr:
        return Mul((_kernel(zeta, self.dim), self.F, self.chi))

    def quad(self, zeta) -> QuadResult:
        key = tuple(complex(v) for v in zeta)
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        e = self.integrand(key)
        if self.dim == 1:
            res = contour_integral_1d(e, self.contour, self.tol)
        else:
            res = contour_integral_nd(e, self.contour, self.tol)
        if res.error > self.tol:
            raise ConvergenceError(
                f"quadrature error {res.error:.3g} above tolerance {self.tol:g} at zeta={key}", estimate=res.error
            )
        with self._lock:
            self._cache[key] = res
        return res

    def _points(self, zs):
        arrs = np.broadcast_arrays(*[np.asarray(v, dtype=complex) for v in zs])
        return arrs[0].shape, [a.ravel() for a in arrs]

    def evaluate(self, zs):
        shape, flat = self._points(zs)
        out = np.array([self.quad(p).value for p in zip(*flat)], dtype=complex).reshape(shape)
        return out if out.ndim else complex(out)

    def error(self, zs):
        shape, flat = self._points(zs)
        out = np.array([self.quad(p).error for p in zip(*flat)], dtype=float).reshape(shape)
        return out if out.ndim else float(out)

    def __repr__(self):
        return f"FourierTermFunction(F={self.F!r}, chi={self.chi!r}, y0={self.contour.y0})"


@dataclass(frozen=True)
class Provenance:
    source_term: int
    piece: tuple[int, ...]
    cone: ConvexCone


@dataclass(frozen=True)
class FourierResult:
    hyperfunction: Hyperfunction
    provenance: tuple[Provenance, ...]

    def functions(self) -> list[FourierTermFunction]:
        return [t.expr for t in self.hyperfunction.terms]


def fourier_transform(
    f: Hyperfunction,
    p: PartitionOfUnity | None = None,
    tol: float = 1e-8,
    delta: float = DEFAULT_DELTA,
    R0: float = DEFAULT_R0,
    tails: str = "auto",
) -> FourierResult:
    """Transform ``f`` term by term and piece by piece.

    Raises
    ------
    NotSlowlyIncreasing
        Some term is not classified slowly increasing on its cone.
    """
    if p is None:
        p = orthant_partition(f.dim)
    if p.dim != f.dim:
        raise DimensionMismatch(f"partition of dim {p.dim} for hyperfunction of dim {f.dim}")
    terms, prov = [], []
    for j, t in enumerate(f.terms):
        if t.growth is None or t.growth.kind is not GrowthKind.SLOWLY_INCREASING:
            raise NotSlowlyIncreasing(f"term {j} is {t.growth.kind.name if t.growth else 'unclassified'}")
        if not isinstance(t.expr, Expr):
            raise NotSlowlyIncreasing(f"term {j} has no symbolic defining function")
        contour = Contour.for_cone(t.cone, delta, R0=R0, tails=tails if f.dim == 1 else "horizontal")
        for label, chi, cone in p.pieces:
            out_cone = _dual_piece_cone(cone)
            fn = FourierTermFunction(t.expr, chi, contour, tol)
            terms.append(BoundaryValueTerm(fn, out_cone, growth=GrowthClass.unclassified()))
            prov.append(Provenance(j, label, out_cone))
    LOGGER.debug("fourier transform: %d source terms -> %d pieces", len(f.terms), len(terms))
    return FourierResult(Hyperfunction(tuple(terms), f.dim), tuple(prov))
