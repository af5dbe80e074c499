"""Closed expression language for holomorphic defining functions.

Trees are built from constants, coordinates ``z1..zn``, rational linear
forms, ``+ - * /``, integer powers, ``exp``, ``log``, ``sin``, ``cos``,
``tanh``, the logistic factor ``1/(1+exp(u))`` and truncated products over
an index ``k``. Evaluation is vectorised over numpy arrays and refuses to
return values near the polar locus.
"""
from __future__ import annotations

import enum
import json
import math
import numbers
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .cones import ConvexCone, HalfSpace, Weight, as_fraction
from .errors import InternalError, PoleError

__all__ = [
    "Expr",
    "Const",
    "Var",
    "Index",
    "Linear",
    "Add",
    "Mul",
    "Neg",
    "Div",
    "Pow",
    "Exp",
    "Log",
    "Sin",
    "Cos",
    "Tanh",
    "Logistic",
    "Sinc",
    "singular_loci",
    "TruncatedProduct",
    "z",
    "k",
    "I",
    "as_expr",
    "evaluate",
    "truncated_euler_product",
    "GrowthKind",
    "GrowthClass",
    "classify_growth",
    "expr_to_json",
    "expr_from_json",
    "dumps_expr",
    "loads_expr",
    "POLE_TOL",
    "DEFAULT_EULER_K",
]

POLE_TOL = 1e-12
DEFAULT_EULER_K = 10_000
HP_DIGITS = 30
_CHUNK = 512


class Expr:
    """Base node. Subclasses are frozen dataclasses."""

    def __add__(self, other):
        return Add((self, as_expr(other)))

    def __radd__(self, other):
        return Add((as_expr(other), self))

    def __sub__(self, other):
        return Add((self, Neg(as_expr(other))))

    def __rsub__(self, other):
        return Add((as_expr(other), Neg(self)))

    def __mul__(self, other):
        return Mul((self, as_expr(other)))

    def __rmul__(self, other):
        return Mul((as_expr(other), self))

    def __truediv__(self, other):
        return Div(self, as_expr(other))

    def __rtruediv__(self, other):
        return Div(as_expr(other), self)

    def __neg__(self):
        return Neg(self)

    def __pow__(self, n):
        if not isinstance(n, numbers.Integral):
            raise TypeError("only integer powers are part of the grammar")
        return Pow(self, int(n))

    def __call__(self, *zs, hp: bool = False):
        return evaluate(self, zs, hp=hp)

    def children(self) -> tuple["Expr", ...]:
        return ()

    @property
    def nvars(self) -> int:
        """Number of coordinates the expression refers to (max index + 1)."""
        return max((c.nvars for c in self.children()), default=0)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (numbers.Number, np.number)):
        return Const(complex(value))
    raise TypeError(f"cannot use {value!r} in an expression")


@dataclass(frozen=True, eq=True)
class Const(Expr):
    value: complex

    def __post_init__(self):
        object.__setattr__(self, "value", complex(self.value))


@dataclass(frozen=True)
class Var(Expr):
    index: int  # zero-based; printed as z{index+1}

    @property
    def nvars(self) -> int:
        return self.index + 1


@dataclass(frozen=True)
class Index(Expr):
    """The running index of the innermost :class:`TruncatedProduct`."""


@dataclass(frozen=True)
class Linear(Expr):
    """The linear form ``weight(z)``."""

    weight: Weight

    @property
    def nvars(self) -> int:
        return self.weight.dim


@dataclass(frozen=True)
class Add(Expr):
    terms: tuple[Expr, ...]

    def children(self):
        return self.terms


@dataclass(frozen=True)
class Mul(Expr):
    factors: tuple[Expr, ...]

    def children(self):
        return self.factors


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class Div(Expr):
    num: Expr
    den: Expr

    def children(self):
        return (self.num, self.den)


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int

    def children(self):
        return (self.base,)


@dataclass(frozen=True)
class _Unary(Expr):
    arg: Expr

    def children(self):
        return (self.arg,)


class Exp(_Unary):
    pass


class Log(_Unary):
    """Principal branch; the argument's zero is reported as a pole."""


class Sin(_Unary):
    pass


class Cos(_Unary):
    pass


class Tanh(_Unary):
    pass


class Logistic(_Unary):
    """``1 / (1 + exp(arg))``, evaluated without overflow."""


class Sinc(_Unary):
    """``sin(arg) / arg`` with its removable singularity at 0 filled in (value 1)."""


@dataclass(frozen=True)
class TruncatedProduct(Expr):
    """``prod_{k=start}^{start+K-1} factor(k)`` multiplied in index order."""

    factor: Expr
    K: int
    start: int = 1

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("truncation order K must be >= 1")

    def children(self):
        return (self.factor,)


for _cls in (Exp, Log, Sin, Cos, Tanh, Logistic, Sinc):
    dataclass(frozen=True)(_cls)

I = Const(1j)
k = Index()


def z(i: int) -> Var:
    """Coordinate ``z_i`` (one-based, as in the formulas)."""
    return Var(i - 1)


# ---------------------------------------------------------------------------
# evaluation


class _Env:
    __slots__ = ("zs", "k", "scale", "hp")

    def __init__(self, zs, k, scale, hp):
        self.zs = zs
        self.k = k
        self.scale = scale
        self.hp = hp


def _too_small(den, env) -> bool:
    if env.hp:
        return abs(den) <= POLE_TOL * env.scale
    return bool(np.any(np.abs(den) <= POLE_TOL * env.scale))


def _ev(e: Expr, env: _Env):
    hp = env.hp
    if isinstance(e, Const):
        return mpmath.mpc(e.value) if hp else e.value
    if isinstance(e, Var):
        return env.zs[e.index]
    if isinstance(e, Index):
        if env.k is None:
            raise InternalError("product index used outside a truncated product")
        return env.k
    if isinstance(e, Linear):
        total = 0
        for c, zi in zip(e.weight.coefficients, env.zs):
            if c:
                cc = mpmath.mpf(c.numerator) / c.denominator if hp else float(c)
                total = total + cc * zi
        return total
    if isinstance(e, Add):
        total = _ev(e.terms[0], env)
        for t in e.terms[1:]:
            total = total + _ev(t, env)
        return total
    if isinstance(e, Mul):
        prod = _ev(e.factors[0], env)
        for f in e.factors[1:]:
            prod = prod * _ev(f, env)
        return prod
    if isinstance(e, Neg):
        return -_ev(e.arg, env)
    if isinstance(e, Div):
        den = _ev(e.den, env)
        if _too_small(den, env):
            raise PoleError(f"denominator {e.den!r} vanishes", denominator=e.den, value=np.min(np.abs(den)))
        num = _ev(e.num, env)
        if env.hp:
            return num / den
        # an overflowed denominator (inf in either part) means the quotient underflows to zero
        huge = np.isinf(np.real(den)) | np.isinf(np.imag(den))
        if np.any(huge):
            num = np.asarray(num, dtype=complex)
            out = np.where(huge & np.isfinite(num), 0j, num / np.where(huge, 1.0, den))
            return out if out.ndim else complex(out)
        return num / den
    if isinstance(e, Pow):
        base = _ev(e.base, env)
        if e.exponent < 0:
            if _too_small(base, env):
                raise PoleError(f"base {e.base!r} of negative power vanishes", denominator=e.base)
            return 1 / base ** (-e.exponent)
        return base ** e.exponent
    if isinstance(e, Exp):
        return mpmath.exp(_ev(e.arg, env)) if hp else np.exp(_ev(e.arg, env))
    if isinstance(e, Log):
        a = _ev(e.arg, env)
        if _too_small(a, env):
            raise PoleError(f"logarithm of vanishing {e.arg!r}", denominator=e.arg)
        return mpmath.log(a) if hp else np.log(a + 0j)
    if isinstance(e, Sin):
        return mpmath.sin(_ev(e.arg, env)) if hp else np.sin(_ev(e.arg, env))
    if isinstance(e, Cos):
        return mpmath.cos(_ev(e.arg, env)) if hp else np.cos(_ev(e.arg, env))
    if isinstance(e, Tanh):
        return mpmath.tanh(_ev(e.arg, env)) if hp else np.tanh(_ev(e.arg, env))
    if isinstance(e, Logistic):
        return _logistic(_ev(e.arg, env), env, e)
    if isinstance(e, Sinc):
        return _sinc(_ev(e.arg, env), env)
    if isinstance(e, TruncatedProduct):
        return _tprod(e, env)
    raise InternalError(f"unknown node {type(e).__name__}")


def _logistic(u, env, node):
    if env.hp:
        if mpmath.re(u) > 0:
            w = mpmath.exp(-u)
            den, num = 1 + w, w
        else:
            den, num = 1 + mpmath.exp(u), 1
        if abs(den) <= POLE_TOL * env.scale:
            raise PoleError("logistic pole", denominator=node, value=abs(den))
        return num / den
    u = np.asarray(u, dtype=complex)
    pos = u.real > 0
    w = np.exp(np.where(pos, -u, u))
    den = 1 + w
    if np.any(np.abs(den) <= POLE_TOL * env.scale):
        raise PoleError("logistic pole 1 + exp(u) = 0", denominator=node, value=float(np.min(np.abs(den))))
    out = np.where(pos, w, 1.0) / den
    return out if out.ndim else complex(out)


def _sinc(u, env):
    if env.hp:
        return mpmath.sinc(u)
    u = np.asarray(u, dtype=complex)
    small = np.abs(u) < 1e-4
    safe = np.where(small, 1.0, u)
    u2 = u * u
    out = np.where(small, 1 - u2 / 6 + u2 * u2 / 120, np.sin(safe) / safe)
    return out if out.ndim else complex(out)


def _tprod(e: TruncatedProduct, env: _Env):
    stop = e.start + e.K
    if env.hp:
        acc = mpmath.mpc(1)
        for kk in range(e.start, stop):
            acc *= _ev(e.factor, _Env(env.zs, mpmath.mpf(kk), env.scale, True))
        return acc
    shape = np.broadcast(*env.zs).shape if env.zs else ()
    acc = np.ones(shape, dtype=complex)
    zs = tuple(np.asarray(zi)[None, ...] for zi in env.zs)
    scale = np.asarray(env.scale)[None, ...]
    for lo in range(e.start, stop, _CHUNK):
        hi = min(lo + _CHUNK, stop)
        ks = np.arange(lo, hi, dtype=float).reshape((-1,) + (1,) * len(shape))
        vals = _ev(e.factor, _Env(zs, ks, scale, False))
        vals = np.broadcast_to(vals, (hi - lo,) + shape)
        for row in vals:
            acc = acc * row
    return acc if acc.ndim else complex(acc)


def evaluate(e: Expr, zs: Sequence, hp: bool = False):
    """Evaluate ``e`` at the complex point ``zs``.

    Components may be numpy arrays (broadcast together) for grid evaluation.
    With ``hp=True`` the evaluation runs in mpmath at ~30 significant digits
    and returns an ``mpc``.

    Raises
    ------
    PoleError
        A denominator, log argument or logistic denominator is within
        ``1e-12 * max(1, |z|)`` of zero.
    InternalError
        The result contains NaN.
    """
    if hp:
        with mpmath.workdps(HP_DIGITS):
            comps = [mpmath.mpc(complex(c)) if not isinstance(c, mpmath.mpc) else c for c in zs]
            scale = max([mpmath.mpf(1)] + [abs(c) for c in comps])
            return _ev(e, _Env(comps, None, scale, True))
    comps = [np.asarray(c, dtype=complex) for c in zs]
    if comps:
        scale = np.maximum(1.0, np.max(np.abs(np.broadcast_arrays(*comps)), axis=0))
    else:
        scale = 1.0
    if any(np.any(~np.isfinite(c)) for c in comps):
        raise InternalError("non-finite evaluation point")
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        val = _ev(e, _Env(comps, None, scale, False))
    val = np.asarray(val, dtype=complex)
    if np.any(np.isnan(val)):
        raise InternalError("NaN produced during evaluation")
    if comps and val.shape != scale.shape:
        val = np.broadcast_to(val, np.shape(scale)).copy()
    return val if val.ndim else complex(val)


def truncated_euler_product(n: int, K: int = DEFAULT_EULER_K) -> TruncatedProduct:
    """``prod_{k=1}^K (1 - (2(n z2 + z1)/(k z2))^2)`` as an expression."""
    if K < 1:
        raise ValueError("K must be >= 1")
    z1, z2 = z(1), z(2)
    ratio = (2 * (n * z2 + z1)) / (k * z2)
    return TruncatedProduct(Const(1) - Pow(ratio, 2), K)


# ---------------------------------------------------------------------------
# growth classification


class GrowthKind(enum.Enum):
    SLOWLY_INCREASING = "slowly_increasing"
    EXPONENTIALLY_DECREASING = "exponentially_decreasing"
    UNCLASSIFIED = "unclassified"


@dataclass(frozen=True)
class GrowthClass:
    """Growth tag of a defining function.

    For ``EXPONENTIALLY_DECREASING`` the function decays exponentially in
    real directions lying in the union of ``cones``.
    """

    kind: GrowthKind
    cones: tuple[ConvexCone, ...] = ()

    @classmethod
    def slowly_increasing(cls):
        return cls(GrowthKind.SLOWLY_INCREASING)

    @classmethod
    def unclassified(cls):
        return cls(GrowthKind.UNCLASSIFIED)

    @classmethod
    def exponentially_decreasing(cls, cones):
        return cls(GrowthKind.EXPONENTIALLY_DECREASING, tuple(cones))

    def to_json(self):
        from .cones import cone_to_json

        data = {"kind": self.kind.value}
        if self.cones:
            data["cones"] = [cone_to_json(c) for c in self.cones]
            data["dim"] = self.cones[0].dim
        return data

    @classmethod
    def from_json(cls, data):
        from .cones import cone_from_json

        kind = GrowthKind(data["kind"])
        cones = tuple(cone_from_json(c, dim=data.get("dim")) for c in data.get("cones", ()))
        return cls(kind, cones)


def _linear_form(e: Expr, n: int):
    """Return ``(coeffs, const)`` if ``e`` is affine in z, else None."""
    if isinstance(e, Const):
        return [0j] * n, e.value
    if isinstance(e, Var):
        c = [0j] * n
        c[e.index] = 1
        return c, 0j
    if isinstance(e, Linear):
        return [complex(float(v)) for v in e.weight.coefficients] + [0j] * (n - e.weight.dim), 0j
    if isinstance(e, Neg):
        r = _linear_form(e.arg, n)
        return None if r is None else ([-v for v in r[0]], -r[1])
    if isinstance(e, Add):
        acc, const = [0j] * n, 0j
        for t in e.terms:
            r = _linear_form(t, n)
            if r is None:
                return None
            acc = [a + b for a, b in zip(acc, r[0])]
            const += r[1]
        return acc, const
    if isinstance(e, Mul):
        scalar, lin = 1 + 0j, None
        for f in e.factors:
            r = _linear_form(f, n)
            if r is None:
                return None
            if all(v == 0 for v in r[0]):
                scalar *= r[1]
            elif lin is None:
                lin = r
            else:
                return None
        if lin is None:
            return [0j] * n, scalar
        return [scalar * v for v in lin[0]], scalar * lin[1]
    if isinstance(e, Div) and isinstance(e.den, Const) and e.den.value != 0:
        r = _linear_form(e.num, n)
        return None if r is None else ([v / e.den.value for v in r[0]], r[1] / e.den.value)
    return None


def _real_weight(coeffs) -> Weight | None:
    if any(abs(c.imag) > 0 for c in coeffs) or all(c == 0 for c in coeffs):
        return None
    return Weight(tuple(as_fraction(c.real) for c in coeffs))


def _intersect_unions(a, b):
    out = []
    for c1 in a:
        for c2 in b:
            c = c1.intersect(c2)
            if c.is_open_nonempty():
                out.append(c)
    return out


def _sign_definite(w: Weight, cone: ConvexCone) -> bool:
    if not cone.is_open_nonempty():
        return False
    return cone.is_redundant(w) or cone.is_redundant(-w)


def _safe_denominator(e: Expr, cone: ConvexCone, n: int) -> bool:
    """Denominator whose reciprocal is bounded on wedges over compacts of cone."""
    if isinstance(e, Const):
        return e.value != 0
    if isinstance(e, Mul):
        return all(_safe_denominator(f, cone, n) for f in e.factors)
    if isinstance(e, Pow):
        return e.exponent >= 0 and _safe_denominator(e.base, cone, n)
    if isinstance(e, Neg):
        return _safe_denominator(e.arg, cone, n)
    lin = _linear_form(e, n)
    if lin is None:
        return False
    coeffs, const = lin
    if abs(const.imag) > 0:
        return False
    w = _real_weight(coeffs)
    return w is not None and _sign_definite(w, cone)


def _info(e: Expr, cone: ConvexCone, n: int):
    """(slowly_increasing, decreasing_union) or None when outside the rules."""
    if isinstance(e, (Const, Var, Linear, Index)):
        return True, []
    if isinstance(e, (Add,)):
        infos = [_info(t, cone, n) for t in e.terms]
        if any(i is None for i in infos):
            return None
        dec = infos[0][1]
        for i in infos[1:]:
            dec = _intersect_unions(dec, i[1])
        return all(i[0] for i in infos), dec
    if isinstance(e, Neg):
        return _info(e.arg, cone, n)
    if isinstance(e, Mul):
        infos = [_info(f, cone, n) for f in e.factors]
        if any(i is None for i in infos):
            return None
        si = all(i[0] for i in infos)
        dec = []
        for j, (_, d) in enumerate(infos):
            if d and all(infos[m][0] for m in range(len(infos)) if m != j):
                dec.extend(d)
        if not dec:
            with_dec = [i[1] for i in infos if i[1]]
            if len(with_dec) > 1:
                acc = with_dec[0]
                for d in with_dec[1:]:
                    acc = _intersect_unions(acc, d)
                dec = acc
        return si, dec
    if isinstance(e, Pow):
        if e.exponent < 0:
            return _info(Div(Const(1), Pow(e.base, -e.exponent)), cone, n)
        if e.exponent == 0:
            return True, []
        return _info(e.base, cone, n)
    if isinstance(e, Div):
        if not _safe_denominator(e.den, cone, n):
            return None
        return _info(e.num, cone, n)
    if isinstance(e, Exp):
        lin = _linear_form(e.arg, n)
        if lin is None:
            return None
        if all(abs(c.real) == 0 for c in lin[0]):
            return True, []
        return None
    if isinstance(e, (Sin, Cos)):
        lin = _linear_form(e.arg, n)
        if lin is None:
            return None
        if all(abs(c.imag) == 0 for c in lin[0]):
            return True, []
        return None
    if isinstance(e, Logistic):
        lin = _linear_form(e.arg, n)
        if lin is None:
            return None
        w = _real_weight(lin[0])
        if w is None:
            return None
        return True, [ConvexCone((HalfSpace(w),), n)]
    return None


def classify_growth(e: Expr, cone: ConvexCone) -> GrowthClass:
    """Rule-based growth tag of ``e`` on wedges ``R^n + i cone``.

    Never reports a class it cannot justify structurally; anything outside
    the rules is ``UNCLASSIFIED``.
    """
    n = max(cone.dim, e.nvars)
    info = _info(e, cone, n)
    if info is None:
        return GrowthClass.unclassified()
    si, dec = info
    if dec:
        return GrowthClass.exponentially_decreasing(dec)
    if si:
        return GrowthClass.slowly_increasing()
    return GrowthClass.unclassified()


def singular_loci(e: Expr) -> list[Expr]:
    """Expressions whose zeros contain every singular point of ``e``.

    Covers denominators, bases of negative powers, logarithm arguments and
    the denominators hidden in ``tanh`` and ``logistic``. Factors inside a
    truncated product depend on the index and are not reported.
    """
    out: list[Expr] = []

    def walk(node):
        if isinstance(node, TruncatedProduct):
            return
        if isinstance(node, Div):
            out.append(node.den)
        elif isinstance(node, Pow) and node.exponent < 0:
            out.append(node.base)
        elif isinstance(node, Log):
            out.append(node.arg)
        elif isinstance(node, Logistic):
            out.append(Add((Const(1), Exp(node.arg))))
        elif isinstance(node, Tanh):
            out.append(Add((Const(1), Exp(Mul((Const(2), node.arg))))))
        for c in node.children():
            walk(c)

    walk(e)
    return out


# ---------------------------------------------------------------------------
# serialization

_UNARY = {"exp": Exp, "log": Log, "sin": Sin, "cos": Cos, "tanh": Tanh, "logistic": Logistic, "sinc": Sinc}
_UNARY_NAMES = {v: k for k, v in _UNARY.items()}


def _num_to_json(v: complex):
    if v == 1j:
        return "i"
    if v.imag == 0:
        return v.real
    return ["c", v.real, v.imag]


def expr_to_json(e: Expr):
    """S-expression form, e.g. ``["div", ["exp", ["mul", "i", "z1"]], "z1"]``."""
    if isinstance(e, Const):
        return _num_to_json(e.value)
    if isinstance(e, Var):
        return f"z{e.index + 1}"
    if isinstance(e, Index):
        return "k"
    if isinstance(e, Linear):
        return ["weight", [f"{c.numerator}/{c.denominator}" for c in e.weight.coefficients]]
    if isinstance(e, Add):
        return ["add", *[expr_to_json(t) for t in e.terms]]
    if isinstance(e, Mul):
        return ["mul", *[expr_to_json(f) for f in e.factors]]
    if isinstance(e, Neg):
        return ["neg", expr_to_json(e.arg)]
    if isinstance(e, Div):
        return ["div", expr_to_json(e.num), expr_to_json(e.den)]
    if isinstance(e, Pow):
        return ["pow", expr_to_json(e.base), e.exponent]
    if type(e) in _UNARY_NAMES:
        return [_UNARY_NAMES[type(e)], expr_to_json(e.arg)]
    if isinstance(e, TruncatedProduct):
        return ["tprod", expr_to_json(e.factor), e.K, e.start]
    raise TypeError(f"{type(e).__name__} is not serializable")


def expr_from_json(data) -> Expr:
    if isinstance(data, str):
        if data == "i":
            return I
        if data == "k":
            return k
        if data.startswith("z") and data[1:].isdigit():
            return Var(int(data[1:]) - 1)
        raise ValueError(f"unknown symbol {data!r}")
    if isinstance(data, bool):
        raise ValueError("booleans are not expressions")
    if isinstance(data, (int, float)):
        return Const(data)
    head, *rest = data
    if head == "c":
        return Const(complex(rest[0], rest[1]))
    if head == "weight":
        return Linear(Weight(tuple(Fraction(s) for s in rest[0])))
    if head == "add":
        return Add(tuple(expr_from_json(t) for t in rest))
    if head == "mul":
        return Mul(tuple(expr_from_json(t) for t in rest))
    if head == "neg":
        return Neg(expr_from_json(rest[0]))
    if head == "div":
        return Div(expr_from_json(rest[0]), expr_from_json(rest[1]))
    if head == "pow":
        return Pow(expr_from_json(rest[0]), int(rest[1]))
    if head in _UNARY:
        return _UNARY[head](expr_from_json(rest[0]))
    if head == "tprod":
        return TruncatedProduct(expr_from_json(rest[0]), int(rest[1]), int(rest[2]) if len(rest) > 2 else 1)
    raise ValueError(f"unknown operator {head!r}")


def dumps_expr(e: Expr) -> str:
    return json.dumps(expr_to_json(e))


def loads_expr(text: str) -> Expr:
    return expr_from_json(json.loads(text))
