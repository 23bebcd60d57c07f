"""Exact dyadic numbers, outward-rounded intervals and approximation names.

Every rigorous evaluation in the package goes through :class:`Interval`, whose
endpoints are :class:`Dyadic` numbers ``mantissa * 2**exponent``.  Addition,
subtraction and multiplication are exact until the mantissa outgrows the cap;
division, ``exp`` and ``sqrt`` round outward at the working precision.
"""

from __future__ import annotations

import ast
import contextvars
import functools
import math
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Union

from .errors import (
    ConsistencyViolation,
    DivisorContainsZero,
    OverflowBudgetExceeded,
    PrefixTooShort,
)

__all__ = [
    "Dyadic",
    "Interval",
    "LowerBound",
    "RealName",
    "LeftRealApprox",
    "Precision",
    "precision",
    "get_precision",
    "iv_eval",
    "partial_sum",
    "name_from_cauchy",
]


@dataclass(frozen=True)
class Precision:
    bits: int = 128  # precision of inexact operations (div, exp, sqrt)
    cap: int = 4096  # mantissa size at which exact results get rounded outward


_PRECISION = contextvars.ContextVar("noncomp_lab_precision", default=Precision())


def get_precision() -> Precision:
    return _PRECISION.get()


@contextmanager
def precision(bits: int | None = None, cap: int | None = None):
    """Temporarily change the working precision and mantissa cap."""
    cur = _PRECISION.get()
    new = Precision(bits if bits is not None else cur.bits, cap if cap is not None else cur.cap)
    token = _PRECISION.set(new)
    try:
        yield new
    finally:
        _PRECISION.reset(token)


# ---------------------------------------------------------------------------
# Dyadic numbers
# ---------------------------------------------------------------------------

Number = Union[int, float, Fraction, "Dyadic"]


class Dyadic:
    """An exact number ``mantissa * 2**exponent`` in canonical form.

    Canonical form keeps the mantissa odd (or zero, with exponent 0), so equal
    values have equal fields.  Plain arithmetic is exact and raises
    :class:`OverflowBudgetExceeded` once a mantissa outgrows the cap.
    """

    __slots__ = ("mantissa", "exponent")

    def __init__(self, mantissa: int = 0, exponent: int = 0):
        m = int(mantissa)
        e = int(exponent)
        if m == 0:
            e = 0
        else:
            tz = (m & -m).bit_length() - 1
            if tz:
                m >>= tz
                e += tz
        object.__setattr__(self, "mantissa", m)
        object.__setattr__(self, "exponent", e)

    def __setattr__(self, name, value):
        raise AttributeError("Dyadic is immutable")

    def __reduce__(self):
        return (Dyadic, (self.mantissa, self.exponent))

    # -- construction -----------------------------------------------------
    @classmethod
    def coerce(cls, value: Number) -> "Dyadic":
        if isinstance(value, Dyadic):
            return value
        if isinstance(value, bool):
            return cls(int(value))
        if isinstance(value, int):
            return cls(value)
        if isinstance(value, float):
            if not math.isfinite(value):
                raise ValueError(f"cannot represent {value!r} as a dyadic")
            num, den = value.as_integer_ratio()
            return cls(num, -(den.bit_length() - 1))
        if isinstance(value, Fraction):
            den = value.denominator
            if den & (den - 1):
                raise ValueError(f"{value} is not a dyadic rational")
            return cls(value.numerator, -(den.bit_length() - 1))
        if isinstance(value, str):
            return cls.parse(value)
        raise TypeError(f"cannot convert {type(value).__name__} to Dyadic")

    @classmethod
    def parse(cls, text: str) -> "Dyadic":
        """Inverse of :meth:`__str__` (``"m*2^e"``); plain integers also accepted."""
        text = text.strip()
        if "*2^" in text:
            m, e = text.split("*2^")
            return cls(int(m), int(e))
        return cls(int(text))

    @classmethod
    def round_fraction(cls, q: Fraction, bits: int, up: bool) -> "Dyadic":
        """Round a rational to a dyadic with about ``bits`` significant bits."""
        if q == 0:
            return cls(0)
        num, den = q.numerator, q.denominator
        if den & (den - 1) == 0:
            exact = cls(num, -(den.bit_length() - 1))
            return _round_dyadic(exact, bits, up)
        shift = bits + den.bit_length() - abs(num).bit_length() + 1
        if shift >= 0:
            scaled_num, scaled_den = num << shift, den
        else:
            scaled_num, scaled_den = num, den << -shift
        m = -((-scaled_num) // scaled_den) if up else scaled_num // scaled_den
        return cls(m, -shift)

    # -- conversions ------------------------------------------------------
    def to_fraction(self) -> Fraction:
        if self.exponent >= 0:
            return Fraction(self.mantissa << self.exponent)
        return Fraction(self.mantissa, 1 << -self.exponent)

    def __float__(self) -> float:
        m, e = self.mantissa, self.exponent
        excess = m.bit_length() - 64
        if excess > 0:
            # correctly rounded via Fraction when the mantissa is wide
            try:
                return float(self.to_fraction()) if abs(e) < 4000 else math.ldexp(float(m >> excess), e + excess)
            except OverflowError:
                return math.inf if m > 0 else -math.inf
        try:
            return math.ldexp(m, e)
        except OverflowError:
            return math.inf if m > 0 else -math.inf

    def __int__(self) -> int:
        return int(self.to_fraction())

    def floor(self) -> int:
        if self.exponent >= 0:
            return self.mantissa << self.exponent
        return self.mantissa >> -self.exponent

    def ceil(self) -> int:
        return -((-self).floor())

    def floor_log2(self) -> int:
        """``floor(log2(|self|))``; undefined for zero."""
        if self.mantissa == 0:
            raise ValueError("log2 of zero")
        return abs(self.mantissa).bit_length() - 1 + self.exponent

    def __str__(self) -> str:
        return f"{self.mantissa}*2^{self.exponent}"

    def __repr__(self) -> str:
        return f"Dyadic({self.mantissa}, {self.exponent})"

    # -- arithmetic -------------------------------------------------------
    def _checked(self) -> "Dyadic":
        if self.mantissa.bit_length() > get_precision().cap:
            raise OverflowBudgetExceeded(
                f"mantissa needs {self.mantissa.bit_length()} bits (cap {get_precision().cap})"
            )
        return self

    def __add__(self, other):
        try:
            other = Dyadic.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return _add(self, other)._checked()

    __radd__ = __add__

    def __sub__(self, other):
        try:
            other = Dyadic.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return _add(self, -other)._checked()

    def __rsub__(self, other):
        try:
            other = Dyadic.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return _add(other, -self)._checked()

    def __mul__(self, other):
        try:
            other = Dyadic.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return Dyadic(self.mantissa * other.mantissa, self.exponent + other.exponent)._checked()

    __rmul__ = __mul__

    def __neg__(self) -> "Dyadic":
        return Dyadic(-self.mantissa, self.exponent)

    def __pos__(self) -> "Dyadic":
        return self

    def __abs__(self) -> "Dyadic":
        return self if self.mantissa >= 0 else -self

    def scale2(self, k: int) -> "Dyadic":
        """Exact multiplication by ``2**k``."""
        return Dyadic(self.mantissa, self.exponent + k)

    def sign(self) -> int:
        return (self.mantissa > 0) - (self.mantissa < 0)

    # -- comparisons ------------------------------------------------------
    def _cmp(self, other) -> int:
        other = Dyadic.coerce(other)
        if self.mantissa == 0 or other.mantissa == 0 or self.sign() != other.sign():
            return (self.sign() > other.sign()) - (self.sign() < other.sign())
        return _add(self, -other).sign()

    def __eq__(self, other):
        if isinstance(other, Dyadic):
            return self.mantissa == other.mantissa and self.exponent == other.exponent
        if isinstance(other, (int, Fraction)):
            return self.to_fraction() == other
        if isinstance(other, float):
            return math.isfinite(other) and self == Dyadic.coerce(other)
        return NotImplemented

    def __hash__(self):
        return hash(self.to_fraction())

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0


def _add(a: Dyadic, b: Dyadic) -> Dyadic:
    if a.mantissa == 0:
        return b
    if b.mantissa == 0:
        return a
    e = min(a.exponent, b.exponent)
    return Dyadic((a.mantissa << (a.exponent - e)) + (b.mantissa << (b.exponent - e)), e)


def _round_dyadic(d: Dyadic, bits: int, up: bool) -> Dyadic:
    excess = d.mantissa.bit_length() - bits
    if excess <= 0:
        return d
    m = d.mantissa >> excess  # floor
    if up and (m << excess) != d.mantissa:
        m += 1
    return Dyadic(m, d.exponent + excess)


def _div_round(a: Dyadic, b: Dyadic, bits: int, up: bool) -> Dyadic:
    na, nb = a.mantissa, b.mantissa
    if nb < 0:
        na, nb = -na, -nb
    if na == 0:
        return Dyadic(0)
    s = max(0, bits + nb.bit_length() - abs(na).bit_length() + 1)
    num = na << s
    q = -((-num) // nb) if up else num // nb
    return Dyadic(q, a.exponent - b.exponent - s)


def _sqrt_round(a: Dyadic, bits: int, up: bool) -> Dyadic:
    if a.mantissa < 0:
        raise ValueError("sqrt of a negative number")
    if a.mantissa == 0:
        return Dyadic(0)
    m, e = a.mantissa, a.exponent
    shift = max(0, 2 * bits - m.bit_length() + 2)
    if (e - shift) % 2:
        shift += 1
    m <<= shift
    e -= shift
    r = math.isqrt(m)
    if up and r * r != m:
        r += 1
    return Dyadic(r, e // 2)


# ---------------------------------------------------------------------------
# exp with rigorous bounds
# ---------------------------------------------------------------------------

def _exp_bounds(x: Dyadic, bits: int, cap: int) -> tuple[Dyadic, Dyadic]:
    """Lower and upper dyadic bounds on ``exp(x)``.

    Argument halving to ``|y| <= 2**-10``, Taylor series with the geometric
    remainder bound ``2 * next_term``, then repeated squaring.  Every
    intermediate rounding is directed, so the pair brackets the true value.
    """
    if x.mantissa == 0:
        return Dyadic(1), Dyadic(1)
    if x >= cap:
        raise OverflowBudgetExceeded(f"exp({float(x):.6g}) exceeds 2^{cap}")
    if x <= -cap:
        # e^x < e^-cap < 2^-cap
        return Dyadic(0), Dyadic(1, -cap)
    a = abs(x)
    s = max(0, a.floor_log2() + 11)
    y = a.scale2(-s)
    w = bits + s + 24

    lo_sum = Dyadic(1)
    hi_sum = Dyadic(1)
    lo_term = Dyadic(1)
    hi_term = Dyadic(1)
    j = 0
    tiny = Dyadic(1, -(w + 4))
    while True:
        j += 1
        lo_term = _div_round(_round_dyadic(lo_term * y, w, False), Dyadic(j), w, False)
        hi_term = _div_round(_round_dyadic(hi_term * y, w, True), Dyadic(j), w, True)
        if hi_term < tiny:
            # remaining tail bounded by hi_term / (1 - y) <= 2 * hi_term
            hi_sum = _add(hi_sum, hi_term.scale2(1))
            break
        lo_sum = _round_dyadic(_add(lo_sum, lo_term), w, False)
        hi_sum = _round_dyadic(_add(hi_sum, hi_term), w, True)

    for _ in range(s):
        lo_sum = _round_dyadic(lo_sum * lo_sum, w, False)
        hi_sum = _round_dyadic(hi_sum * hi_sum, w, True)

    if x.mantissa < 0:
        lo_sum, hi_sum = _div_round(Dyadic(1), hi_sum, w, False), _div_round(Dyadic(1), lo_sum, w, True)
    return _round_dyadic(lo_sum, bits, False), _round_dyadic(hi_sum, bits, True)


# ---------------------------------------------------------------------------
# Intervals
# ---------------------------------------------------------------------------

def _lower(value) -> Dyadic:
    if isinstance(value, Fraction):
        return Dyadic.round_fraction(value, get_precision().bits, up=False)
    return Dyadic.coerce(value)


def _upper(value) -> Dyadic:
    if isinstance(value, Fraction):
        return Dyadic.round_fraction(value, get_precision().bits, up=True)
    return Dyadic.coerce(value)


class Interval:
    """Closed interval ``[lo, hi]`` with dyadic endpoints.

    Results of every operation enclose the exact image of the operands.
    Mixed operations with ``int``, ``float``, :class:`~fractions.Fraction`
    and :class:`Dyadic` coerce the other operand to a (possibly rounded
    outward) point interval.
    """

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        if isinstance(lo, Interval) and hi is None:
            lo, hi = lo.lo, lo.hi
        if hi is None:
            hi = lo
        lo_d = _lower(lo)
        hi_d = _upper(hi)
        if lo_d > hi_d:
            raise ValueError(f"empty interval [{lo_d}, {hi_d}]")
        object.__setattr__(self, "lo", lo_d)
        object.__setattr__(self, "hi", hi_d)

    def __setattr__(self, name, value):
        raise AttributeError("Interval is immutable")

    def __reduce__(self):
        return (Interval, (self.lo, self.hi))

    @classmethod
    def _make(cls, lo: Dyadic, hi: Dyadic) -> "Interval":
        # point results stay exact up to the cap; wider ones only need the
        # working precision, so their endpoints are rounded outward to it
        p = get_precision()
        limit = p.cap if lo == hi else p.bits
        obj = object.__new__(cls)
        object.__setattr__(obj, "lo", _round_dyadic(lo, limit, False))
        object.__setattr__(obj, "hi", _round_dyadic(hi, limit, True))
        return obj

    @classmethod
    def coerce(cls, value) -> "Interval":
        return value if isinstance(value, Interval) else cls(value)

    @classmethod
    def hull_of(cls, items: Iterable["Interval"]) -> "Interval":
        items = list(items)
        lo = min(i.lo for i in items)
        hi = max(i.hi for i in items)
        return cls._make(lo, hi)

    # -- queries ----------------------------------------------------------
    def width(self) -> Dyadic:
        """Upper bound on ``hi - lo`` (exact unless it needs more than the working precision)."""
        return _round_dyadic(_add(self.hi, -self.lo), get_precision().bits, True)

    def mid(self) -> Dyadic:
        """A dyadic point of the interval near its centre."""
        m = _round_dyadic(_add(self.lo, self.hi).scale2(-1), get_precision().bits, False)
        return m if m >= self.lo else self.lo

    def rad(self) -> Dyadic:
        return self.width().scale2(-1)

    def mag(self) -> Dyadic:
        return max(abs(self.lo), abs(self.hi))

    def mig(self) -> Dyadic:
        if self.lo.sign() <= 0 <= self.hi.sign():
            return Dyadic(0)
        return min(abs(self.lo), abs(self.hi))

    def is_point(self) -> bool:
        return self.lo == self.hi

    def is_zero(self) -> bool:
        return self.lo.mantissa == 0 and self.hi.mantissa == 0

    def contains(self, value) -> bool:
        if isinstance(value, Interval):
            return self.lo <= value.lo and value.hi <= self.hi
        if isinstance(value, Fraction):
            return self.lo.to_fraction() <= value <= self.hi.to_fraction()
        v = Dyadic.coerce(value)
        return self.lo <= v <= self.hi

    __contains__ = contains

    def interior_contains(self, other: "Interval") -> bool:
        return self.lo < other.lo and other.hi < self.hi

    def intersects(self, other) -> bool:
        other = Interval.coerce(other)
        return self.lo <= other.hi and other.lo <= self.hi

    def intersection(self, other) -> "Interval | None":
        other = Interval.coerce(other)
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        if lo > hi:
            return None
        return Interval._make(lo, hi)

    def hull(self, other) -> "Interval":
        other = Interval.coerce(other)
        return Interval._make(min(self.lo, other.lo), max(self.hi, other.hi))

    def bisect(self) -> tuple["Interval", "Interval"]:
        m = self.mid()
        return Interval._make(self.lo, m), Interval._make(m, self.hi)

    def inflate(self, eps) -> "Interval":
        e = _upper(eps)
        return Interval._make(_add(self.lo, -e), _add(self.hi, e))

    def float_bounds(self) -> tuple[float, float]:
        """Outward float bounds (suitable for plotting and fast pre-checks)."""
        lo, hi = float(self.lo), float(self.hi)
        if Dyadic.coerce(lo) > self.lo:
            lo = math.nextafter(lo, -math.inf)
        if Dyadic.coerce(hi) < self.hi:
            hi = math.nextafter(hi, math.inf)
        return lo, hi

    def __float__(self) -> float:
        return float(self.mid())

    def __repr__(self) -> str:
        return f"Interval({float(self.lo)!r}, {float(self.hi)!r})"

    def __eq__(self, other):
        if not isinstance(other, Interval):
            return NotImplemented
        return self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        return hash((self.lo, self.hi))

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        try:
            other = Interval.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return Interval._make(_add(self.lo, other.lo), _add(self.hi, other.hi))

    __radd__ = __add__

    def __neg__(self):
        return Interval._make(-self.hi, -self.lo)

    def __pos__(self):
        return self

    def __sub__(self, other):
        try:
            other = Interval.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return Interval._make(_add(self.lo, -other.hi), _add(self.hi, -other.lo))

    def __rsub__(self, other):
        try:
            other = Interval.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return other - self

    def __mul__(self, other):
        try:
            other = Interval.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        if self.is_point() and other.is_point():
            p = _mul(self.lo, other.lo)
            return Interval._make(p, p)
        prods = (
            _mul(self.lo, other.lo),
            _mul(self.lo, other.hi),
            _mul(self.hi, other.lo),
            _mul(self.hi, other.hi),
        )
        return Interval._make(min(prods), max(prods))

    __rmul__ = __mul__

    def __truediv__(self, other):
        try:
            other = Interval.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        if other.lo.sign() <= 0 <= other.hi.sign():
            raise DivisorContainsZero(f"divisor {other!r} contains zero")
        bits = get_precision().bits
        cands = [(a, b) for a in (self.lo, self.hi) for b in (other.lo, other.hi)]
        lo = min(_div_round(a, b, bits, False) for a, b in cands)
        hi = max(_div_round(a, b, bits, True) for a, b in cands)
        return Interval._make(lo, hi)

    def __rtruediv__(self, other):
        try:
            other = Interval.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return other / self

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            return NotImplemented
        if n == 0:
            return Interval(1)
        if n % 2 == 0:
            return self.sqr() ** (n // 2) if n > 2 else self.sqr()
        out = self
        for _ in range(n - 1):
            out = out * self
        return out

    def __abs__(self):
        if self.lo.sign() >= 0:
            return self
        if self.hi.sign() <= 0:
            return -self
        return Interval._make(Dyadic(0), self.mag())

    def sqr(self) -> "Interval":
        """Tight square (no dependency widening)."""
        a = self.__abs__()
        return Interval._make(_mul(a.lo, a.lo), _mul(a.hi, a.hi))

    def exp(self) -> "Interval":
        p = get_precision()
        lo, _ = _exp_bounds(self.lo, p.bits, p.cap)
        if self.is_point():
            _, hi = _exp_bounds(self.lo, p.bits, p.cap)
        else:
            _, hi = _exp_bounds(self.hi, p.bits, p.cap)
        return Interval._make(lo, hi)

    def sqrt(self) -> "Interval":
        if self.lo.sign() < 0:
            raise ValueError("sqrt of an interval with negative part")
        bits = get_precision().bits
        return Interval._make(_sqrt_round(self.lo, bits, False), _sqrt_round(self.hi, bits, True))

    def max0(self) -> "Interval":
        """``max(x, 0)`` applied pointwise."""
        zero = Dyadic(0)
        return Interval._make(max(self.lo, zero), max(self.hi, zero))


def _mul(a: Dyadic, b: Dyadic) -> Dyadic:
    return Dyadic(a.mantissa * b.mantissa, a.exponent + b.exponent)


def iv_exp(x) -> Interval:
    return Interval.coerce(x).exp()


@dataclass(frozen=True)
class LowerBound:
    """A one-sided enclosure ``[lo, +inf)`` for left-computable quantities."""

    lo: Dyadic

    def contains(self, value) -> bool:
        return Dyadic.coerce(value) >= self.lo if not isinstance(value, Fraction) else (
            value >= self.lo.to_fraction()
        )

    __contains__ = contains


# ---------------------------------------------------------------------------
# Expression evaluation
# ---------------------------------------------------------------------------

_FUNCS: dict[str, Callable[[Interval], Interval]] = {
    "exp": lambda x: x.exp(),
    "sqr": lambda x: x.sqr(),
    "sqrt": lambda x: x.sqrt(),
}


@functools.lru_cache(maxsize=256)
def _parse(expr: str) -> ast.expr:
    tree = ast.parse(expr, mode="eval")
    return tree.body


def _eval_node(node: ast.expr, env: Mapping[str, Interval]) -> Interval:
    if isinstance(node, ast.BinOp):
        left = _eval_node(node.left, env)
        if isinstance(node.op, ast.Pow):
            if not (isinstance(node.right, ast.Constant) and isinstance(node.right.value, int)):
                raise ValueError("only non-negative integer powers are supported")
            return left ** node.right.value
        right = _eval_node(node.right, env)
        if isinstance(node.op, ast.Add):
            return left + right
        if isinstance(node.op, ast.Sub):
            return left - right
        if isinstance(node.op, ast.Mult):
            return left * right
        if isinstance(node.op, ast.Div):
            return left / right
        raise ValueError(f"unsupported operator {type(node.op).__name__}")
    if isinstance(node, ast.UnaryOp):
        operand = _eval_node(node.operand, env)
        if isinstance(node.op, ast.USub):
            return -operand
        if isinstance(node.op, ast.UAdd):
            return operand
        raise ValueError(f"unsupported unary operator {type(node.op).__name__}")
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS or len(node.args) != 1:
            raise ValueError("only exp(.), sqr(.) and sqrt(.) calls are supported")
        return _FUNCS[node.func.id](_eval_node(node.args[0], env))
    if isinstance(node, ast.Name):
        try:
            return Interval.coerce(env[node.id])
        except KeyError:
            raise ValueError(f"unbound variable {node.id!r}") from None
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        if isinstance(node.value, float):
            # decimal literals are not dyadic in general; enclose the decimal value
            return Interval(Fraction(repr(node.value)), Fraction(repr(node.value)))
        return Interval(node.value)
    raise ValueError(f"unsupported expression node {ast.dump(node)}")


def iv_eval(expr: str, env: Mapping[str, Interval | Number] | None = None) -> Interval:
    """Evaluate an arithmetic expression over intervals.

    ``expr`` is Python syntax restricted to ``+ - * / **int``, unary minus,
    numeric literals, variable names and the calls ``exp``, ``sqr``, ``sqrt``.
    The result encloses the exact value for every point of the input
    intervals.
    """
    return _eval_node(_parse(expr), env or {})


# ---------------------------------------------------------------------------
# Names of reals
# ---------------------------------------------------------------------------

def partial_sum(values: "Iterable[int] | object", M: int, shift: int = 0) -> Dyadic:
    """Exact ``sum_{m=0}^{M} 2**(-a(m) - shift)`` over an enumeration prefix."""
    vals = list(getattr(values, "values", values))
    if M < 0:
        return Dyadic(0)
    if M >= len(vals):
        raise PrefixTooShort(f"partial sum up to index {M} needs {M + 1} values, have {len(vals)}")
    total = Dyadic(0)
    for v in vals[: M + 1]:
        total = _add(total, Dyadic(1, -v - shift))
    return total


class RealName:
    """A name of a real: ``approx(k)`` is within ``2**-k`` of the value."""

    def __init__(self, approx: Callable[[int], Number]):
        self._approx = approx

    def __call__(self, k: int) -> Dyadic:
        return Dyadic.coerce(self._approx(k))

    def enclosure(self, k: int) -> Interval:
        r = self(k)
        eps = Dyadic(1, -k)
        return Interval._make(_add(r, -eps), _add(r, eps))

    def check(self, ks: Iterable[int]) -> None:
        """Raise :class:`ConsistencyViolation` if consecutive approximants disagree."""
        for k in ks:
            diff = abs(self(k) - self(k + 1))
            if diff > _add(Dyadic(1, -k), Dyadic(1, -(k + 1))):
                raise ConsistencyViolation(k)


def name_from_cauchy(f: Callable[[int], Number], modulus_ok: bool = True, check_upto: int = 16) -> RealName:
    """Wrap ``f`` as a :class:`RealName`.

    The caller vouches for the ``2**-k`` modulus (``modulus_ok``); the
    consistency of consecutive approximants is checked for ``k < check_upto``.
    """
    if not modulus_ok:
        raise ValueError("name_from_cauchy requires the caller to assert the 2^-k modulus")
    name = RealName(f)
    name.check(range(check_upto))
    return name


class LeftRealApprox:
    """Nondecreasing lower bounds ``s_M`` of a left-computable real."""

    def __init__(self, lower_bound: Callable[[int], Dyadic]):
        self._lb = lower_bound

    def __call__(self, M: int) -> Dyadic:
        return self._lb(M)

    def lower(self, M: int) -> LowerBound:
        return LowerBound(self(M))

    @classmethod
    def from_prefix(cls, prefix, shift: int = 0) -> "LeftRealApprox":
        return cls(lambda M: partial_sum(prefix, M, shift))
