"""Exact arithmetic in the totally ramified fields K_D = Q(p^(1/D)).

An element is stored as a sparse map ``j -> a_j`` meaning ``sum a_j * p^(j/D)``
with rational ``a_j`` and ``0 <= j < D``. Because ``x^D - p`` is Eisenstein,
``{p^(j/D)}`` is a basis over Q_p as well as over Q, and the summands have
valuations with pairwise distinct fractional parts, so

    v(x) = min_j (v_p(a_j) + j/D)

holds exactly.  Valuations are normalized by v(p) = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import DomainError, InputError, SchemaError

INFINITY = math.inf


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def vp_int(n: int, p: int) -> float | int:
    """p-adic valuation of an integer (INFINITY for 0)."""
    if n == 0:
        return INFINITY
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def vp(q, p: int):
    """p-adic valuation of a rational number."""
    q = Fraction(q)
    if q == 0:
        return INFINITY
    return vp_int(q.numerator, p) - vp_int(q.denominator, p)


@dataclass(frozen=True)
class PrimeContext:
    p: int
    D: int = 1

    def __post_init__(self):
        if not isinstance(self.p, int) or not is_prime(self.p):
            raise InputError(f"p must be a prime integer, got {self.p!r}")
        if not isinstance(self.D, int) or self.D < 1:
            raise InputError(f"D must be a positive integer, got {self.D!r}")

    def with_D(self, D: int) -> "PrimeContext":
        return PrimeContext(self.p, D)


def _canonical(ctx: PrimeContext, coords: Mapping[int, Fraction]):
    return tuple(sorted((j, Fraction(a)) for j, a in coords.items() if a != 0))


class FieldElement:
    """Immutable element of Q(p^(1/D))."""

    __slots__ = ("ctx", "terms", "_hash")

    def __init__(self, ctx: PrimeContext, coords: Mapping[int, Fraction] | None = None):
        coords = coords or {}
        for j in coords:
            if not (isinstance(j, int) and 0 <= j < ctx.D):
                raise InputError(f"ramification index {j!r} outside [0, {ctx.D})")
        object.__setattr__(self, "ctx", ctx)
        object.__setattr__(self, "terms", _canonical(ctx, coords))
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("FieldElement is immutable")

    # construction helpers -------------------------------------------------

    @classmethod
    def zero(cls, ctx: PrimeContext) -> "FieldElement":
        return cls(ctx)

    @classmethod
    def one(cls, ctx: PrimeContext) -> "FieldElement":
        return cls(ctx, {0: Fraction(1)})

    @classmethod
    def rational(cls, ctx: PrimeContext, q) -> "FieldElement":
        return cls(ctx, {0: Fraction(q)})

    @classmethod
    def prime_power(cls, ctx: PrimeContext, exponent) -> "FieldElement":
        """p^exponent; ``exponent * D`` must be an integer."""
        e = Fraction(exponent) * ctx.D
        if e.denominator != 1:
            raise InputError(f"p^{exponent} does not lie in K_{ctx.D}")
        whole, j = divmod(e.numerator, ctx.D)
        return cls(ctx, {j: Fraction(ctx.p) ** whole})

    # inspection -----------------------------------------------------------

    @property
    def coords(self) -> dict[int, Fraction]:
        return dict(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def is_rational(self) -> bool:
        return all(j == 0 for j, _ in self.terms)

    def valuation(self):
        return valuation(self)

    # arithmetic -----------------------------------------------------------

    def _check(self, other) -> "FieldElement":
        if isinstance(other, (int, Fraction)):
            return FieldElement.rational(self.ctx, other)
        if not isinstance(other, FieldElement):
            return NotImplemented
        if other.ctx != self.ctx:
            raise InputError(f"context mismatch: {self.ctx} vs {other.ctx}")
        return other

    def __add__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for j, a in other.terms:
            out[j] = out.get(j, 0) + a
        return FieldElement(self.ctx, out)

    __radd__ = __add__

    def __neg__(self):
        return FieldElement(self.ctx, {j: -a for j, a in self.terms})

    def __sub__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        D, p = self.ctx.D, self.ctx.p
        out: dict[int, Fraction] = {}
        for j1, a1 in self.terms:
            for j2, a2 in other.terms:
                j, c = j1 + j2, a1 * a2
                if j >= D:
                    j -= D
                    c *= p
                out[j] = out.get(j, 0) + c
        return FieldElement(self.ctx, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return self * invert(other)

    def __pow__(self, k: int):
        if k < 0:
            return invert(self) ** (-k)
        result = FieldElement.one(self.ctx)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.terms == _canonical(self.ctx, {0: Fraction(other)})
        if not isinstance(other, FieldElement):
            return NotImplemented
        return self.ctx == other.ctx and self.terms == other.terms

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash((self.ctx, self.terms))
            object.__setattr__(self, "_hash", h)
        return h

    def __repr__(self):
        return f"FieldElement({self.ctx.p}, D={self.ctx.D}, {format_element(self)})"


def make_element(ctx: PrimeContext, terms: Iterable[tuple[int, object]]) -> FieldElement:
    """Build ``sum a * p^(j/D)`` from ``(j, a)`` pairs; repeated ``j`` are summed."""
    out: dict[int, Fraction] = {}
    for j, a in terms:
        if not (isinstance(j, int) and 0 <= j < ctx.D):
            raise InputError(f"ramification index {j!r} outside [0, {ctx.D})")
        out[j] = out.get(j, 0) + Fraction(a)
    return FieldElement(ctx, out)


def add(x: FieldElement, y: FieldElement) -> FieldElement:
    return x + y


def mul(x: FieldElement, y: FieldElement) -> FieldElement:
    return x * y


def neg(x: FieldElement) -> FieldElement:
    return -x


def valuation(x: FieldElement):
    """Exact valuation as a Fraction, or INFINITY for zero."""
    if not x.terms:
        return INFINITY
    p, D = x.ctx.p, x.ctx.D
    return min(vp(a, p) + Fraction(j, D) for j, a in x.terms)


def invert(x: FieldElement) -> FieldElement:
    if not x.terms:
        raise DomainError("cannot invert zero")
    ctx = x.ctx
    if len(x.terms) == 1:
        (j, a), = x.terms
        if j == 0:
            return FieldElement(ctx, {0: 1 / a})
        # (a p^(j/D))^-1 = a^-1 p^-1 p^((D-j)/D)
        return FieldElement(ctx, {ctx.D - j: 1 / (a * ctx.p)})
    from .exact_linalg import solve_square

    # Column k of the multiplication-by-x matrix holds the coordinates of x * p^(k/D).
    D = ctx.D
    cols = []
    for k in range(D):
        prod = x * FieldElement(ctx, {k: Fraction(1)})
        c = prod.coords
        cols.append([c.get(i, Fraction(0)) for i in range(D)])
    matrix = [[cols[k][i] for k in range(D)] for i in range(D)]
    rhs = [Fraction(1)] + [Fraction(0)] * (D - 1)
    y = solve_square(matrix, rhs)
    return FieldElement(ctx, dict(enumerate(y)))


def lift_ramification(x: FieldElement, D_new: int) -> FieldElement:
    """Image of ``x`` under K_D -> K_{D_new}; requires D | D_new."""
    D = x.ctx.D
    if D_new % D:
        raise InputError(f"D={D} does not divide D_new={D_new}")
    if D_new == D:
        return x
    k = D_new // D
    return FieldElement(x.ctx.with_D(D_new), {j * k: a for j, a in x.terms})


def lift_point(point, D_new: int):
    return tuple(lift_ramification(x, D_new) for x in point)


def common_D(elements) -> int:
    D = 1
    for x in elements:
        D = math.lcm(D, x.ctx.D)
    return D


# --- text and JSON -----------------------------------------------------------


def format_rational(q) -> str:
    q = Fraction(q)
    return str(q)


def parse_rational(s, where=None) -> Fraction:
    if isinstance(s, bool):
        raise SchemaError("expected a rational string", where)
    if isinstance(s, int):
        return Fraction(s)
    if not isinstance(s, str):
        raise SchemaError(f"expected a rational string, got {type(s).__name__}", where)
    try:
        return Fraction(s.strip())
    except (ValueError, ZeroDivisionError):
        raise SchemaError(f"not an exact rational: {s!r}", where) from None


def format_valuation(v) -> str:
    return "inf" if v == INFINITY else str(Fraction(v))


def parse_valuation(s, where=None):
    if s == "inf":
        return INFINITY
    return parse_rational(s, where)


def format_element(x: FieldElement) -> str:
    if not x.terms:
        return "0"
    p, D = x.ctx.p, x.ctx.D
    if len(x.terms) == 1:
        (j, a), = x.terms
        k = vp(a, p)
        if a > 0 and a == Fraction(p) ** k and (j or k not in (0, 1)):
            return f"{p}^({k + Fraction(j, D)})"
    parts = []
    for j, a in x.terms:
        if j == 0:
            parts.append(str(a))
        else:
            e = Fraction(j, D)
            parts.append(f"{a}*{p}^({e})" if a != 1 else f"{p}^({e})")
    return " + ".join(parts)


def element_to_json(x: FieldElement) -> dict:
    return {
        "p": x.ctx.p,
        "D": x.ctx.D,
        "terms": [
            {"j": j, "num": str(a.numerator), "den": str(a.denominator)} for j, a in x.terms
        ],
    }


def _int_field(obj, key, where):
    val = obj.get(key) if isinstance(obj, dict) else None
    if isinstance(val, bool) or not isinstance(val, int):
        raise SchemaError(f"'{key}' must be an integer", f"{where}.{key}" if where else key)
    return val


def _decimal_int(s, where):
    if isinstance(s, int) and not isinstance(s, bool):
        return s
    if not isinstance(s, str) or not s.strip().lstrip("-").isdigit():
        raise SchemaError(f"expected a decimal integer string, got {s!r}", where)
    return int(s)


def element_from_json(obj, ctx: PrimeContext | None = None, where: str = "") -> FieldElement:
    """Parse the element schema ``{"p", "D", "terms": [{"j", "num", "den"}]}``.

    A bare rational string such as ``"3/2"`` is accepted when ``ctx`` is given.
    """
    if isinstance(obj, (str, int)) and not isinstance(obj, bool):
        if ctx is None:
            raise SchemaError("bare rational needs an enclosing context", where)
        return FieldElement.rational(ctx, parse_rational(obj, where))
    if not isinstance(obj, dict):
        raise SchemaError("expected an element object", where)
    p = _int_field(obj, "p", where)
    D = _int_field(obj, "D", where)
    try:
        elem_ctx = PrimeContext(p, D)
    except InputError as exc:
        raise SchemaError(str(exc), where) from None
    if ctx is not None and elem_ctx != ctx:
        raise SchemaError(f"element context (p={p}, D={D}) differs from (p={ctx.p}, D={ctx.D})", where)
    terms = obj.get("terms")
    if not isinstance(terms, list):
        raise SchemaError("'terms' must be a list", f"{where}.terms")
    pairs = []
    for idx, t in enumerate(terms):
        tw = f"{where}.terms[{idx}]"
        j = _int_field(t, "j", tw)
        if not 0 <= j < D:
            raise SchemaError(f"ramification index {j} outside [0, {D})", f"{tw}.j")
        num = _decimal_int(t.get("num"), f"{tw}.num")
        den = _decimal_int(t.get("den", "1"), f"{tw}.den")
        if den == 0:
            raise SchemaError("zero denominator", f"{tw}.den")
        pairs.append((j, Fraction(num, den)))
    return make_element(elem_ctx, pairs)
