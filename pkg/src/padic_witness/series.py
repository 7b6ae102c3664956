"""Multivariate truncated power series with coefficients in K_D.

A convergent series on the unit polydisk is modeled by its polynomial part
plus an optional promise about the omitted tail: ``tail=T`` means every
omitted coefficient has degree > T and valuation >= 0.  ``tail=None`` means
the polynomial is the whole series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

from .errors import InputError, ModeError, RegionError, SchemaError, TruncationTooShallow
from .field_tower import (
    INFINITY,
    FieldElement,
    PrimeContext,
    common_D,
    element_from_json,
    element_to_json,
    lift_point,
    lift_ramification,
    valuation,
)

Monomial = tuple[int, ...]
Point = tuple[FieldElement, ...]


def degree(mu: Monomial) -> int:
    return sum(mu)


def grlex_key(mu: Monomial):
    # ascending total degree, then z_1 > z_2 > ... within a degree
    return (sum(mu), tuple(-e for e in mu))


@lru_cache(maxsize=None)
def monomials_below(m: int, d: int) -> tuple[Monomial, ...]:
    """All monomials in ``d`` variables of total degree < m, graded-lex order."""
    out = []
    for deg in range(m):
        out.extend(_monomials_of_degree(deg, d))
    return tuple(out)


def _monomials_of_degree(deg: int, d: int):
    if d == 1:
        return [(deg,)]
    out = []
    for first in range(deg, -1, -1):
        for rest in _monomials_of_degree(deg - first, d - 1):
            out.append((first,) + rest)
    return out


@dataclass(frozen=True)
class TruncatedSeries:
    ctx: PrimeContext
    d: int
    terms: tuple[tuple[Monomial, FieldElement], ...]
    tail: int | None = None

    def __init__(self, ctx: PrimeContext, d: int, terms: Mapping[Monomial, FieldElement] | Iterable = (), tail: int | None = None):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Monomial, FieldElement] = {}
        for mu, c in items:
            mu = tuple(mu)
            if len(mu) != d or any((not isinstance(e, int)) or e < 0 for e in mu):
                raise InputError(f"bad exponent vector {mu} for d={d}")
            if not isinstance(c, FieldElement):
                c = FieldElement.rational(ctx, c)
            if c.ctx != ctx:
                raise InputError(f"coefficient context {c.ctx} differs from {ctx}")
            acc[mu] = acc[mu] + c if mu in acc else c
        if tail is not None:
            if tail < 0:
                raise InputError("tail degree must be nonnegative")
            too_high = [mu for mu, c in acc.items() if c and degree(mu) > tail]
            if too_high:
                raise InputError(f"stored monomial {too_high[0]} exceeds truncation degree {tail}")
        canon = tuple(sorted(((mu, c) for mu, c in acc.items() if c), key=lambda t: grlex_key(t[0])))
        object.__setattr__(self, "ctx", ctx)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "terms", canon)
        object.__setattr__(self, "tail", tail)

    @property
    def is_exact(self) -> bool:
        return self.tail is None

    def coeff(self, mu: Monomial) -> FieldElement:
        for nu, c in self.terms:
            if nu == mu:
                return c
        return FieldElement.zero(self.ctx)

    def as_dict(self) -> dict[Monomial, FieldElement]:
        return dict(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def max_degree(self) -> int:
        return max((degree(mu) for mu, _ in self.terms), default=0)

    def lift(self, D_new: int) -> "TruncatedSeries":
        if D_new == self.ctx.D:
            return self
        return TruncatedSeries(
            self.ctx.with_D(D_new), self.d, [(mu, lift_ramification(c, D_new)) for mu, c in self.terms], self.tail
        )

    def _merge_tail(self, other):
        if self.tail is None:
            return other.tail
        if other.tail is None:
            return self.tail
        return min(self.tail, other.tail)

    def __add__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        if other.ctx != self.ctx or other.d != self.d:
            raise InputError("series live in different rings")
        tail = self._merge_tail(other)
        terms = list(self.terms) + list(other.terms)
        if tail is not None:
            terms = [(mu, c) for mu, c in terms if degree(mu) <= tail]
        return TruncatedSeries(self.ctx, self.d, terms, tail)

    def scale(self, c) -> "TruncatedSeries":
        """Multiply by a scalar (rational or FieldElement).

        The tail promise is kept only for scalars of valuation >= 0.
        """
        if not isinstance(c, FieldElement):
            c = FieldElement.rational(self.ctx, c)
        if self.tail is not None and valuation(c) < 0:
            raise ModeError("scaling by negative valuation voids the integral-tail promise")
        return TruncatedSeries(self.ctx, self.d, [(mu, c * a) for mu, a in self.terms], self.tail)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def __repr__(self):
        body = " + ".join(f"({c!r})*z^{mu}" for mu, c in self.terms) or "0"
        return f"TruncatedSeries(d={self.d}, tail={self.tail}, {body})"


SeriesVector = tuple[TruncatedSeries, ...]


def constant(ctx: PrimeContext, d: int, c) -> TruncatedSeries:
    return TruncatedSeries(ctx, d, {(0,) * d: c})


def variable(ctx: PrimeContext, d: int, i: int) -> TruncatedSeries:
    return TruncatedSeries(ctx, d, {tuple(int(k == i) for k in range(d)): 1})


# --- evaluation ----------------------------------------------------------------


def _common(f: TruncatedSeries, u: Sequence[FieldElement]):
    if len(u) != f.d:
        raise InputError(f"point has {len(u)} coordinates, series has {f.d} variables")
    for x in u:
        if x.ctx.p != f.ctx.p:
            raise InputError("point and series use different primes")
    D = math.lcm(common_D(u), f.ctx.D)
    return f.lift(D), lift_point(u, D)


class _PowerCache:
    def __init__(self, u: Point):
        self.u = u
        self.cache: dict[tuple[int, int], FieldElement] = {}

    def __call__(self, i: int, e: int) -> FieldElement:
        key = (i, e)
        hit = self.cache.get(key)
        if hit is None:
            if e == 0:
                hit = FieldElement.one(self.u[i].ctx)
            else:
                hit = self(i, e - 1) * self.u[i]
            self.cache[key] = hit
        return hit


def monomial_value(mu: Monomial, power) -> FieldElement:
    out = None
    for i, e in enumerate(mu):
        term = power(i, e)
        out = term if out is None else out * term
    return out


def evaluate_polynomial(f: TruncatedSeries, u: Sequence[FieldElement]) -> FieldElement:
    """Value of the stored polynomial part at ``u`` (tail ignored)."""
    f, u = _common(f, u)
    power = _PowerCache(u)
    total = FieldElement.zero(f.ctx)
    for mu, c in f.terms:
        total = total + c * monomial_value(mu, power)
    return total


def tail_floor(f: TruncatedSeries, u: Sequence[FieldElement]):
    """Valuation floor ``(T+1) * min v(u_i)`` for the omitted tail of ``f`` at ``u``."""
    vmin = min((valuation(x) for x in u), default=INFINITY)
    if vmin == INFINITY:
        return INFINITY
    if vmin <= 0:
        raise RegionError("lower-bound evaluation needs v(u_i) > 0 for every coordinate")
    return (f.tail + 1) * vmin


def evaluate(f: TruncatedSeries, u: Sequence[FieldElement], mode: str = "exact"):
    """Evaluate ``f`` at ``u``.

    ``mode="exact"`` needs an exact polynomial and returns the value.
    ``mode="lower_bound"`` returns ``(value of polynomial part, floor)``: the
    whole series differs from that value by something of valuation >= floor.
    For an exact polynomial the floor is INFINITY.
    """
    if mode == "exact":
        if f.tail is not None:
            raise ModeError("exact evaluation of a truncated series")
        return evaluate_polynomial(f, u)
    if mode == "lower_bound":
        if f.tail is None:
            if any(valuation(x) <= 0 for x in u):
                raise RegionError("lower-bound evaluation needs v(u_i) > 0 for every coordinate")
            return evaluate_polynomial(f, u), INFINITY
        floor = tail_floor(f, u)
        return evaluate_polynomial(f, u), floor
    raise ValueError(f"unknown evaluation mode {mode!r}")


# --- truncation, recentering, scaling ----------------------------------------


def truncate_below(f: TruncatedSeries, m: int) -> tuple[FieldElement, ...]:
    """Coefficients of all monomials of degree < m, graded-lex order, zeros included."""
    if m < 1:
        raise InputError("m must be >= 1")
    if f.tail is not None and m > f.tail + 1:
        raise TruncationTooShallow(f"degree < {m} requested but coefficients are only trusted up to degree {f.tail}")
    coeffs = f.as_dict()
    zero = FieldElement.zero(f.ctx)
    return tuple(coeffs.get(mu, zero) for mu in monomials_below(m, f.d))


def truncate_vector(fs: Sequence[TruncatedSeries], m: int) -> tuple[FieldElement, ...]:
    out: tuple[FieldElement, ...] = ()
    for f in fs:
        out += truncate_below(f, m)
    return out


def recenter(f: TruncatedSeries, u: Sequence[FieldElement]) -> TruncatedSeries:
    """``g`` with ``g(w) = f(u + w)``, by exact binomial expansion.

    The result lives in the ramification of ``u`` (lcm with that of ``f``).
    """
    if f.tail is not None:
        raise ModeError("recentering needs an exact polynomial")
    f, u = _common(f, u)
    power = _PowerCache(u)
    acc: dict[Monomial, FieldElement] = {}
    for mu, c in f.terms:
        # prod_i (u_i + w_i)^{e_i} = prod_i sum_k C(e_i, k) u_i^{e_i-k} w_i^k
        partial = [((), c)]
        for i, e in enumerate(mu):
            nxt = []
            for nu, coeff in partial:
                for k in range(e + 1):
                    nxt.append((nu + (k,), coeff * power(i, e - k) * math.comb(e, k)))
            partial = nxt
        for nu, coeff in partial:
            acc[nu] = acc[nu] + coeff if nu in acc else coeff
    return TruncatedSeries(f.ctx, f.d, acc)


def point_add(u: Sequence[FieldElement], w: Sequence[FieldElement]) -> Point:
    D = math.lcm(common_D(u), common_D(w))
    return tuple(a + b for a, b in zip(lift_point(u, D), lift_point(w, D)))


def min_coefficient_valuation(series: Iterable[TruncatedSeries]):
    return min((valuation(c) for f in series for _, c in f.terms), default=INFINITY)


def scale_to_integral(basis: Sequence[Sequence[TruncatedSeries]]):
    """Multiply every series by one common ``p^k`` (k >= 0) so all coefficients are integral.

    ``basis`` is a list of series vectors.  Returns ``(scaled basis, k)``.
    """
    flat = [f for vec in basis for f in vec]
    if not flat:
        return [tuple(v) for v in basis], 0
    vmin = min_coefficient_valuation(flat)
    k = 0 if vmin == INFINITY or vmin >= 0 else math.ceil(-vmin)
    if k == 0:
        return [tuple(v) for v in basis], 0
    ctx = flat[0].ctx
    factor = FieldElement.rational(ctx, Fraction(ctx.p) ** k)
    return [tuple(f.scale(factor) for f in vec) for vec in basis], k


# --- JSON ----------------------------------------------------------------------


def series_to_json(f: TruncatedSeries) -> dict:
    return {
        "d": f.d,
        "tail": {"kind": "none"} if f.tail is None else {"kind": "integral", "T": f.tail},
        "terms": [{"exp": list(mu), "coeff": element_to_json(c)} for mu, c in f.terms],
    }


def series_from_json(obj, ctx: PrimeContext, d: int | None = None, where: str = "") -> TruncatedSeries:
    if not isinstance(obj, dict):
        raise SchemaError("expected a series object", where)
    sd = obj.get("d", d)
    if isinstance(sd, bool) or not isinstance(sd, int) or sd < 1:
        raise SchemaError("'d' must be a positive integer", f"{where}.d")
    if d is not None and sd != d:
        raise SchemaError(f"series has d={sd}, expected {d}", f"{where}.d")
    tail_obj = obj.get("tail", {"kind": "none"})
    if not isinstance(tail_obj, dict) or tail_obj.get("kind") not in ("none", "integral"):
        raise SchemaError("tail must be {'kind': 'none'} or {'kind': 'integral', 'T': int}", f"{where}.tail")
    tail = None
    if tail_obj["kind"] == "integral":
        T = tail_obj.get("T")
        if isinstance(T, bool) or not isinstance(T, int) or T < 0:
            raise SchemaError("'T' must be a nonnegative integer", f"{where}.tail.T")
        tail = T
    terms = obj.get("terms")
    if not isinstance(terms, list):
        raise SchemaError("'terms' must be a list", f"{where}.terms")
    pairs = []
    for idx, t in enumerate(terms):
        tw = f"{where}.terms[{idx}]"
        if not isinstance(t, dict):
            raise SchemaError("expected a term object", tw)
        exp = t.get("exp")
        if not isinstance(exp, list) or len(exp) != sd or any(isinstance(e, bool) or not isinstance(e, int) or e < 0 for e in exp):
            raise SchemaError(f"'exp' must be a list of {sd} nonnegative integers", f"{tw}.exp")
        if tail is not None and sum(exp) > tail:
            raise SchemaError(f"monomial degree {sum(exp)} exceeds declared T={tail}", f"{tw}.exp")
        if "coeff" not in t:
            raise SchemaError("missing 'coeff'", tw)
        pairs.append((tuple(exp), element_from_json(t["coeff"], ctx, f"{tw}.coeff")))
    return TruncatedSeries(ctx, sd, pairs, tail)
