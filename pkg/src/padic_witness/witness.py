"""Witness-point construction for injectivity of evaluation maps.

Given Q_p-independent series ``f_1, ..., f_n`` (vectors of ``r`` series in
``d`` variables), build a valuation torus

    U = {z : v(z_i) = N + 1/q_i for all i}

on which ``a -> sum a_i f_i(u)`` is injective, and a canonical point
``u_i = p^(N + 1/q_i)`` in it.

Scalar case (r = 1).  Pick the least ``m`` with the degree-<m truncations
independent, bound every ``v(sum a_i t_i)`` (``a`` primitive in Z_p^n) by
``A``, take primes ``q_i > m`` that do not divide the ramification ``D``,
and ``N`` with ``mN > (m-1)(N + 1/q_i) + A``.  For any nonzero combination
``f = sum c^mu mu``, monomials of degree >= m contribute valuation >= mN
while some ``xi`` of degree < m contributes < mN; the valuations of
``c^mu mu(u)`` for ``deg mu < m`` are pairwise distinct since modulo
Z_(q_i) they equal ``e_i/q_i``.  Hence ``f(u) != 0``.

Vector case.  Split off the last coordinate: the image of the projection to
the first ``r-1`` coordinates is handled recursively, the kernel (series
whose first ``r-1`` coordinates vanish) is recentered at the image witness
and solved inside a polydisk small enough that every outer valuation
constraint stays constant.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import DependentBasis, InputError, ModeError, TruncationTooShallow
from .exact_linalg import bareiss_pivots, bound_A, expand, kernel_basis, rank_over_prime_field
from .field_tower import (
    FieldElement,
    PrimeContext,
    common_D,
    element_to_json,
    format_element,
    format_valuation,
    is_prime,
    lift_point,
    valuation,
)
from .series import (
    Monomial,
    Point,
    TruncatedSeries,
    evaluate_polynomial,
    min_coefficient_valuation,
    monomial_value,
    monomials_below,
    point_add,
    recenter,
    scale_to_integral,
    series_to_json,
    truncate_vector,
    _PowerCache,
)


@dataclass(frozen=True)
class SubspaceBasis:
    """Ordered basis ``f_1..f_n`` of a subspace of R^r; each element is a tuple of r series."""

    elements: tuple[tuple[TruncatedSeries, ...], ...]
    integrality_exponent: int = 0

    def __post_init__(self):
        elements = tuple(tuple(e) for e in self.elements)
        object.__setattr__(self, "elements", elements)
        if not elements:
            return
        r, d, ctx = len(elements[0]), elements[0][0].d, elements[0][0].ctx
        for e in elements:
            if len(e) != r or r < 1:
                raise InputError("basis elements must all have the same number r >= 1 of components")
            for f in e:
                if f.d != d or f.ctx != ctx:
                    raise InputError("basis series must share variables and context")

    @classmethod
    def scalar(cls, series: Sequence[TruncatedSeries], integrality_exponent: int = 0) -> "SubspaceBasis":
        return cls(tuple((f,) for f in series), integrality_exponent)

    @property
    def n(self) -> int:
        return len(self.elements)

    @property
    def r(self) -> int:
        return len(self.elements[0])

    @property
    def d(self) -> int:
        return self.elements[0][0].d

    @property
    def ctx(self) -> PrimeContext:
        return self.elements[0][0].ctx

    @property
    def exact(self) -> bool:
        return all(f.tail is None for e in self.elements for f in e)

    def scalars(self) -> list[TruncatedSeries]:
        if self.r != 1:
            raise InputError("scalar view of a vector-valued basis")
        return [e[0] for e in self.elements]


@dataclass(frozen=True)
class TorusRegion:
    """``{z : v(z_i) = N + 1/q_i}`` together with its canonical point."""

    p: int
    N: int
    q: tuple[int, ...]
    D_witness: int

    def valuations(self) -> tuple[Fraction, ...]:
        return tuple(self.N + Fraction(1, qi) for qi in self.q)

    def witness(self) -> Point:
        ctx = PrimeContext(self.p, self.D_witness)
        return tuple(FieldElement.prime_power(ctx, v) for v in self.valuations())

    def contains(self, z: Sequence[FieldElement]) -> bool:
        return tuple(valuation(x) for x in z) == self.valuations()

    def to_json(self) -> dict:
        return {
            "N": self.N,
            "q": list(self.q),
            "valuations": [str(v) for v in self.valuations()],
            "D_witness": self.D_witness,
        }


@dataclass(frozen=True)
class LevelCertificate:
    """One scalar solve inside the chain: its constants and valuation table."""

    center: Point | None
    integrality_exponent: int
    m: int
    M: tuple[Monomial, ...]
    A: Fraction
    q: tuple[int, ...]
    N: int
    tail: int | None
    # per basis element: ((mu, v(c^mu mu(u))) for mu in M with c^mu != 0)
    table: tuple[tuple[tuple[Monomial, Fraction], ...], ...]

    def to_json(self) -> dict:
        return {
            "integrality_exponent": self.integrality_exponent,
            "m": self.m,
            "M": [list(mu) for mu in self.M],
            "A": str(self.A),
            "q": list(self.q),
            "N": self.N,
            "table": [[{"exp": list(mu), "v": format_valuation(v)} for mu, v in row] for row in self.table],
        }


@dataclass(frozen=True)
class WitnessCertificate:
    basis: SubspaceBasis
    levels: tuple[LevelCertificate, ...]
    chain: tuple[tuple[Point, TorusRegion], ...]
    witness: Point
    D_witness: int
    rank_check: int

    def to_json(self) -> dict:
        return certificate_json(self)


FORMAT = "padic-witness-certificate/1"


def basis_to_json(basis: SubspaceBasis) -> list:
    return [[series_to_json(f) for f in e] for e in basis.elements]


def basis_digest(basis_json) -> str:
    blob = json.dumps(basis_json, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def certificate_json(cert: WitnessCertificate) -> dict:
    b = cert.basis
    bj = basis_to_json(b)
    return {
        "format": FORMAT,
        "p": b.ctx.p,
        "D": b.ctx.D,
        "d": b.d,
        "r": b.r,
        "n": b.n,
        "basis": bj,
        "basis_sha256": basis_digest(bj),
        "levels": [lvl.to_json() for lvl in cert.levels],
        "witness": [element_to_json(x) for x in cert.witness],
        "witness_text": [format_element(x) for x in cert.witness],
        "D_witness": cert.D_witness,
        "rank_check": cert.rank_check,
    }


# --- choosing the constants ----------------------------------------------------


def truncation_rank(basis: SubspaceBasis, m: int) -> int:
    rows = [truncate_vector(e, m) for e in basis.elements]
    return rank_over_prime_field(expand(rows, support_only=True))


def minimal_m(basis: SubspaceBasis) -> int:
    """Least m >= 1 with the degree-<m truncations Q_p-independent."""
    if basis.n == 0:
        raise InputError("empty basis")
    if basis.exact and any(all(f.is_zero() for f in e) for e in basis.elements):
        raise DependentBasis("basis contains the zero element")
    if basis.exact:
        limit = 1 + max(f.max_degree() for e in basis.elements for f in e)
    else:
        limit = 1 + min(f.tail for e in basis.elements for f in e if f.tail is not None)
    for m in range(1, limit + 1):
        if truncation_rank(basis, m) == basis.n:
            return m
    if basis.exact:
        raise DependentBasis(f"the {basis.n} basis elements are Q_p-dependent")
    raise TruncationTooShallow(
        f"truncations up to degree {limit - 1} are dependent; basis is dependent or under-truncated"
    )


def primes_above(m: int):
    q = m + 1
    while True:
        if is_prime(q):
            yield q
        q += 1


def choose_primes(m: int, D: int, d: int) -> list[int]:
    """The d smallest primes exceeding m that do not divide D."""
    out = []
    for q in primes_above(m):
        if len(out) == d:
            break
        if D % q:
            out.append(q)
    return out


def n_inequality(m: int, N: int, A: Fraction, qi: int) -> bool:
    return m * N > (m - 1) * (N + Fraction(1, qi)) + A


def choose_N(m: int, A, q: Sequence[int], floor: int = 1) -> int:
    """Least integer N >= max(1, floor) with ``mN > (m-1)(N + 1/q_i) + A`` for all i."""
    A = Fraction(A)
    need = max(A + Fraction(m - 1, qi) for qi in q)
    N = max(1, floor, math.floor(need) + 1)
    assert all(n_inequality(m, N, A, qi) for qi in q)
    return N


# --- scalar solve --------------------------------------------------------------


def valuation_table(series: Sequence[TruncatedSeries], M: Sequence[Monomial], u: Point):
    """``(mu, v(c^mu mu(u)))`` for mu in M with nonzero coefficient, per series."""
    D = math.lcm(common_D(u), series[0].ctx.D)
    u = lift_point(u, D)
    power = _PowerCache(u)
    mono_v = {mu: valuation(monomial_value(mu, power)) for mu in M}
    rows = []
    for f in series:
        coeffs = f.as_dict()
        row = []
        for mu in M:
            c = coeffs.get(mu)
            if c is not None and c:
                row.append((mu, valuation(c) + mono_v[mu]))
        rows.append(tuple(row))
    return tuple(rows)


def _constants(basis: SubspaceBasis, N_floor: int):
    ctx = basis.ctx
    m = minimal_m(basis)
    M = monomials_below(m, basis.d)
    t = [truncate_vector(e, m) for e in basis.elements]
    A = bound_A(expand(t, support_only=True))
    q = tuple(choose_primes(m, ctx.D, basis.d))
    N = choose_N(m, A, q, N_floor)
    return m, M, A, TorusRegion(ctx.p, N, q, math.lcm(ctx.D, math.prod(q)))


def solve_r1(basis: SubspaceBasis, N_floor: int = 1, center: Point | None = None):
    """Scalar construction on an integral basis; returns ``(TorusRegion, LevelCertificate)``."""
    if basis.r != 1:
        raise InputError("solve_r1 needs r = 1")
    series = basis.scalars()
    if min_coefficient_valuation(series) < 0:
        raise InputError("basis is not integral; apply scale_to_integral first")
    m, M, A, region = _constants(basis, N_floor)
    q, N = region.q, region.N
    table = valuation_table(series, M, region.witness())
    tails = [f.tail for f in series if f.tail is not None]
    level = LevelCertificate(
        center=center,
        integrality_exponent=basis.integrality_exponent,
        m=m,
        M=M,
        A=A,
        q=q,
        N=N,
        tail=min(tails) if tails else None,
        table=table,
    )
    return region, level


# --- vector case ---------------------------------------------------------------


def _combine(basis: SubspaceBasis, coeffs: Sequence[Fraction], component: int) -> TruncatedSeries:
    ctx, d = basis.ctx, basis.d
    out = TruncatedSeries(ctx, d, {})
    for a, e in zip(coeffs, basis.elements):
        if a:
            out = out + e[component].scale(a)
    return out


def coefficient_rows(basis: SubspaceBasis, components: range):
    """Stacked K_D coefficient vectors of the chosen components (exact polynomials)."""
    keys = sorted({(k, mu) for e in basis.elements for k in components for mu, _ in e[k].terms})
    zero = FieldElement.zero(basis.ctx)
    rows = []
    for e in basis.elements:
        dicts = [e[k].as_dict() for k in range(basis.r)]
        rows.append(tuple(dicts[k].get(mu, zero) for k, mu in keys))
    return rows


def split_projection(basis: SubspaceBasis):
    """``(image basis in R^(r-1), kernel basis in R)``; either may be None when zero-dimensional.

    The image basis is the projection of the first maximal independent subset
    of the ``f_i``; the kernel basis is spanned by the last components of the
    combinations whose first ``r-1`` components vanish.
    """
    if basis.r < 2:
        raise InputError("split_projection needs r >= 2")
    if not basis.exact:
        raise ModeError("splitting a vector-valued basis needs exact polynomials")
    rows = coefficient_rows(basis, range(basis.r - 1))
    M = expand(rows, support_only=True)
    independent = bareiss_pivots(list(zip(*M.rows))) if M.rows and M.columns else []
    image = None
    if independent:
        image = SubspaceBasis(tuple(basis.elements[i][:-1] for i in independent))
    kernel = None
    kvecs = kernel_basis(M.as_lists()) if M.columns else [tuple(Fraction(int(i == k)) for k in range(basis.n)) for i in range(basis.n)]
    if kvecs:
        kernel = SubspaceBasis.scalar([_combine(basis, a, basis.r - 1) for a in kvecs])
    return image, kernel


def decompose(basis: SubspaceBasis) -> list[SubspaceBasis]:
    """Scalar subspaces solved in order: the image recursion first, then the kernel."""
    if basis.r == 1:
        return [basis]
    image, kernel = split_projection(basis)
    parts = decompose(image) if image is not None else []
    if kernel is not None:
        parts.append(kernel)
    return parts


def level_series(part: SubspaceBasis, center: Point | None) -> SubspaceBasis:
    """Recenter a scalar part at ``center`` and scale it to integral."""
    series = part.scalars()
    if center is not None:
        series = [recenter(f, center) for f in series]
    scaled, k = scale_to_integral([(f,) for f in series])
    return SubspaceBasis(tuple(scaled), k)


def value_matrix_rank(basis: SubspaceBasis, u: Point) -> int:
    """Rank over Q_p of the values ``f_i(u)`` (polynomial parts), expanded over the prime field."""
    D = math.lcm(common_D(u), basis.ctx.D)
    u = lift_point(u, D)
    rows = [tuple(evaluate_polynomial(f, u) for f in e) for e in basis.elements]
    return rank_over_prime_field(expand(rows, support_only=True))


def solve(basis: SubspaceBasis):
    """Region chain and certificate for an arbitrary ``r``.

    Raises DependentBasis for dependent input, ModeError for truncated
    input with r > 1.
    """
    if basis.n == 0:
        raise InputError("empty basis")
    if basis.r > 1 and not basis.exact:
        raise ModeError("r > 1 needs exact polynomials (the induction recenters)")
    if basis.exact:
        rows = coefficient_rows(basis, range(basis.r))
        if rank_over_prime_field(expand(rows, support_only=True)) < basis.n:
            raise DependentBasis(f"the {basis.n} basis elements are Q_p-dependent")
    parts = decompose(basis)
    center: Point | None = None
    levels = []
    chain = []
    N_floor = 1
    for part in parts:
        lvl_basis = level_series(part, center)
        region, level = solve_r1(lvl_basis, N_floor, center)
        origin = center if center is not None else tuple(FieldElement.zero(basis.ctx) for _ in range(basis.d))
        chain.append((origin, region))
        levels.append(level)
        offset = region.witness()
        center = offset if center is None else point_add(center, offset)
        # next torus sits strictly inside the polydisk v(w_i) > N + 1/q_i
        N_floor = region.N + 1
    u = center
    D_w = common_D(u)
    u = lift_point(u, D_w)
    rank = value_matrix_rank(basis, u)
    cert = WitnessCertificate(basis, tuple(levels), tuple(chain), u, D_w, rank)
    return tuple(chain), cert


def analysis_json(basis: SubspaceBasis, cert: WitnessCertificate) -> dict:
    levels = []
    for (center, region), lvl in zip(cert.chain, cert.levels):
        levels.append(
            {
                "m": lvl.m,
                "M": [list(mu) for mu in lvl.M],
                "A": str(lvl.A),
                "q": list(lvl.q),
                "N": lvl.N,
                "region": region.to_json(),
            }
        )
    first = levels[0]
    return {
        "p": basis.ctx.p,
        "D": basis.ctx.D,
        "d": basis.d,
        "r": basis.r,
        "n": basis.n,
        "m": first["m"],
        "M": first["M"],
        "A": first["A"],
        "q": first["q"],
        "N": first["N"],
        "region": first["region"],
        "levels": levels,
    }


def analyze(basis: SubspaceBasis) -> dict:
    """Constants (m, M, A, q, N) and regions without the final rank check.

    For r = 1 the witness point is never computed.
    """
    if basis.r == 1:
        if basis.exact:
            rows = coefficient_rows(basis, range(1))
            if rank_over_prime_field(expand(rows, support_only=True)) < basis.n:
                raise DependentBasis(f"the {basis.n} basis elements are Q_p-dependent")
        lvl_basis = level_series(basis, None)
        region, level = _constants_only(lvl_basis)
        fake = WitnessCertificate(basis, (level,), ((None, region),), (), region.D_witness, 0)
        return analysis_json(basis, fake)
    _, cert = solve(basis)
    return analysis_json(basis, cert)


def _constants_only(basis: SubspaceBasis):
    m, M, A, region = _constants(basis, 1)
    level = LevelCertificate(None, basis.integrality_exponent, m, M, A, region.q, region.N, None, ())
    return region, level
