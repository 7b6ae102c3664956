"""Brute-force checks that do not trust the solver.

* ``enumerate_valuation_set`` lists ``v(sum a_i t_i)`` over primitive
  residue vectors ``a`` modulo ``p^L``.
* ``verify_injectivity_grid`` checks ``sum a_i f_i(u) != 0`` on every
  primitive residue vector.
* ``verify_certificate`` re-derives every field of a certificate from its
  JSON form.

A residue ``a`` known only mod ``p^L`` determines ``v(sum a_i t_i)`` only
when that value is below ``L + min_i v(t_i)``; anything at or above the cut
is reported as unresolved, never trusted.
"""

from __future__ import annotations

import itertools
import math
import os
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import SchemaError
from .exact_linalg import bound_A, expand, rank_over_prime_field
from .field_tower import (
    INFINITY,
    FieldElement,
    PrimeContext,
    common_D,
    element_from_json,
    format_element,
    format_valuation,
    is_prime,
    lift_point,
    valuation,
    vp_int,
)
from .series import evaluate_polynomial, monomials_below, tail_floor, truncate_vector, _PowerCache, monomial_value
from .witness import (
    FORMAT,
    SubspaceBasis,
    TorusRegion,
    basis_digest,
    basis_to_json,
    choose_N,
    choose_primes,
    decompose,
    level_series,
    minimal_m,
    n_inequality,
    truncation_rank,
    valuation_table,
    value_matrix_rank,
)

DEFAULT_PRECISION = 3
MAX_PRECISION = 6


def worker_count() -> int:
    """Oracle parallelism cap from ``PADIC_WITNESS_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("PADIC_WITNESS_THREADS", "1")))
    except ValueError:
        return 1


# --- residue grids -------------------------------------------------------------


def balanced_residues(p: int, L: int) -> range:
    """One representative per class mod p^L, centred on zero, ascending."""
    q = p**L
    return range(-(q // 2), q - q // 2)


@dataclass(frozen=True)
class ResidueGrid:
    """Primitive residue vectors: classes of (Z/p^L)^n outside p * (Z/p^(L-1))^n."""

    p: int
    n: int
    L: int

    def __len__(self):
        return self.p ** (self.L * self.n) - self.p ** ((self.L - 1) * self.n)

    def __iter__(self):
        p = self.p
        for a in itertools.product(balanced_residues(p, self.L), repeat=self.n):
            if any(x % p for x in a):
                yield a


# --- integer views of rational rows ----------------------------------------------


@dataclass
class _IntegerColumns:
    """Rows ``n x c`` of rationals rewritten as integer numerators over per-column denominators."""

    p: int
    nums: list[list[int]]
    den_v: list[int]
    weights: list[Fraction]

    @classmethod
    def from_rows(cls, rows, weights, p):
        ncols = len(weights)
        dens = [math.lcm(*(row[c].denominator for row in rows)) if rows else 1 for c in range(ncols)]
        nums = [[int(row[c] * dens[c]) for c in range(ncols)] for row in rows]
        return cls(p, nums, [vp_int(d, p) for d in dens], list(weights))

    def combine(self, a):
        ncols = len(self.weights)
        return [sum(ai * row[c] for ai, row in zip(a, self.nums)) for c in range(ncols)]

    def valuation(self, a):
        y = self.combine(a)
        return min(
            (vp_int(x, self.p) - dv + w for x, dv, w in zip(y, self.den_v, self.weights) if x),
            default=INFINITY,
        )


# --- valuation sets of lattices ----------------------------------------------------


@dataclass(frozen=True)
class ValuationSet:
    values: frozenset
    unresolved: bool
    precision: int

    @property
    def stabilized(self) -> bool:
        # every primitive residue class resolved: the set is exact
        return not self.unresolved

    def to_json(self) -> dict:
        return {
            "set": [format_valuation(v) for v in sorted(self.values)],
            "unresolved": self.unresolved,
            "stabilized": self.stabilized,
            "precision": self.precision,
        }


def _vectors_matrix(t: Sequence[Sequence[FieldElement]]):
    M = expand(t, support_only=True)
    return M, _IntegerColumns.from_rows(M.rows, M.weights, M.p)


def enumerate_valuation_set(t: Sequence[Sequence[FieldElement]], L: int) -> ValuationSet:
    """``{v(sum a_i t_i)}`` over primitive ``a`` mod ``p^L``.

    Equivalent to scanning ``ResidueGrid(p, n, L)``, but classes are refined
    digit by digit: once a class mod ``p^l`` has a resolved valuation, all of
    its lifts share it, so only unresolved classes are split further.
    """
    t = [tuple(v) for v in t]
    if not t:
        raise ValueError("need at least one vector")
    M, cols = _vectors_matrix(t)
    p, n = M.p, len(t)
    vmin = min(cols.valuation([int(i == k) for k in range(n)]) for i in range(n))
    if vmin == INFINITY:
        # some t_i vanishes: v = inf is attained and never resolves
        vmin = 0
    values = set()
    unresolved = False
    frontier = [a for a in itertools.product(range(p), repeat=n) if any(a)]
    digits = list(itertools.product(range(p), repeat=n))
    for level in range(1, L + 1):
        nxt = []
        cut = level + vmin
        scale = p**level
        for a in frontier:
            v = cols.valuation(a)
            if v < cut:
                values.add(v)
            elif level == L:
                unresolved = True
            else:
                nxt.extend(tuple(x + scale * b for x, b in zip(a, bs)) for bs in digits)
        frontier = nxt
    return ValuationSet(frozenset(values), unresolved, L)


def enumerate_valuation_set_direct(t, L: int) -> ValuationSet:
    """Plain scan of the residue grid; exponential, for cross-checking on tiny inputs."""
    t = [tuple(v) for v in t]
    M, cols = _vectors_matrix(t)
    n = len(t)
    vmin = min(cols.valuation([int(i == k) for k in range(n)]) for i in range(n))
    vmin = 0 if vmin == INFINITY else vmin
    values, unresolved = set(), False
    for a in ResidueGrid(M.p, n, L):
        v = cols.valuation(a)
        if v < L + vmin:
            values.add(v)
        else:
            unresolved = True
    return ValuationSet(frozenset(values), unresolved, L)


def valuation_set(t, L: int = DEFAULT_PRECISION, max_L: int = MAX_PRECISION) -> ValuationSet:
    """Enumerate at precision L, escalating up to ``max_L`` until stabilized."""
    result = enumerate_valuation_set(t, L)
    while not result.stabilized and result.precision < max_L:
        result = enumerate_valuation_set(t, result.precision + 1)
    return result


def fractional_parts(vs: ValuationSet):
    """``(set of v mod 1, conclusive)``; inconclusive when the enumeration did not stabilize."""
    fracs = {v - math.floor(v) for v in vs.values}
    return frozenset(fracs), vs.stabilized


# --- injectivity on a residue grid ------------------------------------------------


@dataclass(frozen=True)
class GridResult:
    status: str  # "pass" | "fail" | "inconclusive"
    counterexample: tuple[int, ...] | None
    grid_size: int
    precision: int

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "counterexample": list(self.counterexample) if self.counterexample is not None else None,
            "grid_size": self.grid_size,
            "precision": self.precision,
        }


# Two fingerprint primes below 2^31 keep every numpy intermediate inside int64.
_P1 = 2147483647
_P2 = 2147483629
_SEED = 20240611


def _fingerprints(rows: list[list[int]], P: int, rng: random.Random):
    ncols = len(rows[0]) if rows else 0
    rho = [rng.randrange(1, P) for _ in range(ncols)]
    return [sum(x * r for x, r in zip(row, rho)) % P for row in rows]


def _value_rows(basis: SubspaceBasis, u):
    D = math.lcm(common_D(u), basis.ctx.D)
    u = lift_point(u, D)
    vals = [tuple(evaluate_polynomial(f, u) for f in e) for e in basis.elements]
    return vals


def _exact_zero(nums, a) -> bool:
    return all(sum(ai * row[c] for ai, row in zip(a, nums)) == 0 for c in range(len(nums[0]) if nums else 0))


def _half_sums(hs, residues: np.ndarray, P: int) -> np.ndarray:
    acc = np.zeros(1, dtype=np.int64)
    for h in hs:
        acc = ((acc[:, None] + (residues * h)[None, :]) % P).reshape(-1)
    return acc


def _digits(index: int, length: int, base: int):
    out = []
    for _ in range(length):
        index, r = divmod(index, base)
        out.append(r)
    return out[::-1]


def _grid_scan_exact(nums: list[list[int]], p: int, L: int):
    """Grid-order-minimal primitive ``a`` with ``sum a_i row_i = 0``, or None.

    Meet in the middle over two random linear fingerprints modulo primes near
    2^31: every exact zero has zero fingerprints, so no residue vector escapes
    the scan; fingerprint collisions are re-checked exactly.
    """
    n = len(nums)
    if not nums or not nums[0]:
        # every value is zero; the first primitive residue vector is a counterexample
        return next(iter(ResidueGrid(p, n, L)))
    rng = random.Random(_SEED)
    h1 = _fingerprints(nums, _P1, rng)
    h2 = _fingerprints(nums, _P2, rng)
    residues = np.array(balanced_residues(p, L), dtype=np.int64)
    base = len(residues)
    first = n - n // 2
    s1 = _half_sums(h1[:first], residues, _P1) * _P2 + _half_sums(h2[:first], residues, _P2)
    t1 = (-_half_sums(h1[first:], residues, _P1)) % _P1
    t2 = (-_half_sums(h2[first:], residues, _P2)) % _P2
    s2 = t1 * _P2 + t2
    order = np.argsort(s1, kind="stable")
    sorted_keys = s1[order]
    lo = np.searchsorted(sorted_keys, s2, side="left")
    hi = np.searchsorted(sorted_keys, s2, side="right")
    hits = np.nonzero(hi > lo)[0]
    pairs = []
    for i2 in hits:
        for i1 in order[lo[i2] : hi[i2]]:
            pairs.append((int(i1), int(i2)))
    pairs.sort()
    for i1, i2 in pairs:
        a = tuple(int(residues[k]) for k in _digits(i1, first, base)) + tuple(
            int(residues[k]) for k in _digits(i2, n - first, base)
        )
        if not any(x % p for x in a):
            continue
        if _exact_zero(nums, a):
            return a
    return None


def verify_injectivity_grid(basis: SubspaceBasis, u, L: int = DEFAULT_PRECISION, workers: int | None = None) -> GridResult:
    """Check that ``sum a_i f_i(u) != 0`` for every primitive residue vector ``a`` mod ``p^L``.

    Exact polynomials are evaluated exactly.  Truncated series are decided
    only when the polynomial part has valuation below the tail floor;
    otherwise the result is inconclusive, never a pass.
    """
    p, n = basis.ctx.p, basis.n
    grid = ResidueGrid(p, n, L)
    vals = _value_rows(basis, u)
    M = expand(vals, support_only=True)
    cols = _IntegerColumns.from_rows(M.rows, M.weights, p)
    if basis.exact:
        a = _grid_scan_exact(cols.nums, p, L)
        if a is None:
            return GridResult("pass", None, len(grid), L)
        return GridResult("fail", a, len(grid), L)
    return _grid_scan_lower_bound(basis, u, M, cols, grid, workers or worker_count())


def _grid_scan_lower_bound(basis, u, M, cols, grid, workers):
    r = basis.r
    floors = [min(tail_floor(e[k], u) if e[k].tail is not None else INFINITY for e in basis.elements) for k in range(r)]
    comp_cols = [[c for c, (k, _) in enumerate(M.columns) if k == comp] for comp in range(r)]
    p = basis.ctx.p

    def decide(a):
        y = cols.combine(a)
        zero = True
        for comp in range(r):
            v = min(
                (vp_int(y[c], p) - cols.den_v[c] + cols.weights[c] for c in comp_cols[comp] if y[c]),
                default=INFINITY,
            )
            if v != INFINITY:
                zero = False
            if v < floors[comp]:
                return "nonzero"
        return "zero" if zero and all(f == INFINITY for f in floors) else "unknown"

    reps = balanced_residues(p, grid.L)
    chunks = [[a for a in grid if a[0] == x] for x in reps]

    def scan(chunk):
        for a in chunk:
            verdict = decide(a)
            if verdict != "nonzero":
                return a, verdict
        return None

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(scan, chunks))
    else:
        results = [scan(c) for c in chunks]
    for res in results:
        if res is not None:
            a, verdict = res
            status = "fail" if verdict == "zero" else "inconclusive"
            return GridResult(status, a, len(grid), grid.L)
    return GridResult("pass", None, len(grid), grid.L)


# --- inequality checks at a witness -------------------------------------------------


def recover_exponent(v: Fraction, q: int) -> int:
    """The e in [0, q) with ``v in e/q + Z_(q)``."""
    x = Fraction(v) * q
    if x.denominator % q == 0:
        raise ValueError(f"{v} is not in (1/q) Z_(q) for q={q}")
    return x.numerator * pow(x.denominator, -1, q) % q


def monomial_valuations(series, u):
    """``{mu: v(c^mu mu(u))}`` over all stored monomials of each series."""
    D = math.lcm(common_D(u), series[0].ctx.D)
    u = lift_point(u, D)
    power = _PowerCache(u)
    out = []
    for f in series:
        out.append({mu: valuation(c) + valuation(monomial_value(mu, power)) for mu, c in f.terms})
    return out


def check_high_degree_bound(series, m: int, N: int, u) -> bool:
    """Every stored monomial of degree >= m has ``v(c^mu mu(u)) >= mN``."""
    for table in monomial_valuations(series, u):
        for mu, v in table.items():
            if sum(mu) >= m and v < m * N:
                return False
    return True


@dataclass
class CombinationReport:
    checked: int = 0
    low_term_found: bool = True
    distinct: bool = True
    exponents_recovered: bool = True
    nonzero: bool = True
    failures: list = field(default_factory=list)

    @property
    def ok(self):
        return self.low_term_found and self.distinct and self.exponents_recovered and self.nonzero


def check_combinations(series, m: int, N: int, q, u, L: int) -> CombinationReport:
    """For every primitive ``a`` mod ``p^L``, inspect ``f = sum a_i f_i`` at ``u``.

    Some ``xi`` with ``deg xi < m`` has ``v(c^xi xi(u)) < mN``; the valuations
    over ``deg mu < m`` with ``c^mu != 0`` are pairwise distinct; each one
    recovers its exponent vector from the residues modulo ``1/q_i``; and
    ``f(u) != 0``.
    """
    ctx = series[0].ctx
    p = ctx.p
    M = monomials_below(m, series[0].d)
    D = math.lcm(common_D(u), ctx.D)
    u = lift_point(u, D)
    power = _PowerCache(u)
    mono_v = {mu: valuation(monomial_value(mu, power)) for mu in M}
    coeff_rows = [f.as_dict() for f in series]
    zero = FieldElement.zero(ctx)
    # c^mu for a combination is linear in a: expand per monomial once
    per_mu = {}
    for mu in M:
        vecs = [(coeffs.get(mu, zero),) for coeffs in coeff_rows]
        E = expand(vecs, support_only=True)
        per_mu[mu] = _IntegerColumns.from_rows(E.rows, E.weights, p) if E.columns else None
    values = [evaluate_polynomial(f, u) for f in series]
    V = expand([(x,) for x in values], support_only=True)
    vcols = _IntegerColumns.from_rows(V.rows, V.weights, p) if V.columns else None
    report = CombinationReport()
    for a in ResidueGrid(p, len(series), L):
        report.checked += 1
        vals = []
        for mu in M:
            cols = per_mu[mu]
            if cols is None:
                continue
            vc = cols.valuation(a)
            if vc != INFINITY:
                vals.append((mu, vc + mono_v[mu]))
        if not any(v < m * N for _, v in vals):
            report.low_term_found = False
            report.failures.append(("no low term", a))
        if len({v for _, v in vals}) != len(vals):
            report.distinct = False
            report.failures.append(("repeated valuation", a))
        for mu, v in vals:
            if tuple(recover_exponent(v, qi) for qi in q) != mu:
                report.exponents_recovered = False
                report.failures.append(("exponent recovery", a, mu))
        if vcols is None or vcols.valuation(a) == INFINITY:
            report.nonzero = False
            report.failures.append(("zero value", a))
    return report


# --- certificate audit ----------------------------------------------------------------


@dataclass
class AuditReport:
    checks: list = field(default_factory=list)

    def check(self, name: str, ok: bool, detail: str = ""):
        self.checks.append((name, bool(ok), detail))
        return ok

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(ok for _, ok, _ in self.checks)

    def failures(self):
        return [(n, d) for n, ok, d in self.checks if not ok]


def parse_basis(obj, ctx: PrimeContext, d: int, r: int, where: str = "basis") -> SubspaceBasis:
    from .series import series_from_json

    if not isinstance(obj, list) or not obj:
        raise SchemaError("expected a nonempty list of basis elements", where)
    elements = []
    for i, e in enumerate(obj):
        ew = f"{where}[{i}]"
        if isinstance(e, dict):
            e = [e]
        if not isinstance(e, list) or len(e) != r:
            raise SchemaError(f"expected {r} component series", ew)
        elements.append(tuple(series_from_json(f, ctx, d, f"{ew}[{k}]") for k, f in enumerate(e)))
    return SubspaceBasis(tuple(elements))


def _int(obj, key):
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, int):
        raise SchemaError(f"'{key}' must be an integer", key)
    return val


def verify_certificate(cert: dict) -> AuditReport:
    """Re-derive every field of a certificate; pass iff all agree."""
    rep = AuditReport()
    try:
        _audit(cert, rep)
    except (SchemaError, KeyError, TypeError, ValueError, ArithmeticError, IndexError) as exc:
        rep.check("well-formed", False, f"{type(exc).__name__}: {exc}")
    return rep


def _audit(cert: dict, rep: AuditReport):
    if not isinstance(cert, dict):
        raise SchemaError("certificate must be a JSON object")
    rep.check("format", cert.get("format") == FORMAT, str(cert.get("format")))
    ctx = PrimeContext(_int(cert, "p"), _int(cert, "D"))
    d, r, n = _int(cert, "d"), _int(cert, "r"), _int(cert, "n")
    basis = parse_basis(cert["basis"], ctx, d, r)
    rep.check("basis digest", basis_digest(cert["basis"]) == cert.get("basis_sha256"))
    rep.check("basis canonical", basis_to_json(basis) == cert["basis"])
    rep.check("n", basis.n == n, f"{basis.n} != {n}")

    parts = decompose(basis)
    levels = cert["levels"]
    if not rep.check("level count", isinstance(levels, list) and len(levels) == len(parts)):
        return
    center = None
    prev_vals = None
    N_floor = 1
    for idx, (part, lj) in enumerate(zip(parts, levels)):
        tag = f"level {idx}"
        lb = level_series(part, center)
        series = lb.scalars()
        rep.check(f"{tag} integrality exponent", lj["integrality_exponent"] == lb.integrality_exponent)
        rep.check(
            f"{tag} integral coefficients",
            all(valuation(c) >= 0 for f in series for _, c in f.terms),
        )
        m = _int(lj, "m")
        indep = truncation_rank(lb, m) == lb.n if m >= 1 else False
        minimal = m == 1 or truncation_rank(lb, m - 1) < lb.n
        rep.check(f"{tag} truncations independent at m", indep)
        rep.check(f"{tag} m minimal", minimal and m == minimal_m(lb))
        tails = [f.tail for f in series if f.tail is not None]
        if tails:
            rep.check(f"{tag} m within trusted degree", m <= min(tails) + 1)
        M = monomials_below(m, d) if m >= 1 else ()
        rep.check(f"{tag} monomial set", lj["M"] == [list(mu) for mu in M])
        t = [truncate_vector(e, m) for e in lb.elements]
        A = Fraction(lj["A"]) if isinstance(lj["A"], str) else None
        rep.check(f"{tag} A", A is not None and A == bound_A(expand(t, support_only=True)), str(lj["A"]))
        q = lj["q"]
        q_ok = (
            isinstance(q, list)
            and len(q) == d
            and all(isinstance(x, int) and not isinstance(x, bool) for x in q)
        )
        rep.check(f"{tag} q shape", q_ok)
        if not q_ok:
            return
        rep.check(f"{tag} q prime", all(is_prime(x) for x in q))
        rep.check(f"{tag} q distinct", len(set(q)) == len(q))
        rep.check(f"{tag} q > m", all(x > m for x in q))
        rep.check(f"{tag} q coprime to D", all(ctx_D(series) % x for x in q))
        rep.check(f"{tag} q smallest admissible", q == choose_primes(m, ctx_D(series), d))
        N = _int(lj, "N")
        if A is None or N < 1:
            rep.check(f"{tag} N", False)
            return
        rep.check(f"{tag} N inequality", all(n_inequality(m, N, A, x) for x in q))
        rep.check(f"{tag} N minimal", N == choose_N(m, A, q, N_floor))
        region = TorusRegion(ctx.p, N, tuple(q), math.lcm(ctx_D(series), math.prod(q)))
        offset = region.witness()
        vals = region.valuations()
        if prev_vals is not None:
            rep.check(f"{tag} nested inside previous level", all(v > w for v, w in zip(vals, prev_vals)))
        table = valuation_table(series, M, offset)
        expected = [[{"exp": list(mu), "v": format_valuation(v)} for mu, v in row] for row in table]
        rep.check(f"{tag} valuation table", lj["table"] == expected)
        rep.check(f"{tag} distinct valuations", all(len({v for _, v in row}) == len(row) for row in table))
        rep.check(
            f"{tag} exponents recoverable",
            all(tuple(recover_exponent(v, x) for x in q) == mu for row in table for mu, v in row),
        )
        rep.check(f"{tag} high-degree bound", check_high_degree_bound(series, m, N, offset) if lb.exact else True)
        center = offset if center is None else _add_points(center, offset)
        prev_vals = vals
        N_floor = N + 1
        rep.check(f"{tag} keys", set(lj) == {"integrality_exponent", "m", "M", "A", "q", "N", "table"})

    u = lift_point(center, common_D(center))
    witness = [element_from_json(x, None, f"witness[{i}]") for i, x in enumerate(cert["witness"])]
    rep.check("witness", tuple(witness) == tuple(u))
    rep.check("witness text", cert.get("witness_text") == [format_element(x) for x in u])
    rep.check("D_witness", cert["D_witness"] == common_D(u))
    rank = value_matrix_rank(basis, u)
    rep.check("rank_check recomputed", cert["rank_check"] == rank, f"{cert['rank_check']} vs {rank}")
    rep.check("rank_check = n", rank == n)
    rep.check(
        "top-level keys",
        set(cert)
        == {"format", "p", "D", "d", "r", "n", "basis", "basis_sha256", "levels", "witness", "witness_text", "D_witness", "rank_check"},
    )


def ctx_D(series) -> int:
    return series[0].ctx.D


def _add_points(u, w):
    from .series import point_add

    return point_add(u, w)
