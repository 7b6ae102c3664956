"""Exact rational linear algebra over the coordinate expansion of K_D-vectors.

A vector ``(t_1, ..., t_s)`` of K_D elements becomes the rational row whose
entry at column ``(k, j)`` is the ``p^(j/D)``-coordinate of ``t_k``.  The
column weight ``j/D`` makes the valuation of the vector recoverable:

    v(t) = min over columns of (v_p(entry) + weight).

Rank over Q equals rank over Q_p because the entries are rational.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from typing import Sequence

from .errors import InputError, NotIndependent
from .field_tower import INFINITY, FieldElement, vp

Matrix = list[list[Fraction]]


@dataclass(frozen=True)
class ExpandedMatrix:
    """``rows[i][c]`` is the rational coordinate of vector ``i`` at ``columns[c] = (k, j)``."""

    p: int
    D: int
    s: int
    rows: tuple[tuple[Fraction, ...], ...]
    columns: tuple[tuple[int, int], ...]

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def weights(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(j, self.D) for _, j in self.columns)

    def support(self) -> tuple[int, ...]:
        """Indices of columns holding at least one nonzero entry."""
        return tuple(c for c in range(len(self.columns)) if any(r[c] for r in self.rows))

    def as_lists(self) -> Matrix:
        return [list(r) for r in self.rows]


def expand(vectors: Sequence[Sequence[FieldElement]], *, support_only: bool = False, p=None, D=None) -> ExpandedMatrix:
    """Expand ``n`` K_D-vectors of length ``s`` into an ``n x (s*D)`` rational matrix.

    With ``support_only`` only columns that are nonzero somewhere are kept,
    which is what the solver uses once D gets large.
    """
    vectors = [tuple(v) for v in vectors]
    if not vectors:
        return ExpandedMatrix(p or 0, D or 1, 0, (), ())
    s = len(vectors[0])
    ctx = None
    for v in vectors:
        if len(v) != s:
            raise InputError("vectors have different lengths")
        for x in v:
            if ctx is None:
                ctx = x.ctx
            elif x.ctx != ctx:
                raise InputError(f"context mismatch: {ctx} vs {x.ctx}")
    if ctx is None:
        # all vectors have length 0
        return ExpandedMatrix(p or 0, D or 1, 0, tuple(() for _ in vectors), ())
    if support_only:
        cols = sorted({(k, j) for v in vectors for k, x in enumerate(v) for j, _ in x.terms})
    else:
        cols = [(k, j) for k in range(s) for j in range(ctx.D)]
    index = {c: i for i, c in enumerate(cols)}
    rows = []
    for v in vectors:
        row = [Fraction(0)] * len(cols)
        for k, x in enumerate(v):
            for j, a in x.terms:
                row[index[(k, j)]] = a
        rows.append(tuple(row))
    return ExpandedMatrix(ctx.p, ctx.D, s, tuple(rows), tuple(cols))


def _as_matrix(M) -> Matrix:
    if isinstance(M, ExpandedMatrix):
        return M.as_lists()
    return [[Fraction(x) for x in row] for row in M]


def _integer_rows(rows: Matrix) -> list[list[int]]:
    out = []
    for row in rows:
        den = lcm(*(x.denominator for x in row)) if row else 1
        out.append([int(x * den) for x in row])
    return out


def bareiss_pivots(M) -> list[int]:
    """Pivot columns of ``M`` by fraction-free (Bareiss) elimination.

    Rows are first scaled to integers, which does not change the rank.
    Pivots are taken as the first nonzero entry in column order.
    """
    A = _integer_rows(_as_matrix(M))
    if not A:
        return []
    nrows, ncols = len(A), len(A[0])
    pivots = []
    prev = 1
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        piv = next((i for i in range(r, nrows) if A[i][c] != 0), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        for i in range(r + 1, nrows):
            for k in range(c + 1, ncols):
                A[i][k] = (A[r][c] * A[i][k] - A[i][c] * A[r][k]) // prev
            A[i][c] = 0
        prev = A[r][c]
        pivots.append(c)
        r += 1
    return pivots


def rank_over_prime_field(M) -> int:
    return len(bareiss_pivots(M))


def _normalize(vec: list[Fraction]) -> tuple[Fraction, ...]:
    den = lcm(*(x.denominator for x in vec))
    ints = [int(x * den) for x in vec]
    g = 0
    for x in ints:
        g = gcd(g, x)
    lead = next(x for x in ints if x)
    sign = -1 if lead < 0 else 1
    return tuple(Fraction(sign * x // g) for x in ints)


def kernel_basis(M) -> list[tuple[Fraction, ...]]:
    """Basis of ``{a in Q^n : sum a_i row_i = 0}``.

    Eliminates on ``[M | I]``; rows whose left part vanishes carry the
    kernel vectors.  Each vector is returned as a primitive integer vector
    whose first nonzero entry is positive.
    """
    A = _as_matrix(M)
    n = len(A)
    if n == 0:
        return []
    ncols = len(A[0])
    aug = [A[i] + [Fraction(int(i == k)) for k in range(n)] for i in range(n)]
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, n) if aug[i][c] != 0), None)
        if piv is None:
            continue
        aug[r], aug[piv] = aug[piv], aug[r]
        pr = aug[r]
        for i in range(n):
            if i != r and aug[i][c] != 0:
                f = aug[i][c] / pr[c]
                aug[i] = [x - f * y for x, y in zip(aug[i], pr)]
        r += 1
        if r == n:
            break
    return [_normalize(row[ncols:]) for row in aug[r:]]


def solve_square(A: Matrix, b: Sequence[Fraction]) -> list[Fraction]:
    """Solve ``A x = b`` for square invertible ``A`` by Gauss-Jordan elimination."""
    n = len(A)
    aug = [list(map(Fraction, A[i])) + [Fraction(b[i])] for i in range(n)]
    for c in range(n):
        piv = next((i for i in range(c, n) if aug[i][c] != 0), None)
        if piv is None:
            raise NotIndependent("singular matrix")
        aug[c], aug[piv] = aug[piv], aug[c]
        pr = aug[c]
        inv = 1 / pr[c]
        pr = aug[c] = [x * inv for x in pr]
        for i in range(n):
            if i != c and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], pr)]
    return [row[n] for row in aug]


def _inverse(A: Matrix) -> Matrix:
    n = len(A)
    aug = [list(A[i]) + [Fraction(int(i == k)) for k in range(n)] for i in range(n)]
    for c in range(n):
        piv = next((i for i in range(c, n) if aug[i][c] != 0), None)
        if piv is None:
            raise NotIndependent("singular matrix")
        aug[c], aug[piv] = aug[piv], aug[c]
        inv = 1 / aug[c][c]
        pr = aug[c] = [x * inv for x in aug[c]]
        for i in range(n):
            if i != c and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], pr)]
    return [row[n:] for row in aug]


def left_inverse(M) -> Matrix:
    """``B`` of shape ``(#columns) x n`` with ``M B = I_n`` exactly.

    Uses the pivot columns of the row echelon form: ``B`` is the
    inverse of the square pivot submatrix placed in the pivot rows, zero
    elsewhere.  Raises NotIndependent when ``M`` lacks full row rank.
    """
    A = _as_matrix(M)
    n = len(A)
    ncols = len(A[0]) if A else 0
    pivots = bareiss_pivots(A)
    if len(pivots) < n:
        raise NotIndependent(f"rank {len(pivots)} < {n}: vectors are Q_p-dependent")
    # pivot columns of the echelon form are the first maximal independent column set
    cols = pivots
    sub = [[A[i][c] for c in cols] for i in range(n)]
    inv = _inverse(sub)
    B = [[Fraction(0)] * n for _ in range(ncols)]
    for a, c in enumerate(cols):
        B[c] = list(inv[a])
    return B


def matmul(A: Matrix, B: Matrix) -> Matrix:
    return [[sum((a * b for a, b in zip(row, col)), Fraction(0)) for col in zip(*B)] for row in A]


def min_valuation(B: Matrix, p: int):
    """Minimum p-adic valuation over the nonzero entries of ``B``."""
    return min((vp(x, p) for row in B for x in row if x != 0), default=INFINITY)


def bound_A(M: ExpandedMatrix) -> Fraction:
    """A rational strictly above every ``v(sum a_i t_i)`` with ``a in Z_p^n - (pZ_p)^n``.

    ``A = max support weight - min v_p(B) + 1`` where ``B = left_inverse(M)``.
    If ``y = a M`` then ``a = y B`` so ``0 = min v(a_i) >= min v(y) + min v(B)``;
    the weighted valuation of ``y`` is at most ``min v(y) + max weight``.
    """
    support = M.support()
    if M.n == 0:
        raise NotIndependent("no vectors")
    sub = [[row[c] for c in support] for row in M.rows]
    B = left_inverse(sub)
    weights = M.weights
    wmax = max((weights[c] for c in support), default=Fraction(0))
    return wmax - min_valuation(B, M.p) + 1


def weighted_valuation(row: Sequence[Fraction], weights: Sequence[Fraction], p: int):
    return min((vp(x, p) + w for x, w in zip(row, weights) if x != 0), default=INFINITY)
