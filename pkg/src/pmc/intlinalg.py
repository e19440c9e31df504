"""Exact integer linear algebra.

Minors and their gcds, Smith normal form with unimodular witnesses, and
rank over Z, Z_m and F_p. Matrices are plain nested sequences of Python
ints; results use tuples so they can be hashed and cached.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from itertools import combinations
from math import gcd
from typing import Optional, Sequence

Matrix = tuple[tuple[int, ...], ...]

# above this many k x k submatrices, g_k comes from the SNF product identity
_MINOR_ENUMERATION_LIMIT = 20_000


def as_matrix(A: Sequence[Sequence[int]]) -> Matrix:
    """Validate and freeze ``A`` into a tuple-of-tuples of ints."""
    rows = tuple(tuple(int(x) for x in row) for row in A)
    if not rows or not rows[0]:
        raise ValueError("matrix must have positive dimensions")
    t = len(rows[0])
    if any(len(r) != t for r in rows):
        raise ValueError("ragged matrix: all rows must have the same length")
    return rows


def shape(A: Matrix) -> tuple[int, int]:
    return len(A), len(A[0])


def identity(n: int) -> list[list[int]]:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def matmul(A: Sequence[Sequence[int]], B: Sequence[Sequence[int]]) -> list[list[int]]:
    cols = list(zip(*B))
    return [[sum(a * b for a, b in zip(row, col)) for col in cols] for row in A]


def determinant(A: Sequence[Sequence[int]]) -> int:
    """Determinant of a square integer matrix (fraction-free Bareiss)."""
    M = [list(r) for r in A]
    n = len(M)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if M[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if M[i][k] != 0), None)
            if swap is None:
                return 0
            M[k], M[swap] = M[swap], M[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) // prev
        prev = M[k][k]
    return sign * M[n - 1][n - 1]


def minors(A: Matrix, k: int):
    """Yield every k x k minor of ``A``."""
    s, t = shape(A)
    for rows in combinations(range(s), k):
        for cols in combinations(range(t), k):
            yield determinant([[A[i][j] for j in cols] for i in rows])


def minors_gcd(A: Sequence[Sequence[int]], k: int) -> int:
    """gcd of all k x k minors of ``A`` (gcd of all zeros is 0)."""
    A = as_matrix(A)
    s, t = shape(A)
    if not 1 <= k <= min(s, t):
        raise ValueError(f"k={k} out of range [1, {min(s, t)}]")
    from math import comb

    if comb(s, k) * comb(t, k) > _MINOR_ENUMERATION_LIMIT:
        d = smith_normal_form(A).invariant_factors
        return reduce(lambda x, y: x * y, d[:k], 1)
    g = 0
    for m in minors(A, k):
        g = gcd(g, m)
        if g == 1:
            break
    return g


@dataclass(frozen=True)
class SmithDecomposition:
    """``D = P @ A @ Q`` with ``P``, ``Q`` unimodular and ``D`` diagonal."""

    D: Matrix
    P: Matrix
    Q: Matrix
    invariant_factors: tuple[int, ...]

    @property
    def rank(self) -> int:
        return sum(1 for d in self.invariant_factors if d != 0)


def smith_normal_form(A: Sequence[Sequence[int]]) -> SmithDecomposition:
    """Smith normal form by elementary row/column operations.

    The pivot is always the nonzero entry of least absolute value in the
    trailing submatrix; row operations are mirrored into ``P`` and column
    operations into ``Q`` so the transforms stay unimodular.
    """
    A = as_matrix(A)
    s, t = shape(A)
    M = [list(r) for r in A]
    P = identity(s)
    Q = identity(t)

    def swap_rows(i, j):
        M[i], M[j] = M[j], M[i]
        P[i], P[j] = P[j], P[i]

    def swap_cols(i, j):
        for row in M:
            row[i], row[j] = row[j], row[i]
        for row in Q:
            row[i], row[j] = row[j], row[i]

    def add_row(dst, src, c):
        # row_dst += c * row_src
        M[dst] = [a + c * b for a, b in zip(M[dst], M[src])]
        P[dst] = [a + c * b for a, b in zip(P[dst], P[src])]

    def add_col(dst, src, c):
        for row in M:
            row[dst] += c * row[src]
        for row in Q:
            row[dst] += c * row[src]

    for k in range(min(s, t)):
        while True:
            best = None
            for i in range(k, s):
                for j in range(k, t):
                    v = M[i][j]
                    if v and (best is None or abs(v) < abs(M[best[0]][best[1]])):
                        best = (i, j)
            if best is None:
                break
            swap_rows(k, best[0])
            swap_cols(k, best[1])
            piv = M[k][k]
            clean = True
            for i in range(k + 1, s):
                if M[i][k]:
                    add_row(i, k, -(M[i][k] // piv))
                    clean = clean and M[i][k] == 0
            for j in range(k + 1, t):
                if M[k][j]:
                    add_col(j, k, -(M[k][j] // piv))
                    clean = clean and M[k][j] == 0
            if not clean:
                continue
            offender = next(
                (i for i in range(k + 1, s) for j in range(k + 1, t) if M[i][j] % piv),
                None,
            )
            if offender is None:
                break
            add_row(k, offender, 1)
        if M[k][k] < 0:
            M[k] = [-x for x in M[k]]
            P[k] = [-x for x in P[k]]

    factors = tuple(M[i][i] for i in range(min(s, t)))
    freeze = lambda X: tuple(tuple(r) for r in X)  # noqa: E731
    return SmithDecomposition(freeze(M), freeze(P), freeze(Q), factors)


def rank_int(A: Sequence[Sequence[int]]) -> int:
    """Rank over Z (equivalently over Q)."""
    return smith_normal_form(A).rank


def rank_mod(A: Sequence[Sequence[int]], m: int) -> int:
    """Largest k such that some k x k minor of ``A`` is nonzero modulo ``m``.

    This is the literal minors definition, not the free-module rank. Some
    k-minor is nonzero mod m exactly when m does not divide g_k, and
    g_k = d_1 ... d_k, so the SNF gives the answer without enumeration.
    """
    if m <= 1:
        raise ValueError(f"modulus must be > 1, got {m}")
    d = smith_normal_form(A).invariant_factors
    r, g = 0, 1
    for k, dk in enumerate(d, start=1):
        g *= dk
        if g % m:
            r = k
    return r


def rank_mod_prime(A: Sequence[Sequence[int]], p: int) -> int:
    """Rank of ``A`` reduced mod the prime ``p`` by Gaussian elimination."""
    M = [[x % p for x in row] for row in as_matrix(A)]
    s, t = len(M), len(M[0])
    r = 0
    for c in range(t):
        piv = next((i for i in range(r, s) if M[i][c]), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = pow(M[r][c], -1, p)
        M[r] = [x * inv % p for x in M[r]]
        for i in range(s):
            if i != r and M[i][c]:
                f = M[i][c]
                M[i] = [(a - f * b) % p for a, b in zip(M[i], M[r])]
        r += 1
        if r == s:
            break
    return r


def rank_ffield(A: Sequence[Sequence[int]], field) -> int:
    """Rank of the integer matrix ``A`` viewed over F_q.

    Integers embed in the prime subfield, so elimination mod the
    characteristic suffices.
    """
    return rank_mod_prime(A, field.p)


def integer_relation(
    rows: Sequence[Sequence[int]], target: Sequence[int]
) -> Optional[tuple[int, tuple[int, ...]]]:
    """Smallest ``delta > 0`` and integer ``c`` with ``c @ rows == delta * target``.

    Returns ``None`` when ``target`` is outside the rational span of
    ``rows``. ``delta == 1`` means ``target`` lies in the integer span.
    """
    target = [int(x) for x in target]
    if not rows:
        return (1, ()) if not any(target) else None
    snf = smith_normal_form(rows)
    z = [sum(a * q[j] for a, q in zip(target, snf.Q)) for j in range(len(target))]
    d = snf.invariant_factors
    r = snf.rank
    if any(z[i] for i in range(r, len(z))):
        return None
    delta = 1
    for i in range(r):
        need = d[i] // gcd(d[i], z[i])
        delta = delta * need // gcd(delta, need)
    cprime = [delta * z[i] // d[i] for i in range(r)] + [0] * (len(rows) - r)
    c = tuple(
        sum(cprime[i] * snf.P[i][j] for i in range(len(rows))) for j in range(len(rows))
    )
    return delta, c


def integer_row_dependency(
    A: Sequence[Sequence[int]], i: int
) -> Optional[tuple[int, ...]]:
    """Integer coefficients expressing row ``i`` (0-based) via the others.

    Returns ``c`` (one entry per remaining row, in order) with
    ``A[i] == sum(c[j] * other[j])``, or ``None`` if row ``i`` is not in
    the integer span of the other rows.
    """
    A = as_matrix(A)
    if not 0 <= i < len(A):
        raise IndexError(f"row index {i} out of range")
    others = [r for k, r in enumerate(A) if k != i]
    rel = integer_relation(others, A[i])
    if rel is None or rel[0] != 1:
        return None
    return rel[1]
