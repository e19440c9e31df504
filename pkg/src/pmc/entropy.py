"""Entropies of linear maps over Z_m and of monomials over F_q.

Every closed form here is paired with an enumeration oracle
(``empirical_*`` / ``h_mono_set_bruteforce``) that counts outcomes
directly, so the formulas can be checked against ground truth.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass
from functools import cached_property, reduce
from itertools import product
from typing import Iterable, Optional, Sequence

import numpy as np

from .ffield import FiniteField
from .intlinalg import (
    Matrix,
    as_matrix,
    minors_gcd,
    rank_ffield,
    smith_normal_form,
)

DEFAULT_ENUMERATION_BOUND = 10**7


@dataclass(frozen=True)
class EntropyResult:
    value_bits: float
    value_qary: Optional[float] = None
    method: str = "formula"
    exact: bool = True

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "EntropyResult":
        return cls(**data)


def _result(bits: float, field_or_q=None, method: str = "formula") -> EntropyResult:
    bits = max(0.0, float(bits))
    if field_or_q is None:
        return EntropyResult(bits, None, method)
    q = field_or_q.q if isinstance(field_or_q, FiniteField) else int(field_or_q)
    return EntropyResult(bits, bits / math.log2(q), method)


def entropy_of_counts(counts: Iterable[int]) -> float:
    """Shannon entropy (bits) of the distribution proportional to ``counts``."""
    c = np.asarray(list(counts) if not isinstance(counts, np.ndarray) else counts, dtype=np.float64)
    c = c[c > 0]
    total = c.sum()
    if total == 0:
        return 0.0
    p = c / total
    return float(-(p * np.log2(p)).sum())


def binary_entropy(pi: float) -> float:
    if not 0.0 <= pi <= 1.0:
        raise ValueError(f"probability out of range: {pi}")
    if pi in (0.0, 1.0):
        return 0.0
    return -pi * math.log2(pi) - (1 - pi) * math.log2(1 - pi)


# -- linear functions over Z_m -------------------------------------------------


def _check_modulus(m: int) -> None:
    if m <= 1:
        raise ValueError(f"modulus must be > 1, got {m}")


def h_lin_single(a: int, m: int) -> EntropyResult:
    """H(aY) for Y uniform on Z_m: log m - log gcd(a, m)."""
    _check_modulus(m)
    return _result(math.log2(m) - math.log2(math.gcd(a, m)))


def h_lin_vec(A: Sequence[Sequence[int]], m: int) -> EntropyResult:
    """H(A Y) for Y uniform on Z_m^t, from the invariant factors of A.

    Evaluated both as a sum over the Z-rank and over the invariant factors
    not divisible by m; the two agree because gcd(d_i, m) = m past the
    latter. The minors rank over Z_m can be smaller than that count
    (A = [[2, 4], [6, 8]], m = 8), so it is not used here.
    """
    _check_modulus(m)
    d = smith_normal_form(A).invariant_factors
    r = sum(1 for x in d if x)
    via_z = r * math.log2(m) - sum(math.log2(math.gcd(x, m)) for x in d[:r])
    r_m = sum(1 for x in d if x % m)
    via_zm = r_m * math.log2(m) - sum(math.log2(math.gcd(x, m)) for x in d[:r_m])
    if abs(via_z - via_zm) > 1e-9:
        raise AssertionError(f"rank-r and rank-r' forms disagree: {via_z} vs {via_zm}")
    return _result(via_z)


def h_lin_bounds(A: Sequence[Sequence[int]], m: int) -> tuple[float, float]:
    """Bounds ``(r log m - log g_r, r log m)`` on H(A Y), valid once m > d_r."""
    _check_modulus(m)
    snf = smith_normal_form(A)
    r = snf.rank
    if r == 0:
        return 0.0, 0.0
    d_r = snf.invariant_factors[r - 1]
    if m <= d_r:
        raise ValueError(f"bounds need m > d_r = {d_r}, got m={m}")
    g_r = reduce(lambda x, y: x * y, snf.invariant_factors[:r], 1)
    return r * math.log2(m) - math.log2(g_r), r * math.log2(m)


def empirical_h_lin(A: Sequence[Sequence[int]], m: int) -> float:
    """Enumerate A y over all y in Z_m^t and return the image entropy."""
    A = np.array(as_matrix(A), dtype=np.int64)
    s, t = A.shape
    ys = np.array(list(product(range(m), repeat=t)), dtype=np.int64)
    images = (ys @ A.T) % m
    codes = images @ (m ** np.arange(s, dtype=np.int64))
    _, counts = np.unique(codes, return_counts=True)
    return entropy_of_counts(counts)


def empirical_h_lin_single(a: int, m: int) -> float:
    return entropy_of_counts(Counter(a * y % m for y in range(m)).values())


# -- monomials over F_q ---------------------------------------------------------


class MonomialSet:
    """Monomials ``prod_k X_k^{A[i][k]}``, one per row of the degree matrix."""

    def __init__(self, degree_matrix: Sequence[Sequence[int]]):
        A = as_matrix(degree_matrix)
        if any(not any(row) for row in A):
            raise ValueError("degree matrix has a zero row (constant monomial)")
        self.degree_matrix: Matrix = A

    def __repr__(self) -> str:
        return f"MonomialSet({[list(r) for r in self.degree_matrix]})"

    def __eq__(self, other) -> bool:
        return isinstance(other, MonomialSet) and self.degree_matrix == other.degree_matrix

    def __hash__(self) -> int:
        return hash(self.degree_matrix)

    @property
    def mu(self) -> int:
        return len(self.degree_matrix)

    @property
    def f(self) -> int:
        return len(self.degree_matrix[0])

    @cached_property
    def snf(self):
        return smith_normal_form(self.degree_matrix)

    @property
    def rank(self) -> int:
        return self.snf.rank

    @property
    def invariant_factors(self) -> tuple[int, ...]:
        return self.snf.invariant_factors

    @cached_property
    def g_r(self) -> int:
        r = self.rank
        return minors_gcd(self.degree_matrix, r) if r else 0

    def evaluate(self, field: FiniteField, i: int, x: Sequence[int]) -> int:
        """Value of monomial ``i`` at ``x``; zero whenever a used variable is zero."""
        row = self.degree_matrix[i]
        if any(a and xk == 0 for a, xk in zip(row, x)):
            return 0
        l = sum(a * int(field.log_table[xk]) for a, xk in zip(row, x) if a)
        return field.exp(l)


def h_mono_single(a: Sequence[int], field: FiniteField) -> EntropyResult:
    """Entropy of a single monomial with exponent vector ``a``.

    With tau nonzero exponents and pi = (1 - 1/q)^tau (the chance that no
    used variable is zero), H = h(pi) + pi log((q-1)/gcd(a, q-1)).
    """
    q = field.q
    tau = sum(1 for x in a if x)
    pi = (1 - 1 / q) ** tau
    g = math.gcd(*[int(x) for x in a], q - 1)
    bits = binary_entropy(pi) + pi * math.log2((q - 1) / g)
    return _result(bits, field)


def _monomial_codes(A: np.ndarray, field: FiniteField, bound: int) -> np.ndarray:
    """Joint outcome code of all monomials for every input in F_q^f."""
    q = field.q
    mu, f = A.shape
    if q**f > bound:
        raise ValueError(f"enumeration of q^f = {q}^{f} inputs exceeds bound {bound}")
    n = q - 1
    # per-variable grids: is-zero flag and dlog (0 placeholder at zero)
    vals = np.arange(q, dtype=np.int64)
    logs = np.where(vals == 0, 0, field.log_table[vals])
    zero = vals == 0
    grids = np.meshgrid(*([vals] * f), indexing="ij")
    flat = [g.ravel() for g in grids]
    codes = np.zeros(q**f, dtype=np.int64)
    for i in range(mu):
        l = np.zeros(q**f, dtype=np.int64)
        z = np.zeros(q**f, dtype=bool)
        for k in range(f):
            a = int(A[i, k])
            if a:
                l = (l + a * logs[flat[k]]) % max(n, 1)
                z |= zero[flat[k]]
        m_code = np.where(z, 0, 1 + l)  # 0 encodes the field zero
        codes = codes * q + m_code
    return codes


def h_mono_set_bruteforce(
    ms: MonomialSet, field: FiniteField, bound: int = DEFAULT_ENUMERATION_BOUND
) -> EntropyResult:
    """Exact joint entropy of all monomials by enumerating F_q^f."""
    A = np.array(ms.degree_matrix, dtype=np.int64)
    if field.q ** ms.mu >= 2**62:
        raise ValueError("joint outcome code would overflow 64 bits")
    codes = _monomial_codes(A, field, bound)
    _, counts = np.unique(codes, return_counts=True)
    return _result(entropy_of_counts(counts), field, "brute_force")


def h_mono_set_decomposition(ms: MonomialSet, field: FiniteField) -> EntropyResult:
    """Joint monomial entropy by conditioning on which variables vanish.

    A zero pattern fixes which monomials are zero; the surviving monomials
    are uniform on the image of their degree rows over Z_{q-1}. Zero
    columns of those rows are irrelevant, so every pattern with the same
    monomial-zero-set yields the same image, and different zero-sets have
    disjoint supports. The mixture therefore splits exactly.
    """
    A = ms.degree_matrix
    q = field.q
    f = ms.f
    p0 = 1 / q
    groups: dict[frozenset, float] = {}
    for pattern in product((False, True), repeat=f):
        prob = 1.0
        for is_zero in pattern:
            prob *= p0 if is_zero else 1 - p0
        zero_rows = frozenset(
            i for i, row in enumerate(A) if any(a and z for a, z in zip(row, pattern))
        )
        groups[zero_rows] = groups.get(zero_rows, 0.0) + prob

    bits = entropy_of_counts(np.array(list(groups.values())))
    for zero_rows, prob in groups.items():
        alive = [row for i, row in enumerate(A) if i not in zero_rows]
        if alive and q > 2:
            bits += prob * h_lin_vec(alive, q - 1).value_bits
    return _result(bits, field, "decomposition")


def h_gap_mono_vs_lin(
    ms: MonomialSet, field: FiniteField, bound: int = DEFAULT_ENUMERATION_BOUND
) -> float:
    """|H_q(M) - H_q(L)| where L is the linear map over F_q with the same matrix.

    H_q(L) is just the rank over F_q. Requires p not dividing g_r(A), which
    is what makes that rank equal the integer rank.
    """
    if ms.g_r % field.p == 0:
        raise ValueError(
            f"characteristic p={field.p} divides g_r(A)={ms.g_r}; "
            "the monomial/linear entropy match needs p not dividing g_r"
        )
    h_lin_q = rank_ffield(ms.degree_matrix, field)
    if field.q**ms.f <= bound:
        h_m = h_mono_set_bruteforce(ms, field, bound).value_qary
    else:
        h_m = h_mono_set_decomposition(ms, field).value_qary
    return abs(h_m - h_lin_q)


def empirical_h_mono_single(a: Sequence[int], field: FiniteField) -> float:
    return h_mono_set_bruteforce(MonomialSet([list(a)]), field).value_bits if any(a) else 0.0


def rank_report(A: Sequence[Sequence[int]]) -> dict:
    snf = smith_normal_form(A)
    return {
        "rank": snf.rank,
        "invariant_factors": list(snf.invariant_factors),
        "g_r": minors_gcd(A, snf.rank) if snf.rank else 0,
    }
