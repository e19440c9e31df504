"""Finite fields F_{p^k} with a tabulated discrete logarithm.

Elements are stored as ints: the coefficient vector ``(c_0, ..., c_{k-1})``
of ``c_0 + c_1 x + ... + c_{k-1} x^{k-1}`` read as base-``p`` digits, so
``0`` is the zero element and ``1`` is the identity. The modulus is the
lexicographically smallest monic irreducible polynomial (low-degree
coefficient compared first) and the generator is the primitive element
with the smallest encoding, so two constructions of the same field agree
table for table.
"""

from __future__ import annotations

import os
from functools import lru_cache
from itertools import product
from typing import Sequence

import numpy as np

DEFAULT_TABLE_BOUND = 2**22


def table_bound() -> int:
    env = os.environ.get("PMC_TABLE_BOUND")
    return int(env) if env else DEFAULT_TABLE_BOUND


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


def prime_factors(n: int) -> list[int]:
    out = []
    f = 2
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 1
    if n > 1:
        out.append(n)
    return out


def parse_field_spec(spec: str) -> tuple[int, int]:
    """Parse ``"p^k"`` (or a bare prime power like ``"9"``) into ``(p, k)``."""
    text = spec.strip()
    if "^" in text:
        p_txt, k_txt = text.split("^", 1)
        p, k = int(p_txt), int(k_txt)
    else:
        q = int(text)
        if q < 2:
            raise ValueError(f"not a prime power: {spec!r}")
        p = prime_factors(q)[0]
        k = 0
        while q % p == 0:
            q //= p
            k += 1
        if q != 1:
            raise ValueError(f"not a prime power: {spec!r}")
    if not is_prime(p) or k < 1:
        raise ValueError(f"not a prime power: {spec!r}")
    return p, k


# -- polynomials over F_p, coefficient lists low degree first -----------------


def _trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _polymod(a: list[int], m: list[int], p: int) -> list[int]:
    a = _trim([x % p for x in a])
    inv = pow(m[-1], -1, p)
    dm = len(m) - 1
    while len(a) - 1 >= dm:
        c = a[-1] * inv % p
        shift = len(a) - 1 - dm
        for i, mi in enumerate(m):
            a[shift + i] = (a[shift + i] - c * mi) % p
        _trim(a)
    return a


def _polymulmod(a: list[int], b: list[int], m: list[int], p: int) -> list[int]:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _polymod(out, m, p)


def _polypowmod(a: list[int], e: int, m: list[int], p: int) -> list[int]:
    result = [1]
    base = _polymod(a, m, p)
    while e:
        if e & 1:
            result = _polymulmod(result, base, m, p)
        base = _polymulmod(base, base, m, p)
        e >>= 1
    return result


def _polygcd(a: list[int], b: list[int], p: int) -> list[int]:
    a, b = _trim(list(a)), _trim(list(b))
    while b:
        a, b = b, _polymod(a, b, p)
    return a


def is_irreducible(poly: Sequence[int], p: int) -> bool:
    """Rabin's test for a monic polynomial over F_p."""
    f = [x % p for x in poly]
    k = len(f) - 1
    if k < 1:
        return False
    if k == 1:
        return True
    x = [0, 1]
    if _polypowmod(x, p**k, f, p) != _polymod(x, f, p):
        return False
    for l in prime_factors(k):
        h = _polypowmod(x, p ** (k // l), f, p) + [0, 0]
        h[1] -= 1  # h - x
        if len(_polygcd(f, _trim([c % p for c in h]), p)) != 1:
            return False
    return True


def smallest_irreducible(p: int, k: int) -> tuple[int, ...]:
    for low in product(range(p), repeat=k):
        poly = list(low) + [1]
        if low[0] == 0:
            continue
        # a root in F_p means a linear factor; cheap to rule out first
        if p <= 64 and any(
            sum(c * pow(a, i, p) for i, c in enumerate(poly)) % p == 0 for a in range(1, p)
        ):
            continue
        if is_irreducible(poly, p):
            return tuple(poly)
    raise RuntimeError(f"no irreducible polynomial of degree {k} over F_{p}")


class FiniteField:
    """The field F_q, q = p^k, with exp/log tables for a fixed generator."""

    def __init__(self, p: int, k: int = 1, *, bound: int | None = None):
        if not is_prime(p):
            raise ValueError(f"p={p} is not prime")
        if k < 1:
            raise ValueError(f"extension degree must be positive, got {k}")
        bound = table_bound() if bound is None else bound
        q = p**k
        if q > bound:
            raise ValueError(f"field size q={q} exceeds table bound {bound}")
        self.p, self.k, self.q = p, k, q
        self.modulus = smallest_irreducible(p, k) if k > 1 else (0, 1)
        self._weights = np.array([p**i for i in range(k)], dtype=np.int64)
        self.generator = self._find_generator()
        self.exp_table = self._build_exp_table()
        log = np.zeros(q, dtype=np.int64)
        log[self.exp_table] = np.arange(q - 1, dtype=np.int64)
        log[0] = -1
        self.log_table = log
        self.exp_table.setflags(write=False)
        self.log_table.setflags(write=False)

    def __repr__(self) -> str:
        return f"FiniteField(p={self.p}, k={self.k})"

    def __eq__(self, other) -> bool:
        return isinstance(other, FiniteField) and (self.p, self.k) == (other.p, other.k)

    def __hash__(self) -> int:
        return hash((self.p, self.k))

    @property
    def order(self) -> int:
        """Order of the multiplicative group, q - 1."""
        return self.q - 1

    # -- encoding -------------------------------------------------------------

    def to_coeffs(self, x: int) -> tuple[int, ...]:
        out = []
        for _ in range(self.k):
            x, c = divmod(x, self.p)
            out.append(c)
        return tuple(out)

    def from_coeffs(self, coeffs: Sequence[int]) -> int:
        if len(coeffs) > self.k:
            raise ValueError(f"too many coefficients for F_{self.q}")
        return sum((c % self.p) * self.p**i for i, c in enumerate(coeffs))

    def format(self, x: int) -> str:
        """Canonical text form: coefficients low degree first, comma separated."""
        return ",".join(str(c) for c in self.to_coeffs(x))

    def parse(self, text: str) -> int:
        return self.from_coeffs([int(c) for c in text.split(",")])

    # -- construction helpers -------------------------------------------------

    def _poly(self, x: int) -> list[int]:
        return _trim(list(self.to_coeffs(x)))

    def _slow_mul(self, a: int, b: int) -> int:
        prod = _polymulmod(self._poly(a), self._poly(b), list(self.modulus), self.p)
        return self.from_coeffs(prod)

    def _slow_pow(self, a: int, e: int) -> int:
        return self.from_coeffs(
            _polypowmod(self._poly(a), e, list(self.modulus), self.p)
        )

    def _find_generator(self) -> int:
        if self.q == 2:
            return 1
        n = self.q - 1
        factors = prime_factors(n)
        for g in range(2, self.q):
            if all(self._slow_pow(g, n // l) != 1 for l in factors):
                return g
        raise RuntimeError("multiplicative group has no generator")  # unreachable

    def _mul_matrix(self, g: int) -> np.ndarray:
        """k x k matrix over F_p of x -> g*x in the polynomial basis (row vectors)."""
        rows = [self.to_coeffs(self._slow_mul(g, self.p**i)) for i in range(self.k)]
        return np.array(rows, dtype=np.int64)

    def _build_exp_table(self) -> np.ndarray:
        n = self.q - 1
        if self.k == 1:
            out = np.empty(n, dtype=np.int64)
            x = 1
            for i in range(n):
                out[i] = x
                x = x * self.generator % self.p
            return out
        # doubling: exp[i + 2^t] = exp[i] * g^(2^t), each step one linear map
        digits = np.zeros((n, self.k), dtype=np.int64)
        digits[0, 0] = 1
        filled = 1
        step = self.generator
        while filled < n:
            take = min(filled, n - filled)
            M = self._mul_matrix(step)
            digits[filled : filled + take] = (digits[:take] @ M) % self.p
            filled += take
            step = self._slow_mul(step, step)
        return digits @ self._weights

    # -- arithmetic -----------------------------------------------------------

    def exp(self, l: int) -> int:
        return int(self.exp_table[l % (self.q - 1)])

    def dlog(self, x: int) -> int:
        """Discrete logarithm base ``generator``; undefined at zero."""
        if x == 0:
            raise ZeroDivisionError("dlog(0) is undefined")
        return int(self.log_table[x])

    def add(self, a: int, b: int) -> int:
        if self.k == 1:
            return (a + b) % self.p
        if self.p == 2:
            return a ^ b
        out, w = 0, 1
        while a or b:
            a, da = divmod(a, self.p)
            b, db = divmod(b, self.p)
            out += ((da + db) % self.p) * w
            w *= self.p
        return out

    def neg(self, a: int) -> int:
        if self.k == 1:
            return -a % self.p
        if self.p == 2:
            return a
        return self.from_coeffs([-c for c in self.to_coeffs(a)])

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.neg(b))

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return int(self.exp_table[(self.log_table[a] + self.log_table[b]) % (self.q - 1)])

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("zero has no inverse")
        return int(self.exp_table[(-self.log_table[a]) % (self.q - 1)])

    def pow(self, a: int, e: int) -> int:
        if a == 0:
            if e < 0:
                raise ZeroDivisionError("negative power of zero")
            return 1 if e == 0 else 0
        return int(self.exp_table[(self.log_table[a] * e) % (self.q - 1)])

    def elements(self) -> range:
        return range(self.q)

    def nonzero(self) -> range:
        return range(1, self.q)


@lru_cache(maxsize=64)
def make_field(p: int, k: int = 1) -> FiniteField:
    """Build (and memoize) F_{p^k}."""
    return FiniteField(p, k)


def field_arith(field: FiniteField, op: str, *operands: int) -> int:
    """Dispatch ``add``/``sub``/``mul``/``inv``/``pow`` by name."""
    ops = {"add": field.add, "sub": field.sub, "mul": field.mul, "inv": field.inv, "pow": field.pow}
    if op not in ops:
        raise ValueError(f"unknown field operation {op!r}")
    return ops[op](*operands)


def field_from_spec(spec: str) -> FiniteField:
    return make_field(*parse_field_spec(spec))


def field_from_q(q: int) -> FiniteField:
    return make_field(*parse_field_spec(str(q)))
