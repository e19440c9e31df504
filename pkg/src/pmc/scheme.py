"""Replicated-database retrieval of one monomial out of ``mu`` candidates.

Query structure
---------------
Messages are split into ``lam = n**mu`` subpackets. From every database
the user downloads ``mu`` blocks; a *row* of block ``b`` assigns one
subpacket label to each ``(b-1)``-subset ``T`` of functions, and the row
holds one symbol per ``b``-subset ``S``::

    y_S = sum over u in S of  sign * phi_u(X^(label[S - {u}]))

Labels of sets ``T`` avoiding the desired index ``v`` are fresh; labels of
sets containing ``v`` are copied from a row of block ``b-1`` at another
database (entry ``T - {v}``), so the interference in ``y_S`` with
``v in S`` is exactly a symbol downloaded elsewhere. Every label is fresh
exactly once, giving one evaluation of ``phi_v`` per subpacket.

User randomness is a uniform permutation of the labels onto subpacket
indices and one uniform sign per label. Every label seen by a single
database is distinct, so each database sees a uniformly random injective
labelling in a fixed, ``v``-independent layout.

Within a row the symbols are linear (in the discrete-log domain) in the
vectors ``A x^(T)``, which span a rank-``r`` space. Symbols whose subset
lies inside the rows outside a fixed basis of ``A`` are therefore
reconstructible and are flagged so the multiplicative scheme skips them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .entropy import MonomialSet
from .ffield import FiniteField, make_field
from .intlinalg import integer_relation, rank_int

PIR = "pir"
MULTIPLICATIVE = "multiplicative"


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator; all protocol randomness derives from ``seed``."""
    return np.random.Generator(np.random.Philox(key=int(seed) % 2**64))


@dataclass(frozen=True)
class SchemeConfig:
    n: int
    monomials: MonomialSet
    field: FiniteField

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"need at least 2 databases, got n={self.n}")

    @property
    def mu(self) -> int:
        return self.monomials.mu

    @property
    def f(self) -> int:
        return self.monomials.f

    @property
    def lam(self) -> int:
        return self.n**self.mu

    @property
    def r(self) -> int:
        return self.monomials.rank

    @cached_property
    def dependent_functions(self) -> frozenset[int]:
        """Rows of ``A`` outside the greedy (first-come) basis."""
        return frozenset(_dependent_rows(self.monomials.degree_matrix))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "degree_matrix": [list(r) for r in self.monomials.degree_matrix],
            "p": self.field.p,
            "k": self.field.k,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SchemeConfig":
        return cls(data["n"], MonomialSet(data["degree_matrix"]), make_field(data["p"], data["k"]))


@lru_cache(maxsize=None)
def _dependent_rows(A: tuple) -> tuple[int, ...]:
    basis: list[int] = []
    dependent = []
    for i in range(len(A)):
        if rank_int([A[k] for k in basis + [i]]) == len(basis) + 1:
            basis.append(i)
        else:
            dependent.append(i)
    return tuple(dependent)


# -- canonical (label-level) structure -----------------------------------------


@dataclass(frozen=True)
class _Row:
    db: int
    block: int
    labels: dict  # (b-1)-subset T -> label
    source: Optional[int]  # row id whose symbols are this row's side information


@dataclass(frozen=True)
class _Structure:
    rows: tuple[_Row, ...]
    symbols: tuple[tuple[tuple[int, tuple[int, ...]], ...], ...]  # per db: (row id, S)
    fresh: dict  # label -> (row id, T) where the label is fresh


@lru_cache(maxsize=256)
def _structure(n: int, mu: int, v: int) -> _Structure:
    rows: list[_Row] = []
    by_db_block: dict[tuple[int, int], list[int]] = {}
    fresh: dict[int, tuple[int, tuple]] = {}
    counter = 0
    for b in range(1, mu + 1):
        for d in range(n):
            ids = []
            if b == 1:
                sources = [None]
            else:
                sources = [s for d2 in range(n) if d2 != d for s in by_db_block[(d2, b - 1)]]
            for src in sources:
                labels = {}
                for T in combinations(range(mu), b - 1):
                    if v in T:
                        labels[T] = rows[src].labels[tuple(t for t in T if t != v)]
                    else:
                        labels[T] = counter
                        fresh[counter] = (len(rows), T)
                        counter += 1
                ids.append(len(rows))
                rows.append(_Row(d, b, labels, src))
            by_db_block[(d, b)] = ids
    assert counter == n**mu
    symbols = tuple(
        tuple(
            (rid, S)
            for b in range(1, mu + 1)
            for rid in by_db_block[(d, b)]
            for S in combinations(range(mu), b)
        )
        for d in range(n)
    )
    return _Structure(tuple(rows), symbols, fresh)


# -- queries ---------------------------------------------------------------------


@dataclass(frozen=True)
class SymbolRequest:
    """One requested symbol: ``(function, subpacket, sign)`` terms."""

    terms: tuple[tuple[int, int, int], ...]
    redundant: bool = False


@dataclass(frozen=True)
class DatabaseQuery:
    blocks: tuple[tuple[SymbolRequest, ...], ...]

    def requests(self):
        for block in self.blocks:
            yield from block

    def block_counts(self) -> list[int]:
        return [len(b) for b in self.blocks]

    def redundant_counts(self) -> list[int]:
        return [sum(1 for s in b if s.redundant) for b in self.blocks]

    def fingerprint(self) -> tuple:
        return tuple(tuple((s.terms, s.redundant) for s in b) for b in self.blocks)

    def to_list(self) -> list:
        return [[{"terms": [list(t) for t in s.terms], "redundant": s.redundant} for s in b] for b in self.blocks]

    @classmethod
    def from_list(cls, data: list) -> "DatabaseQuery":
        return cls(tuple(
            tuple(SymbolRequest(tuple(tuple(t) for t in s["terms"]), s["redundant"]) for s in b)
            for b in data
        ))


@dataclass(frozen=True)
class UserRandomness:
    permutation: tuple[int, ...]  # label -> subpacket index
    signs: tuple[int, ...]  # label -> +1 / -1

    @classmethod
    def draw(cls, lam: int, rng: np.random.Generator) -> "UserRandomness":
        perm = rng.permutation(lam)
        signs = rng.integers(0, 2, size=lam) * 2 - 1
        return cls(tuple(int(x) for x in perm), tuple(int(x) for x in signs))


def build_queries(
    config: SchemeConfig, v: int, randomness: UserRandomness
) -> tuple[tuple[DatabaseQuery, ...], tuple[DatabaseQuery, ...]]:
    """PIR and PLC query sets for desired index ``v`` under fixed randomness."""
    if not 0 <= v < config.mu:
        raise ValueError(f"desired index {v} out of range [0, {config.mu})")
    st = _structure(config.n, config.mu, v)
    K = config.dependent_functions
    perm, signs = randomness.permutation, randomness.signs
    pir, plc = [], []
    for d in range(config.n):
        blocks_pir: list[list[SymbolRequest]] = [[] for _ in range(config.mu)]
        blocks_plc: list[list[SymbolRequest]] = [[] for _ in range(config.mu)]
        for rid, S in st.symbols[d]:
            row = st.rows[rid]
            terms = []
            for u in S:
                label = row.labels[tuple(t for t in S if t != u)]
                terms.append((u, perm[label], signs[label]))
            terms = tuple(terms)
            blocks_pir[row.block - 1].append(SymbolRequest(terms))
            blocks_plc[row.block - 1].append(SymbolRequest(terms, set(S) <= K))
        pir.append(DatabaseQuery(tuple(map(tuple, blocks_pir))))
        plc.append(DatabaseQuery(tuple(map(tuple, blocks_plc))))
    return tuple(pir), tuple(plc)


def gen_queries(config: SchemeConfig, v: int, rng_seed: int):
    """Draw user randomness from ``rng_seed`` and build both query sets."""
    rand = UserRandomness.draw(config.lam, make_rng(rng_seed))
    return build_queries(config, v, rand)


# -- storage and answers ---------------------------------------------------------


class Storage:
    """Subpackets ``X[i, j]`` (message i, subpacket j), replicated at every database."""

    def __init__(self, data: np.ndarray, config: SchemeConfig):
        data = np.asarray(data, dtype=np.int64)
        if data.shape != (config.f, config.lam):
            raise ValueError(f"storage must be {config.f} x {config.lam}, got {data.shape}")
        self.data = data
        self.config = config

    @classmethod
    def random(cls, config: SchemeConfig, rng: np.random.Generator) -> "Storage":
        return cls(rng.integers(0, config.field.q, size=(config.f, config.lam)), config)

    @property
    def has_zero(self) -> bool:
        return bool((self.data == 0).any())

    @cached_property
    def evaluations(self) -> np.ndarray:
        """``phi[u, j]`` for every function u and subpacket j."""
        F = self.config.field
        A = np.array(self.config.monomials.degree_matrix, dtype=np.int64)
        logs = np.where(self.data == 0, 0, F.log_table[self.data])
        zero = self.data == 0
        used = A != 0
        dead = (used[:, :, None] & zero[None, :, :]).any(axis=1)
        l = (A @ logs) % (F.q - 1) if F.q > 2 else np.zeros((A.shape[0], self.data.shape[1]), np.int64)
        vals = F.exp_table[l]
        return np.where(dead, 0, vals)

    def evaluate(self, u: int) -> list[int]:
        return [int(x) for x in self.evaluations[u]]


@dataclass(frozen=True)
class Answer:
    symbols: tuple[int, ...]
    mode: str


def answer_pir(query: DatabaseQuery, storage: Storage) -> Answer:
    """Every request answered with its signed sum over F_q (flags ignored)."""
    F = storage.config.field
    phi = storage.evaluations
    out = []
    for req in query.requests():
        acc = 0
        for u, j, s in req.terms:
            x = int(phi[u, j])
            acc = F.add(acc, x if s > 0 else F.neg(x))
        out.append(acc)
    return Answer(tuple(out), PIR)


def answer_mult(query: DatabaseQuery, storage: Storage) -> Answer:
    """Products with exponents +-1 in place of signed sums; flagged requests skipped."""
    if storage.has_zero:
        raise ValueError("multiplicative answers need nonzero subpackets; use PIR mode")
    F = storage.config.field
    phi = storage.evaluations
    order = F.q - 1
    out = []
    for req in query.requests():
        if req.redundant:
            continue
        l = sum(s * int(F.log_table[phi[u, j]]) for u, j, s in req.terms)
        out.append(F.exp(l % order))
    return Answer(tuple(out), MULTIPLICATIVE)


def dispatch(storage: Storage) -> str:
    """Multiplicative iff no stored subpacket is zero and mu > r."""
    cfg = storage.config
    if not storage.has_zero and cfg.mu > cfg.r:
        return MULTIPLICATIVE
    return PIR


def respond(config: SchemeConfig, storage: Storage, pir_queries, plc_queries) -> list[Answer]:
    """All databases reply per the dispatch rule (identical at every database)."""
    mode = dispatch(storage)
    if mode == MULTIPLICATIVE:
        return [answer_mult(q, storage) for q in plc_queries]
    return [answer_pir(q, storage) for q in pir_queries]


def infer_mode(config: SchemeConfig, answers: Sequence[Answer]) -> str:
    """Which branch answered, judged only from response sizes and (r, mu)."""
    full = config.n * sum(math.comb(config.mu, b) * (config.n - 1) ** (b - 1) for b in range(1, config.mu + 1))
    total = sum(len(a.symbols) for a in answers)
    return PIR if total == full or config.mu == config.r else MULTIPLICATIVE


# -- decoding --------------------------------------------------------------------


class DecodeFailure(Exception):
    """The multiplicative answers do not pin down a suppressed symbol."""


def _forms(A: tuple, n: int, st: _Structure) -> dict:
    """Integer form of every symbol over variables (label, message)."""
    f = len(A[0])
    lam = n ** len(A)
    out = {}
    for d in range(n):
        for rid, S in st.symbols[d]:
            vec = [0] * (lam * f)
            labels = st.rows[rid].labels
            for u in S:
                base = labels[tuple(t for t in S if t != u)] * f
                for k in range(f):
                    vec[base + k] += A[u][k]
            out[(rid, S)] = vec
    return out


@lru_cache(maxsize=256)
def _relations(n: int, A: tuple, v: int, dependent: frozenset) -> dict:
    """For each suppressed symbol: (delta, [(symbol, coeff), ...]) or None."""
    st = _structure(n, len(A), v)
    forms = _forms(A, n, st)
    known = [key for key in forms if not set(key[1]) <= dependent]
    rows = [forms[k] for k in known]
    rel = {}
    for key, vec in forms.items():
        if set(key[1]) <= dependent:
            found = integer_relation(rows, vec)
            if found is None:
                rel[key] = None
            else:
                delta, coeffs = found
                rel[key] = (delta, [(k, c) for k, c in zip(known, coeffs) if c])
    return rel


def _received(config: SchemeConfig, st: _Structure, answers: Sequence[Answer], mode: str) -> dict:
    K = config.dependent_functions
    got = {}
    for d, ans in enumerate(answers):
        keys = [k for k in st.symbols[d] if mode == PIR or not set(k[1]) <= K]
        if len(keys) != len(ans.symbols):
            raise ValueError(f"database {d} answered {len(ans.symbols)} symbols, expected {len(keys)}")
        got.update(zip(keys, ans.symbols))
    return got


def decode_answers(
    config: SchemeConfig, v: int, randomness: UserRandomness, answers: Sequence[Answer]
) -> list[int]:
    """Recover ``phi_v`` on every subpacket from the databases' answers.

    Raises :class:`DecodeFailure` when a suppressed symbol is only fixed up
    to a root ambiguity modulo ``q - 1``.
    """
    F = config.field
    st = _structure(config.n, config.mu, v)
    mode = infer_mode(config, answers)
    y = _received(config, st, answers, mode)

    if mode == MULTIPLICATIVE:
        order = F.q - 1
        logs = {k: int(F.log_table[val]) for k, val in y.items()}
        rel = _relations(config.n, config.monomials.degree_matrix, v, config.dependent_functions)
        for key, entry in rel.items():
            if entry is None:
                raise DecodeFailure(f"symbol {key} is not determined by the answers")
            delta, terms = entry
            if math.gcd(delta, order) != 1:
                raise DecodeFailure(f"relation for {key} needs a {delta}-th root modulo {order}")
            acc = sum(c * logs[k] for k, c in terms)
            logs[key] = acc * pow(delta, -1, order) % order
        combine = lambda a, b: (a - b) % order  # noqa: E731
        unsign = lambda x, s: x if s > 0 else (-x) % order  # noqa: E731
        finish = lambda x: F.exp(x)  # noqa: E731
        values = logs
    else:
        combine = F.sub
        unsign = lambda x, s: x if s > 0 else F.neg(x)  # noqa: E731
        finish = lambda x: x  # noqa: E731
        values = y

    out = [0] * config.lam
    for label, (rid, T) in st.fresh.items():
        row = st.rows[rid]
        S = tuple(sorted(T + (v,)))
        val = values[(rid, S)]
        if row.source is not None:
            val = combine(val, values[(row.source, T)])
        out[randomness.permutation[label]] = finish(unsign(val, randomness.signs[label]))
    return out


# -- transcripts -----------------------------------------------------------------


@dataclass
class Transcript:
    config: SchemeConfig
    storage_seed: int
    v: int
    user_seed: int
    pir_queries: tuple
    plc_queries: tuple
    answers: list
    mode: str
    decoded: Optional[list[int]]
    per_db_downloads: list[int]
    failure: Optional[str] = None

    @property
    def download(self) -> int:
        return sum(self.per_db_downloads)

    @property
    def upload(self) -> int:
        # both query sets travel; recorded for transparency, excluded from rate
        return sum(sum(q.block_counts()) for q in self.pir_queries) * 2

    def to_dict(self) -> dict:
        F = self.config.field
        return {
            "config": self.config.to_dict(),
            "storage_seed": str(self.storage_seed),
            "user_seed": str(self.user_seed),
            "v": self.v,
            "mode": self.mode,
            "per_db_downloads": self.per_db_downloads,
            "download": self.download,
            "upload_requests": self.upload,
            "failure": self.failure,
            "decoded": None if self.decoded is None else [F.format(x) for x in self.decoded],
            "answers": [[F.format(x) for x in a.symbols] for a in self.answers],
            "pir_queries": [q.to_list() for q in self.pir_queries],
            "plc_queries": [q.to_list() for q in self.plc_queries],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "Transcript":
        config = SchemeConfig.from_dict(data["config"])
        F = config.field
        mode = data["mode"]
        return cls(
            config,
            int(data["storage_seed"]),
            data["v"],
            int(data["user_seed"]),
            tuple(DatabaseQuery.from_list(q) for q in data["pir_queries"]),
            tuple(DatabaseQuery.from_list(q) for q in data["plc_queries"]),
            [Answer(tuple(F.parse(x) for x in a), mode) for a in data["answers"]],
            mode,
            None if data["decoded"] is None else [F.parse(x) for x in data["decoded"]],
            list(data["per_db_downloads"]),
            data["failure"],
        )

    @classmethod
    def from_json(cls, text: str) -> "Transcript":
        return cls.from_dict(json.loads(text))


def decode(transcript: Transcript) -> list[int]:
    """Recover F_v from a transcript; the user's randomness is re-derived from its seed."""
    cfg = transcript.config
    rand = UserRandomness.draw(cfg.lam, make_rng(transcript.user_seed))
    return decode_answers(cfg, transcript.v, rand, transcript.answers)


def run_protocol(config: SchemeConfig, v: int, storage_seed: int, user_seed: int) -> Transcript:
    """One full run: queries, dispatch, answers, decode."""
    storage = Storage.random(config, make_rng(storage_seed))
    rand = UserRandomness.draw(config.lam, make_rng(user_seed))
    pir_q, plc_q = build_queries(config, v, rand)
    answers = respond(config, storage, pir_q, plc_q)
    mode = answers[0].mode
    try:
        decoded, failure = decode_answers(config, v, rand, answers), None
    except DecodeFailure as exc:
        decoded, failure = None, str(exc)
    return Transcript(
        config, storage_seed, v, user_seed, pir_q, plc_q, answers, mode, decoded,
        [len(a.symbols) for a in answers], failure,
    )
