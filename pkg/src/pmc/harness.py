"""Reference capacities, Monte-Carlo rate experiments and privacy audits."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass
from itertools import permutations, product
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import chi2_contingency

from .entropy import MonomialSet, h_mono_set_bruteforce, h_mono_single, DEFAULT_ENUMERATION_BOUND
from .ffield import FiniteField, field_from_q
from .scheme import (
    MULTIPLICATIVE,
    PIR,
    DatabaseQuery,
    SchemeConfig,
    UserRandomness,
    build_queries,
    make_rng,
    run_protocol,
)

N_BATCHES = 20

CSV_COLUMNS = ("q", "n", "mu", "r", "trials", "avg_cost", "rate", "c_pir_r", "failure_rate")


def c_pir(n: int, f: int) -> float:
    """PIR capacity (1 + 1/n + ... + 1/n^(f-1))^-1; also the PLC capacity with f = r."""
    if n < 2 or f < 1:
        raise ValueError(f"c_pir needs n >= 2 and f >= 1, got n={n}, f={f}")
    return 1.0 / sum(n**-i for i in range(f))


def predicted_avg_cost(n: int, mu: int, r: int, f: int, field: FiniteField) -> float:
    """Expected download in q-ary symbols: multiplicative with prob pi, PIR otherwise."""
    if r > mu:
        raise ValueError(f"rank r={r} exceeds mu={mu}")
    lam = n**mu
    pi = (1 - 1 / field.q) ** (lam * f)
    return lam * (pi / c_pir(n, r) + (1 - pi) / c_pir(n, mu)) if r else lam / c_pir(n, mu)


def min_function_entropy(ms: MonomialSet, field: FiniteField, lam: int) -> float:
    """lam * min_v H_q(phi_v), in q-ary units."""
    return lam * min(h_mono_single(row, field).value_qary for row in ms.degree_matrix)


def _batch_se(x: np.ndarray, batches: int = N_BATCHES) -> float:
    """Standard error of the mean by batch means (per-trial SE if too few trials)."""
    if len(x) < 2:
        return 0.0
    if len(x) < batches:
        return float(x.std(ddof=1) / math.sqrt(len(x)))
    means = np.array([b.mean() for b in np.array_split(x, batches)])
    return float(means.std(ddof=1) / math.sqrt(batches))


@dataclass
class ExperimentReport:
    config: dict
    trials: int
    empirical_avg_download_qary: float
    download_se: float
    min_func_entropy_qary: float
    empirical_rate: float
    rate_se: float
    mode_frequencies: dict
    decode_failure_rate: float
    avg_upload_requests: float
    reference: dict

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentReport":
        return cls(**data)

    def csv_row(self) -> dict:
        c = self.config
        return {
            "q": c["p"] ** c["k"],
            "n": c["n"],
            "mu": len(c["degree_matrix"]),
            "r": self.reference["r"],
            "trials": self.trials,
            "avg_cost": self.empirical_avg_download_qary,
            "rate": self.empirical_rate,
            "c_pir_r": self.reference["c_pir_r"],
            "failure_rate": self.decode_failure_rate,
        }


def run_experiment(config: SchemeConfig, trials: int, seed: int) -> ExperimentReport:
    """End-to-end runs with fresh uniform storage and uniform desired index.

    Per-trial seeds are drawn up front, so the report depends only on ``seed``.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    rng = make_rng(seed)
    storage_seeds = rng.integers(0, 2**64, size=trials, dtype=np.uint64)
    user_seeds = rng.integers(0, 2**64, size=trials, dtype=np.uint64)
    vs = rng.integers(0, config.mu, size=trials)

    downloads = np.empty(trials)
    uploads = np.empty(trials)
    modes = Counter()
    failures = 0
    for t in range(trials):
        tr = run_protocol(config, int(vs[t]), int(storage_seeds[t]), int(user_seeds[t]))
        downloads[t] = tr.download
        uploads[t] = tr.upload
        modes[tr.mode] += 1
        failures += tr.decoded is None

    avg = float(downloads.mean())
    se = _batch_se(downloads)
    h_min = min_function_entropy(config.monomials, config.field, config.lam)
    rate = h_min / avg
    return ExperimentReport(
        config=config.to_dict(),
        trials=trials,
        empirical_avg_download_qary=avg,
        download_se=se,
        min_func_entropy_qary=h_min,
        empirical_rate=rate,
        rate_se=rate * se / avg,
        mode_frequencies={m: modes[m] / trials for m in (PIR, MULTIPLICATIVE)},
        decode_failure_rate=failures / trials,
        avg_upload_requests=float(uploads.mean()),
        reference={
            "r": config.r,
            "c_pir_r": c_pir(config.n, config.r) if config.r else 1.0,
            "c_pir_mu": c_pir(config.n, config.mu),
            "predicted_cost": predicted_avg_cost(config.n, config.mu, config.r, config.f, config.field),
        },
    )


def convergence_study(
    degree_matrix: Sequence[Sequence[int]], n: int, q_grid: Sequence[int], trials: int, seed: int
) -> list[ExperimentReport]:
    """One experiment per field size, all driven by the same seed."""
    ms = MonomialSet(degree_matrix)
    return [run_experiment(SchemeConfig(n, ms, field_from_q(q)), trials, seed) for q in q_grid]


# -- privacy ---------------------------------------------------------------------

QueryBuilder = Callable[[SchemeConfig, int, UserRandomness], tuple]


def _plc_only(config: SchemeConfig, v: int, rand: UserRandomness) -> tuple:
    # the PLC set carries the PIR requests plus flags, so it is the whole view
    return build_queries(config, v, rand)[1]


def leaky_build_queries(config: SchemeConfig, v: int, rand: UserRandomness) -> tuple:
    """Negative control: block 1 is reordered so the desired function comes first."""
    out = []
    for q in _plc_only(config, v, rand):
        first = sorted(q.blocks[0], key=lambda s: s.terms[0][0] != v)
        out.append(DatabaseQuery((tuple(first),) + q.blocks[1:]))
    return tuple(out)


def _randomness_space(lam: int):
    for perm in permutations(range(lam)):
        for signs in product((1, -1), repeat=lam):
            yield UserRandomness(perm, signs)


@dataclass
class AuditResult:
    mode: str
    passed: bool
    samples: int
    # exhaustive: distinct queries per database; sampled: smallest p-value per database
    statistics: list
    tests_per_database: int = 1

    def to_dict(self) -> dict:
        return asdict(self)


def _layout(q: DatabaseQuery) -> tuple:
    """Function indices, flags and which positions share a subpacket."""
    seen: dict[int, int] = {}
    out = []
    for s in q.requests():
        out.append((s.redundant,) + tuple((u, seen.setdefault(j, len(seen))) for u, j, _ in s.terms))
    return tuple(out)


def _positions(q: DatabaseQuery) -> list[tuple[int, int]]:
    return [(j, sgn) for s in q.requests() for _, j, sgn in s.terms]


def _chi2_pvalue(tables: list[Counter]) -> float:
    cats = sorted(set().union(*tables), key=repr)
    if len(cats) < 2:
        return 1.0
    obs = np.array([[t.get(c, 0) for c in cats] for t in tables])
    return float(chi2_contingency(obs)[1])


def privacy_audit(
    config: SchemeConfig,
    mode: str = "exhaustive",
    budget: int = 10**6,
    alpha: float = 1e-3,
    seed: int = 0,
    builder: Optional[QueryBuilder] = None,
) -> AuditResult:
    """Compare each database's query distribution across desired indices.

    ``exhaustive`` enumerates every permutation and sign vector and demands
    identical multisets. ``sampled`` draws ``budget`` queries (uniform v) and
    runs chi-square homogeneity tests on the request layout and on the
    ``(subpacket, sign)`` value at every term position; the verdict applies a
    Bonferroni correction across those tests.
    """
    builder = builder or _plc_only
    lam, mu, n = config.lam, config.mu, config.n
    if mode == "exhaustive":
        space = math.factorial(lam) * 2**lam
        if space * mu > budget:
            raise ValueError(f"randomness space {space} x {mu} indices exceeds budget {budget}")
        dists = [[Counter() for _ in range(mu)] for _ in range(n)]
        for v in range(mu):
            for rand in _randomness_space(lam):
                for d, q in enumerate(builder(config, v, rand)):
                    dists[d][v][q.fingerprint()] += 1
        passed = all(all(dv == dists[d][0] for dv in dists[d]) for d in range(n))
        return AuditResult(mode, passed, space * mu, [len(dists[d][0]) for d in range(n)])
    if mode != "sampled":
        raise ValueError(f"unknown audit mode {mode!r}")

    rng = make_rng(seed)
    vs = rng.integers(0, mu, size=budget)
    layout = [[Counter() for _ in range(mu)] for _ in range(n)]
    positions: list[list[list[Counter]]] = [[] for _ in range(n)]
    for v in vs:
        v = int(v)
        rand = UserRandomness.draw(lam, rng)
        for d, q in enumerate(builder(config, v, rand)):
            layout[d][v][_layout(q)] += 1
            pos = _positions(q)
            while len(positions[d]) < len(pos):
                positions[d].append([Counter() for _ in range(mu)])
            for i, val in enumerate(pos):
                positions[d][i][v][val] += 1
    tests = 1 + max(len(p) for p in positions)
    stats = []
    for d in range(n):
        pvals = [_chi2_pvalue(layout[d])] + [_chi2_pvalue(t) for t in positions[d]]
        stats.append(min(pvals))
    passed = all(p * tests * n >= alpha for p in stats)
    return AuditResult(mode, passed, budget, stats, tests)


# -- two-function computation ------------------------------------------------------


def two_function_capacity(
    ms: MonomialSet, field: FiniteField, bound: int = DEFAULT_ENUMERATION_BOUND
) -> float:
    """2H / (H_joint + H) for two monomials of equal entropy H."""
    if ms.mu != 2:
        raise ValueError(f"two_function_capacity needs exactly 2 functions, got {ms.mu}")
    h1, h2 = (h_mono_single(row, field).value_bits for row in ms.degree_matrix)
    if abs(h1 - h2) > 1e-12:
        raise ValueError(f"single-function entropies differ ({h1} vs {h2})")
    joint = h_mono_set_bruteforce(ms, field, bound).value_bits
    return 2 * h1 / (joint + h1)
