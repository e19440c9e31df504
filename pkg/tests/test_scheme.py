from math import comb

import numpy as np
import pytest

from pmc.entropy import MonomialSet
from pmc.ffield import make_field
from pmc.scheme import (
    MULTIPLICATIVE,
    PIR,
    DatabaseQuery,
    DecodeFailure,
    SchemeConfig,
    Storage,
    SymbolRequest,
    Transcript,
    UserRandomness,
    _relations,
    answer_mult,
    answer_pir,
    build_queries,
    decode,
    decode_answers,
    dispatch,
    gen_queries,
    infer_mode,
    make_rng,
    respond,
    run_protocol,
)

# one degree matrix per (mu, r)
MATRICES = {
    (1, 1): [[1]],
    (2, 1): [[1], [2]],
    (2, 2): [[1, 0], [0, 1]],
    (3, 1): [[1], [2], [3]],
    (3, 2): [[1, 0], [0, 1], [1, 1]],
    (3, 3): [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
}

A3 = [[1, 0], [0, 1], [1, 1]]


def cfg(A, n=2, q=(1031, 1)):
    return SchemeConfig(n, MonomialSet(A), make_field(*q))


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("mu,r", sorted(MATRICES))
def test_query_counts(n, mu, r):
    c = cfg(MATRICES[(mu, r)], n)
    assert c.r == r and c.lam == n**mu
    for v in range(mu):
        pir, plc = gen_queries(c, v, 7 + v)
        for qp, ql in zip(pir, plc):
            assert qp.block_counts() == [(n - 1) ** (b - 1) * comb(mu, b) for b in range(1, mu + 1)]
            assert ql.block_counts() == qp.block_counts()
            assert ql.redundant_counts() == [(n - 1) ** (b - 1) * comb(mu - r, b) for b in range(1, mu + 1)]
            assert not any(qp.redundant_counts())
            for b, (bp, bl) in enumerate(zip(qp.blocks, ql.blocks), start=1):
                for sp, sl in zip(bp, bl):
                    assert sp.terms == sl.terms
                    assert len({u for u, _, _ in sp.terms}) == b == len(sp.terms)
                    assert all(s in (1, -1) and 0 <= j < c.lam for _, j, s in sp.terms)


def test_download_totals():
    c = cfg(A3)
    tr = run_protocol(c, 0, 1, 2)
    assert tr.mode == MULTIPLICATIVE and tr.download == 12
    z = np.ones((c.f, c.lam), dtype=np.int64)
    z[0, 0] = 0
    pir, plc = gen_queries(c, 0, 2)
    answers = respond(c, Storage(z, c), pir, plc)
    assert sum(len(a.symbols) for a in answers) == 14
    one = cfg([[1]])
    assert run_protocol(one, 0, 1, 2).download == 2


def test_invalid_desired_index():
    with pytest.raises(ValueError):
        gen_queries(cfg(A3), 3, 0)
    with pytest.raises(ValueError):
        SchemeConfig(1, MonomialSet(A3), make_field(5))


def test_answer_examples():
    c = cfg(A3, q=(7, 1))
    F = c.field
    data = np.array([[3, 5, 2, 6, 1, 4, 3, 2], [2, 2, 5, 1, 6, 3, 4, 4]])
    st = Storage(data, c)
    phi = st.evaluations
    single = DatabaseQuery(((SymbolRequest(((1, 3, 1),)),),))
    assert answer_pir(single, st).symbols == (int(phi[1, 3]),)
    assert answer_mult(single, st).symbols == (int(phi[1, 3]),)
    pair = DatabaseQuery(((SymbolRequest(((0, 1, 1), (1, 2, -1))),),))
    assert answer_pir(pair, st).symbols == (F.sub(int(phi[0, 1]), int(phi[1, 2])),)
    triple = DatabaseQuery(((SymbolRequest(((0, 1, 1), (1, 2, 1), (2, 5, -1))),),))
    want = F.mul(F.mul(int(phi[0, 1]), int(phi[1, 2])), F.inv(int(phi[2, 5])))
    assert answer_mult(triple, st).symbols == (want,)
    flagged = DatabaseQuery(((SymbolRequest(((0, 1, 1),), redundant=True),),))
    assert answer_mult(flagged, st).symbols == ()
    assert answer_pir(flagged, st).symbols == (int(phi[0, 1]),)


def test_trivial_storages():
    c = cfg(A3, q=(5, 1))
    pir, plc = gen_queries(c, 1, 3)
    zero = Storage(np.zeros((2, 8), dtype=np.int64), c)
    assert all(set(answer_pir(q, zero).symbols) == {0} for q in pir)
    with pytest.raises(ValueError):
        answer_mult(plc[0], zero)
    ones = Storage(np.ones((2, 8), dtype=np.int64), c)
    assert all(set(answer_mult(q, ones).symbols) == {1} for q in plc)


def test_dispatch():
    c = cfg(A3, q=(5, 1))
    data = np.full((2, 8), 3)
    assert dispatch(Storage(data, c)) == MULTIPLICATIVE
    data[1, 4] = 0
    assert dispatch(Storage(data, c)) == PIR
    full = cfg([[1, 0], [0, 1]], q=(5, 1))
    assert dispatch(Storage(np.full((2, 4), 3), full)) == PIR


def test_relations_are_integral_for_sum_row():
    c = cfg(A3)
    for v in range(3):
        rel = _relations(c.n, c.monomials.degree_matrix, v, c.dependent_functions)
        assert rel and all(entry is not None and entry[0] == 1 for entry in rel.values())


@pytest.mark.parametrize(
    "A,n,q",
    [
        (A3, 2, (5, 1)),
        (A3, 2, (257, 1)),
        (A3, 3, (1031, 1)),
        ([[1], [2], [3]], 2, (17, 1)),
        ([[1, 2, 3], [2, 4, 6], [1, 1, 1]], 2, (1031, 1)),
        ([[2, 1], [1, 2]], 2, (2, 2)),
        ([[1, 1], [1, 0], [0, 1]], 2, (3, 2)),
    ],
)
def test_decode_matches_direct_evaluation(A, n, q):
    c = cfg(A, n, q)
    modes = set()
    for t in range(1000 if n == 2 else 200):
        v = t % c.mu
        tr = run_protocol(c, v, 10_000 + t, 20_000 + t)
        modes.add(tr.mode)
        if tr.mode == PIR:
            assert tr.decoded is not None
        if tr.decoded is not None:
            direct = Storage.random(c, make_rng(10_000 + t)).evaluate(v)
            assert tr.decoded == direct
            assert len(tr.decoded) == c.lam


def test_decode_failure_is_reported():
    # 3x = (3/2)(2x): recovering needs a square root modulo the even q - 1
    c = cfg([[2], [3]])
    tr = run_protocol(c, 0, 1, 2)
    assert tr.mode == MULTIPLICATIVE and tr.decoded is None and "root" in tr.failure
    with pytest.raises(DecodeFailure):
        decode(tr)


def test_mode_inference_from_sizes():
    c = cfg(A3)
    rand = UserRandomness.draw(c.lam, make_rng(4))
    pir, plc = build_queries(c, 2, rand)
    st = Storage.random(c, make_rng(5))
    mult = [answer_mult(q, st) for q in plc]
    add = [answer_pir(q, st) for q in pir]
    assert infer_mode(c, mult) == MULTIPLICATIVE and infer_mode(c, add) == PIR
    assert decode_answers(c, 2, rand, mult) == decode_answers(c, 2, rand, add) == st.evaluate(2)


def test_transcript_json_roundtrip_and_determinism():
    c = cfg(A3, q=(3, 2))
    a = run_protocol(c, 1, 99, 100)
    b = run_protocol(c, 1, 99, 100)
    assert a.to_json() == b.to_json()
    back = Transcript.from_json(a.to_json())
    assert back.to_json() == a.to_json()
    assert decode(back) == a.decoded
    assert run_protocol(c, 1, 99, 101).to_json() != a.to_json()


def test_dispatch_is_the_same_everywhere():
    c = cfg(A3, q=(5, 1))
    for seed in range(50):
        tr = run_protocol(c, seed % 3, seed, seed + 1)
        assert {a.mode for a in tr.answers} == {tr.mode}
