import pytest
from hypothesis import given, settings, strategies as st
from sympy.polys.domains import ZZ
from sympy.polys.galoistools import gf_irreducible_p, gf_mul, gf_rem

from pmc.ffield import (
    FiniteField,
    field_arith,
    make_field,
    parse_field_spec,
)

GRID = [2, 3, 4, 5, 7, 8, 9, 11, 13, 16, 25, 27, 32, 49, 64, 81, 101, 128]


def _pk(q):
    return parse_field_spec(str(q))


def sympy_mul(F, a, b):
    # independent product: sympy's dense GF(p)[x] arithmetic, high degree first
    pa = list(reversed(F.to_coeffs(a)))
    pb = list(reversed(F.to_coeffs(b)))
    mod = list(reversed(F.modulus))
    r = gf_rem(gf_mul(pa, pb, F.p, ZZ), mod, F.p, ZZ)
    return F.from_coeffs(list(reversed(r)))


def test_small_fields():
    F2 = make_field(2)
    assert F2.generator == 1 and F2.dlog(1) == 0
    F5 = make_field(5)
    assert F5.generator == 2
    assert F5.mul(2, 3) == 1 and F5.inv(2) == 3
    F9 = make_field(3, 2)
    assert F9.modulus == (1, 0, 1)  # x^2 + 1
    for x in F9.nonzero():
        assert 0 <= F9.dlog(x) < 8
    g = F9.generator
    y, k = g, 1
    while y != 1:
        y, k = F9.mul(y, g), k + 1
    assert k == 8


def test_dlog_examples():
    for q in (4, 5, 9, 16):
        F = make_field(*_pk(q))
        assert F.dlog(1) == 0
        assert F.dlog(F.generator) == 1
        assert F.dlog(F.mul(F.generator, F.generator)) == 2
        assert F.inv(1) == 1
        assert all(F.pow(x, q - 1) == 1 for x in F.nonzero())
    with pytest.raises(ZeroDivisionError):
        make_field(7).dlog(0)
    with pytest.raises(ZeroDivisionError):
        make_field(7).inv(0)


@pytest.mark.parametrize("q", GRID)
def test_tables_are_bijective_and_modulus_canonical(q):
    p, k = _pk(q)
    F = make_field(p, k)
    assert sorted(F.exp_table.tolist()) == list(range(1, q))
    for l in range(q - 1):
        assert F.dlog(F.exp(l)) == l
    if k > 1:
        mod_hi = list(reversed(F.modulus))
        assert gf_irreducible_p(mod_hi, p, ZZ)
        # nothing lexicographically smaller (low degree first) is irreducible
        from itertools import product

        for low in product(range(p), repeat=k):
            if tuple(low) + (1,) == F.modulus:
                break
            assert not gf_irreducible_p([1] + list(reversed(low)), p, ZZ)


@pytest.mark.parametrize("q", [4, 8, 9, 16, 25, 27])
def test_multiplication_matches_polynomial_oracle(q):
    F = make_field(*_pk(q))
    for a in F.elements():
        for b in F.elements():
            assert F.mul(a, b) == sympy_mul(F, a, b)


@pytest.mark.parametrize("q", [4, 9, 25, 27])
def test_generator_is_smallest_primitive(q):
    F = make_field(*_pk(q))
    def order(x):
        y, k = x, 1
        while y != 1:
            y, k = F.mul(y, x), k + 1
        return k
    assert order(F.generator) == q - 1
    assert all(order(x) < q - 1 for x in range(2, F.generator))


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(GRID), st.data())
def test_dlog_homomorphism(q, data):
    F = make_field(*_pk(q))
    x = data.draw(st.integers(1, q - 1))
    y = data.draw(st.integers(1, q - 1))
    a = data.draw(st.integers(-20, 20))
    assert F.dlog(F.mul(x, y)) == (F.dlog(x) + F.dlog(y)) % (q - 1)
    assert F.dlog(F.pow(x, a)) == a * F.dlog(x) % (q - 1)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(GRID), st.data())
def test_additive_group(q, data):
    F = make_field(*_pk(q))
    x, y, z = (data.draw(st.integers(0, q - 1)) for _ in range(3))
    assert F.add(x, F.add(y, z)) == F.add(F.add(x, y), z)
    assert F.add(x, F.neg(x)) == 0
    assert F.sub(F.add(x, y), y) == x
    assert F.mul(x, F.add(y, z)) == F.add(F.mul(x, y), F.mul(x, z))


def test_determinism_and_encoding():
    a, b = FiniteField(3, 3), FiniteField(3, 3)
    assert (a.exp_table == b.exp_table).all() and a.modulus == b.modulus
    F = make_field(3, 2)
    assert F.format(4) == "1,1" and F.parse("1,1") == 4
    assert field_arith(F, "mul", 4, F.inv(4)) == 1
    with pytest.raises(ValueError):
        field_arith(F, "div", 1, 1)


def test_field_spec_parsing():
    assert parse_field_spec("3^2") == (3, 2)
    assert parse_field_spec("1024") == (2, 10)
    for bad in ("6", "4^1", "1", "2^0"):
        with pytest.raises(ValueError):
            parse_field_spec(bad)


def test_table_bound(monkeypatch):
    with pytest.raises(ValueError):
        FiniteField(2, 10, bound=512)
    monkeypatch.setenv("PMC_TABLE_BOUND", "100")
    with pytest.raises(ValueError):
        FiniteField(101)
    assert FiniteField(97).q == 97
