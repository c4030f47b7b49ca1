import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wotrolab import errors
from wotrolab.gf import binary_field, field_arith, field_enumerate, field_new, field_trace, is_irreducible

from oracles import ref_field


FIELDS = [(3, 1), (3, 2), (3, 3), (5, 1), (5, 2), (7, 2)]


def test_prime_field_modulus():
    F = field_new(3, 1)
    assert F.order == 3
    assert F.modulus == (0, 1)


def test_explicit_modulus_x2_plus_1():
    F = field_new(3, 2, [1, 0, 1])
    assert F.modulus == (1, 0, 1)
    # no root in F_3
    assert all((x * x + 1) % 3 for x in range(3))


def test_rejects_even_and_composite():
    with pytest.raises(errors.EvenCharacteristic):
        field_new(2, 1)
    with pytest.raises(errors.NonPrime):
        field_new(9, 1)
    with pytest.raises(errors.ReducibleModulus):
        field_new(3, 2, [2, 0, 1])  # x^2 - 1
    with pytest.raises(errors.ReducibleModulus):
        field_new(3, 2, [1, 0, 2])  # not monic


@pytest.mark.parametrize("p,n", FIELDS)
def test_default_modulus_matches_reference(p, n):
    assert field_new(p, n).modulus == ref_field(p, n).mod


def test_irreducibility_against_brute_force():
    p, n = 3, 4
    F = ref_field(p, n)
    count = 0
    for tail in itertools.product(range(p), repeat=n):
        mod = tuple(reversed(tail)) + (1,)
        count += is_irreducible(mod, p)
    # number of monic irreducibles of degree 4 over F_3: (3^4 - 3^2) / 4
    assert count == (81 - 9) // 4
    assert is_irreducible(F.mod, p)


def test_inverse_and_mul_examples():
    F3 = field_new(3, 1)
    assert int(field_arith("inv", F3.from_int(2))) == 2
    F9 = field_new(3, 2, [1, 0, 1])
    t = F9.elem([0, 1])
    assert field_arith("mul", t, t + 1).coeffs == (2, 1)  # t + 2
    with pytest.raises(errors.ZeroInverse):
        F9.zero.inverse()
    with pytest.raises(errors.FieldMismatch):
        field_arith("add", t, F3.one)
    assert field_arith("pow", t, 4) == F9.one


def test_trace_examples():
    F9 = field_new(3, 2, [1, 0, 1])
    assert field_trace(F9.one) == 2
    assert field_trace(F9.elem([0, 1])) == 0
    F5 = field_new(5, 1)
    assert [field_trace(x) for x in F5.elements()] == [0, 1, 2, 3, 4]


def test_enumeration_order():
    assert [int(x) for x in field_enumerate(field_new(3, 1))] == [0, 1, 2]
    els = field_enumerate(field_new(3, 2))
    assert [x.coeffs for x in els[:5]] == [(0, 0), (1, 0), (2, 0), (0, 1), (1, 1)]
    assert len(field_enumerate(field_new(3, 3))) == 27


def test_too_large(monkeypatch):
    from wotrolab import config

    monkeypatch.setattr(config, "MAX_FIELD_SIZE", 100)
    with pytest.raises(errors.TooLarge):
        field_enumerate(field_new(3, 5))


@pytest.mark.parametrize("p,n", FIELDS)
def test_mul_table_matches_reference(p, n):
    F = field_new(p, n)
    R = ref_field(p, n)
    q = F.order
    ref = np.array([[R.index[R.mul(R.e(i), R.e(j))] for j in range(q)] for i in range(q)])
    assert np.array_equal(F.mul_table, ref)
    assert [field_trace(x) for x in F.elements()] == [R.trace(R.e(i)) for i in range(q)]


@pytest.mark.parametrize("p,n", FIELDS)
def test_trace_invariants_exhaustive(p, n):
    F = field_new(p, n)
    els = F.elements()
    tr = F.trace_table
    assert np.array_equal(np.bincount(tr, minlength=p), np.full(p, p ** (n - 1)))
    for x in els:
        assert field_trace(x**p) == field_trace(x)
        if not x.is_zero():
            assert x ** (F.order - 1) == F.one
            assert x * x.inverse() == F.one


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(FIELDS), st.data())
def test_trace_additive_and_linear(pn, data):
    F = field_new(*pn)
    i = data.draw(st.integers(0, F.order - 1))
    j = data.draw(st.integers(0, F.order - 1))
    k = data.draw(st.integers(0, F.p - 1))
    x, y = F.from_int(i), F.from_int(j)
    assert field_trace(x + y) == (field_trace(x) + field_trace(y)) % F.p
    assert field_trace(x * k) == field_trace(x) * k % F.p


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(FIELDS), st.data())
def test_ring_axioms(pn, data):
    F = field_new(*pn)
    x, y, z = (F.from_int(data.draw(st.integers(0, F.order - 1))) for _ in range(3))
    assert x * (y + z) == x * y + x * z
    assert (x * y) * z == x * (y * z)
    assert x - y + y == x


def test_json_and_binary_carve_out():
    assert field_new(3, 2).to_json() == {"p": 3, "n": 2, "modulus": [1, 0, 1]}
    B = binary_field(8)
    assert B.p == 2 and len(B.modulus) == 9
