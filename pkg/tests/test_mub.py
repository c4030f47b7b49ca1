import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wotrolab.gf import field_new
from wotrolab.mub import all_pairs, conjugate_basis, mub_basis, mub_overlap_audit, mub_vector

from oracles import mub_amplitudes, ref_field


def test_vector_examples():
    F = field_new(3, 1)
    w = np.exp(2j * np.pi / 3)
    assert np.allclose(mub_vector(F, 0, 0).amps, np.ones(3) / np.sqrt(3))
    assert np.allclose(mub_vector(F, 0, 1).amps, np.array([1, w, w * w]) / np.sqrt(3))


@pytest.mark.parametrize("p,n", [(3, 1), (3, 2), (5, 1), (3, 3)])
def test_vectors_match_closed_form(p, n):
    F, R = field_new(p, n), ref_field(p, n)
    q = F.order
    for a in range(q):
        M = mub_basis(F, a).matrix
        for u in range(q):
            assert np.allclose(M[:, u], mub_amplitudes(R, a, u), atol=1e-12)


def test_zero_basis_is_fourier_at_n1():
    for p in (3, 5, 7):
        F = field_new(p, 1)
        x = np.arange(p)
        dft = np.exp(2j * np.pi * np.outer(x, x) / p) / np.sqrt(p)
        assert np.allclose(mub_basis(F, 0).matrix, dft)


def test_unbiased_small():
    F = field_new(3, 1)
    assert mub_overlap_audit(F, all_pairs(F)) <= 1e-10


def test_unbiased_n2_a0_a1():
    F = field_new(3, 2)
    assert mub_overlap_audit(F, [(0, 1)]) <= 1e-9


def test_unbiased_n2_random_pairs(rng):
    F = field_new(3, 2)
    pairs = all_pairs(F)
    pick = rng.choice(len(pairs), size=10, replace=False)
    assert mub_overlap_audit(F, [pairs[i] for i in pick]) <= 1e-9


def test_same_index_rejected():
    with pytest.raises(ValueError):
        mub_overlap_audit(field_new(3, 1), [(1, 1)])


def test_sampled_audit_needs_rng(rng):
    F = field_new(3, 2)
    with pytest.raises(ValueError):
        mub_overlap_audit(F, [(0, 1)], sampling=50)
    assert mub_overlap_audit(F, [(0, 1)], sampling=50, rng=rng) <= 1e-9


@pytest.mark.parametrize("p,n", [(3, 1), (3, 2), (3, 3), (5, 1), (5, 2)])
def test_every_basis_unitary(p, n):
    F = field_new(p, n)
    for a in range(F.order):
        assert mub_basis(F, a).unitarity_gap() <= 1e-8


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([(3, 3), (5, 2), (7, 1)]), st.data())
def test_pairwise_unbiased_property(pn, data):
    F = field_new(*pn)
    a = data.draw(st.integers(0, F.order - 1))
    b = data.draw(st.integers(0, F.order - 1).filter(lambda v: v != a))
    G = mub_basis(F, a).matrix.conj().T @ mub_basis(F, b).matrix
    assert np.max(np.abs(np.abs(G) ** 2 - 1 / F.order)) <= 1e-9


def test_conjugate_basis_correlates():
    F = field_new(3, 2)
    phi = np.eye(9).reshape(-1) / 3
    for a in (0, 4, 8):
        M = mub_basis(F, a).matrix
        joint = np.abs(np.kron(conjugate_basis(F, a), M).conj().T @ phi) ** 2
        joint = joint.reshape(9, 9)
        assert np.allclose(joint, np.eye(9) / 9, atol=1e-12)
