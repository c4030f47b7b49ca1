import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wotrolab import errors, qsim
from wotrolab.mub import conjugate_basis, mub_basis
from wotrolab.gf import field_new
from wotrolab.rng import make_rng
from wotrolab.stats import chi2_uniform_pvalue


def test_epr_amplitudes():
    phi = qsim.epr_state(3, 1)
    expected = np.zeros(9)
    expected[[0, 4, 8]] = 1 / np.sqrt(3)
    assert np.allclose(phi.amps, expected)
    bell = qsim.epr_state(2, 1)
    assert np.allclose(bell.amps, [1 / np.sqrt(2), 0, 0, 1 / np.sqrt(2)])


def test_epr_two_pairs_schmidt_rank():
    phi = qsim.epr_state(3, 2)
    assert phi.dims == (3, 3, 3, 3)
    assert abs(phi.norm - 1) < 1e-12
    sv = np.linalg.svd(phi.amps.reshape(9, 9), compute_uv=False)
    assert int(np.sum(sv > 1e-9)) == 9
    # pair i couples subsystem i with subsystem count + i
    rho = qsim.reduced_density(phi, [0, 2])
    assert np.isclose(np.real(np.trace(rho @ rho)), 1.0)


def test_tensor():
    s = qsim.tensor(qsim.basis_state(2, 0), qsim.basis_state(2, 1))
    assert np.allclose(s.amps, [0, 1, 0, 0]) and s.dims == (2, 2)
    assert np.allclose(qsim.tensor(np.eye(2), np.eye(3)), np.eye(6))


def test_povm_validate_examples():
    ok = qsim.povm_validate([np.diag([1.0, 0]), np.diag([0, 1.0])])
    assert ok.is_povm and ok.completeness_gap == 0 and ok.min_eig == 0
    over = qsim.povm_validate([np.eye(2) / 2, np.eye(2) / 2, np.eye(2) / 4])
    assert not over.is_povm
    assert abs(over.completeness_gap - 0.25) < 1e-12
    assert abs(over.max_eig - 1.25) < 1e-12
    with pytest.raises(errors.DimensionMismatch):
        qsim.povm_validate([np.eye(2), np.eye(3)])


def test_measure_computational_and_correlated(rng):
    lab, post = qsim.measure_sample(qsim.basis_state(3, 0), qsim.BasisMeasurement(np.eye(3)), None, rng)
    assert lab == 0 and abs(post.norm - 1) < 1e-12
    F = field_new(3, 1)
    for a in range(3):
        for _ in range(50):
            phi = qsim.epr_state(3, 1)
            x, post = qsim.measure_sample(phi, qsim.BasisMeasurement(conjugate_basis(F, a)), [0], rng)
            y, _ = qsim.measure_sample(post, qsim.BasisMeasurement(mub_basis(F, a).matrix), [1], rng)
            assert x == y


def test_epr_marginal_uniform(rng):
    phi = qsim.epr_state(3, 1)
    meas = qsim.BasisMeasurement(np.eye(3))
    counts = np.zeros(3, dtype=int)
    for _ in range(10_000):
        lab, _ = qsim.measure_sample(phi, meas, [0], rng)
        counts[lab] += 1
    assert chi2_uniform_pvalue(counts) > 0.01


def test_zero_probability_branch_and_replay():
    meas = qsim.Povm([(0, np.diag([1.0, 0.0])), (1, np.diag([0.0, 1.0]))])
    st0 = qsim.basis_state(2, 0)
    seq1 = [qsim.measure_sample(qsim.random_state(2, make_rng(5)), meas, None, r)[0]
            for r in [make_rng(9)] for _ in range(20)]
    seq2 = [qsim.measure_sample(qsim.random_state(2, make_rng(5)), meas, None, r)[0]
            for r in [make_rng(9)] for _ in range(20)]
    assert seq1 == seq2
    assert qsim.born_probabilities(st0, meas)[1] == 0.0


def test_eig_examples():
    w, _ = qsim.herm_eig(np.eye(3))
    assert np.allclose(w, [1, 1, 1])
    w, _ = qsim.herm_eig(np.diag([2.0, -1.0]))
    assert np.allclose(w, [-1, 2])
    with pytest.raises(errors.NotHermitian):
        qsim.herm_eig(np.array([[0, 1], [0, 0]], dtype=complex))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 24), st.integers(0, 2**32 - 1))
def test_jacobi_matches_lapack(d, seed):
    r = make_rng(seed)
    A = r.normal(size=(d, d)) + 1j * r.normal(size=(d, d))
    M = A + A.conj().T
    w, U = qsim.jacobi_eigh(M)
    assert np.all(np.diff(w) >= -1e-12)
    assert np.allclose(w, np.linalg.eigvalsh(M), atol=1e-8 * max(1, np.abs(w).max()))
    assert np.linalg.norm(U @ np.diag(w) @ U.conj().T - M) <= 1e-8 * max(1.0, np.linalg.norm(M))
    assert np.allclose(U.conj().T @ U, np.eye(d), atol=1e-9)


def test_trace_distance_examples():
    z = np.diag([1.0, 0.0]).astype(complex)
    o = np.diag([0.0, 1.0]).astype(complex)
    plus = np.full((2, 2), 0.5, dtype=complex)
    assert qsim.trace_distance(z, z) == pytest.approx(0, abs=1e-12)
    assert qsim.trace_distance(z, o) == pytest.approx(1)
    assert qsim.trace_distance(z, plus) == pytest.approx(np.sqrt(0.5))
    with pytest.raises(errors.DimensionMismatch):
        qsim.trace_distance(z, np.eye(3))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_trace_distance_metric(seed):
    r = make_rng(seed)
    a, b, c = (qsim.random_state(3, r).density() for _ in range(3))
    ab, bc, ac = qsim.trace_distance(a, b), qsim.trace_distance(b, c), qsim.trace_distance(a, c)
    assert ac <= ab + bc + 1e-12
    assert ab == pytest.approx(qsim.trace_distance(b, a))
    assert 0 <= ab <= 1 + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_born_sums_to_one_and_post_norm(seed):
    r = make_rng(seed)
    state = qsim.random_state((3, 3), r)
    F = field_new(3, 1)
    meas = qsim.BasisMeasurement(mub_basis(F, int(r.integers(3))).matrix)
    assert qsim.born_probabilities(state, meas, [1]).sum() == pytest.approx(1, abs=1e-9)
    _, post = qsim.measure_sample(state, meas, [1], r)
    assert abs(post.norm - 1) <= 1e-9
    for E in meas.effects():
        w = qsim.eigvalsh(E)
        assert w[0] >= -1e-9 and w[-1] <= 1 + 1e-9


def test_teleport_examples(rng):
    out, rec = qsim.teleport(qsim.basis_state(3, 1), qsim.epr_state(3, 1), rng)
    assert qsim.fidelity(out, qsim.basis_state(3, 1)) == pytest.approx(1, abs=1e-9)
    assert len(rec.corrections) == 1
    for _ in range(100):
        psi = qsim.random_state(3, rng)
        out, _ = qsim.teleport(psi, qsim.epr_state(3, 1), rng)
        assert qsim.fidelity(out, psi) >= 1 - 1e-9
    psi = qsim.random_state((3, 3), rng)
    out, _ = qsim.teleport(psi, qsim.epr_state(3, 2), rng)
    assert qsim.fidelity(out, psi) >= 1 - 1e-9
    with pytest.raises(errors.DimensionMismatch):
        qsim.teleport(qsim.basis_state(2, 0), qsim.epr_state(3, 1), rng)


def test_teleport_without_correction_fails(rng):
    psi = qsim.random_state(3, rng)
    worst = 1.0
    for _ in range(20):
        out, rec = qsim.teleport(psi, qsim.epr_state(3, 1), rng, tamper=lambda i, j, l: (0, 0))
        worst = min(worst, qsim.fidelity(out, psi))
    assert worst < 0.99


def test_state_json_roundtrip(rng):
    s = qsim.random_state((3, 2), rng)
    back = qsim.StateVec.from_json(s.to_json())
    assert back.dims == s.dims and np.allclose(back.amps, s.amps)
    with pytest.raises(ValueError):
        qsim.StateVec((2,), np.array([1.0, 1.0]))


def test_size_caps():
    with pytest.raises(errors.TooLarge):
        qsim.epr_state(3, 7)
