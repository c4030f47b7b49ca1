import math
from fractions import Fraction

import numpy as np
import pytest

from wotrolab import chernoff, errors, wotro
from wotrolab.qsim import povm_validate
from wotrolab.rng import make_rng
from wotrolab.stats import chi2_uniform_pvalue, within_sigma

from oracles import shelter_delta_truncation, single_query_distance


def test_eta_examples():
    e = chernoff.eta(2, 1, 1)
    assert e.value == pytest.approx(math.sqrt(2 * math.log(2) * 3 / 2)) and e.vacuous
    assert e.value == pytest.approx(1.4420, abs=1e-4)
    assert chernoff.eta(3, 3, 1).vacuous
    big = chernoff.eta(40, 10, 10)
    assert big.value == pytest.approx(2.54e-4, rel=1e-2) and not big.vacuous
    assert chernoff.eta(2, 1, 1, q=3).value == pytest.approx(math.sqrt(2 * math.log(2) * 3 / 3))
    with pytest.raises(ValueError):
        chernoff.eta(1, 2, 1)


@pytest.mark.parametrize("nmk,total", [((2, 1, 1), 16), ((3, 1, 2), 256), ((2, 2, 2), 256)])
def test_enumeration_identity(nmk, total):
    rep = chernoff.enumerate_f_audit(chernoff.build_binary_toy(*nmk))
    assert rep.total_f == total
    assert rep.identity_error <= 1e-12
    assert rep.mean_operator_error <= 1e-12
    assert rep.delta == pytest.approx(1.0, abs=1e-12)


def test_too_many_functions():
    with pytest.raises(errors.TooManyFunctions):
        chernoff.enumerate_f_audit(chernoff.build_binary_toy(4, 1, 1), limit=4096)


@pytest.mark.parametrize("nmk", [(2, 1, 1), (3, 1, 2)])
def test_attack_success_closed_form(nmk):
    # real projective bases on EPR pairs: each table succeeds with 1 / (1 + eta)
    proto = chernoff.build_binary_toy(*nmk)
    e = chernoff.protocol_eta(proto).value
    for f in list(chernoff.all_tables(proto))[:16]:
        att = chernoff.build_attack(proto, f)
        assert chernoff.attack_success(proto, att) == pytest.approx(1 / (1 + e), abs=1e-12)
        # top eigenvalue of the attack sum is 2^m / (1 + eta) < 1 for eta > 1
        assert att.sum_max_eig <= 2 ** nmk[1] / (1 + e) + 1e-12
        assert att.valid
        assert povm_validate(att.measurement().effects()).is_povm


def test_invalid_family_is_carried():
    proto = chernoff.build_binary_toy(2, 1, 1)
    att = chernoff.build_attack(proto, (0, 1, 0, 1), eta_value=0.0)
    assert not att.valid and att.nonphysical
    # |0><0| + |-><-| for this table
    assert att.sum_max_eig == pytest.approx(1 + 1 / math.sqrt(2))
    assert np.linalg.eigvalsh(att.bottom)[0] >= -1e-12
    assert att.raw_bottom_min_eig < 0


def test_commuting_case_diagonal():
    # with k = 2 the top qubit is always measured in the computational basis
    proto = chernoff.build_binary_toy(1, 1, 2)
    att = chernoff.build_attack(proto, (1, 0))
    total = sum(att.ops.values())
    assert np.allclose(total, np.diag(np.diag(total)))
    assert att.sum_max_eig == pytest.approx(np.max(np.diag(total).real))


def test_attack_matches_monte_carlo():
    proto = chernoff.build_binary_toy(2, 1, 1)
    f = (1, 1, 0, 1)
    att = chernoff.build_attack(proto, f)
    exact = chernoff.attack_success(proto, att)
    trials = 4000
    rep = wotro.avoidance_audit(proto, att.adversary(), f.__getitem__, trials, make_rng(8))
    assert within_sigma(rep.hit_prob, exact, trials)


def test_simulator_step_marginal():
    proto = chernoff.build_binary_toy(2, 1, 1)
    r = make_rng(4)
    counts = np.zeros(4, dtype=int)
    for _ in range(10_000):
        a, y, w = chernoff.simulator_step(proto, r)
        assert y is not None
        counts[a] += 1
    assert chi2_uniform_pvalue(counts) > 0.01


def test_simulator_matches_honest_law():
    proto = wotro.build_wf_protocol(3, 1)
    r = make_rng(6)
    counts = np.zeros((3, 3))
    for _ in range(3000):
        a, y, w = chernoff.simulator_step(proto, r)
        counts[a, y] += 1
    for a in range(3):
        law = wotro.challenge_law(proto, a)
        total = counts[a].sum()
        for c in range(3):
            assert within_sigma(counts[a, c] / total, law[c], int(total))


@pytest.mark.parametrize("nmk", [(2, 1, 1), (3, 1, 1), (4, 1, 1), (3, 1, 2)])
def test_single_query_distance_oracle(nmk):
    proto = chernoff.build_binary_toy(*nmk)
    rep = chernoff.hybrid_distance(proto, chernoff.entangled_circuit(proto.prover_dim, 1))
    assert rep.valid_fraction == 1.0
    ref = single_query_distance(*nmk, rep.eta)
    assert rep.total == pytest.approx(ref, abs=1e-9)
    assert rep.total == pytest.approx(chernoff.analytic_single_query_distance(rep.eta), abs=1e-9)


def test_distance_decreases_with_gap():
    vals = []
    for n in (2, 3, 4):
        proto = chernoff.build_binary_toy(n, 1, 1)
        vals.append(chernoff.hybrid_distance(proto, chernoff.entangled_circuit(2, 1)).total)
    assert vals[0] >= vals[1] >= vals[2]


def test_oracle_blind_circuit_has_zero_distance():
    proto = chernoff.build_binary_toy(2, 1, 1)
    blind = chernoff.entangled_circuit(2, 1, view=lambda h: 0)
    assert chernoff.hybrid_distance(proto, blind).total == pytest.approx(0, abs=1e-12)


def test_two_query_triangle():
    proto = chernoff.build_binary_toy(2, 1, 1)
    rep = chernoff.hybrid_distance(proto, chernoff.entangled_circuit(2, 2))
    assert len(rep.consecutive) == 2
    assert rep.total <= sum(rep.consecutive) + 1e-9
    assert all(c <= rep.total + 1e-9 for c in rep.consecutive)


def test_shelter_truncation():
    G = wotro.truncation_hash(3, 1)
    rep = chernoff.shelter_attack_state(lambda x: G(0, x), 3, 2, 1)
    assert rep.delta == pytest.approx(float(shelter_delta_truncation(3, 2, 1)), abs=1e-12)
    assert shelter_delta_truncation(3, 2, 1) == Fraction(2, 3)
    assert abs(rep.state.norm - 1) < 1e-12


def test_shelter_no_free_coordinates():
    assert chernoff.shelter_attack_state(lambda x: x, 3, 2, 2).delta == pytest.approx(0, abs=1e-12)


def test_shelter_universal_family():
    deltas = []
    for m0 in range(3):
        for m1 in range(3):
            for b in range(3):
                h = lambda x, m0=m0, m1=m1, b=b: (m0 * (x % 3) + m1 * (x // 3) + b) % 3  # noqa: E731
                deltas.append(chernoff.shelter_attack_state(h, 3, 2, 1).delta)
    assert np.mean(np.array(deltas) > 0) >= 0.9
