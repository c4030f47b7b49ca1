"""Acceptance criteria at their stated tolerances and runtimes.

Each criterion records its parts through ``record``; the terminal summary
prints one PASS/FAIL line per criterion. Parts that are expected to be
unattainable live in their own tests so the attainable parts stay visible.
Every criterion draws randomness from a Philox stream seeded with its number.
"""
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from wotrolab import bounds, chernoff, fs, gf, mub, nlbox, tql, wotro
from wotrolab.rng import make_rng
from wotrolab.stats import within_sigma

from oracles import shelter_delta_truncation, single_query_distance, wf_challenge_law

RESULTS: dict[int, list[tuple[str, bool]]] = {}
TITLES = {
    1: "MUB unbiasedness",
    2: "honest conjugate-basis protocol",
    3: "trace moments of S",
    4: "dual certificate",
    5: "Weil sums",
    6: "Chernoff exact identity",
    7: "single-query hybrid distance",
    8: "NL-box protocol",
    9: "classical baselines",
    10: "Fiat-Shamir attack and joint simulator",
    11: "typed lightning",
    12: "shelter attack state",
}


def record(n, part, ok):
    RESULTS.setdefault(n, []).append((part, bool(ok)))
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {part}"
    print(line)
    return ok


def check(n, part, ok):
    assert record(n, part, ok), part


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def test_criterion_01_mub_unbiasedness():
    rng = make_rng(1)
    with Timer() as t:
        F3 = gf.field_new(3, 1)
        d1 = mub.mub_overlap_audit(F3, mub.all_pairs(F3))
        F9 = gf.field_new(3, 2)
        pairs = mub.all_pairs(F9)
        pick = rng.choice(len(pairs), size=10, replace=False)
        d2 = mub.mub_overlap_audit(F9, [pairs[int(i)] for i in pick])
    check(1, f"max deviation n=1 {d1:.2e}, n=2 {d2:.2e} (<= 1e-9), {t.elapsed:.1f}s",
          d1 <= 1e-9 and d2 <= 1e-9 and t.elapsed < 10)


def test_criterion_02_honest_protocol():
    rng = make_rng(2)
    proto = wotro.build_wf_protocol(3, 1)
    trials = 10_000
    with Timer() as t:
        runs = [wotro.honest_run(proto, int(rng.integers(3)), rng) for _ in range(trials)]
        oracle = wf_challenge_law(3)
        law_ok = all(
            abs(wotro.challenge_law(proto, a).get(c, 0.0) - float(oracle[c])) <= 1e-12
            for a in range(3) for c in range(3)
        )
    accept = sum(r.accepted for r in runs) / trials
    zero = sum((r.w[0] + r.w[1]) % 3 == 0 for r in runs) / trials
    assert oracle == {0: Fraction(5, 9), 1: Fraction(2, 9), 2: Fraction(2, 9)}
    check(2, f"accept {accept}, law (5/9, 2/9, 2/9) {law_ok}, Pr[x1+x2=0] {zero:.4f}, {t.elapsed:.1f}s",
          accept == 1.0 and law_ok and within_sigma(zero, 1 / 3, trials) and t.elapsed < 30)


def _trace_rows(n, count, rng):
    F = gf.field_new(3, n)
    rows = []
    for _ in range(count):
        table = [int(v) for v in rng.integers(F.order, size=F.order)]
        rows.append(bounds.trace_moments(bounds.build_S(F, table)))
    return rows


@pytest.fixture(scope="module")
def trace_rows():
    rng = make_rng(3)
    with Timer() as t:
        rows = {n: _trace_rows(n, 20, rng) for n in (1, 2)}
    return rows, t.elapsed


def test_criterion_03_trace_first_second(trace_rows):
    rows, elapsed = trace_rows
    ok = True
    for n, tms in rows.items():
        d = 3 ** (3 * n)
        for tm in tms:
            ok &= abs(tm.tr1 - d) <= 1e-6 * d
            ok &= abs(tm.tr2 - (2 * d - 3 ** (2 * n))) <= 1e-6 * d
    check(3, f"Tr S and Tr S^2 exact on 40 targets, {elapsed:.1f}s", ok and elapsed < 300)


@pytest.mark.parametrize("n", [1, 2])
def test_criterion_03_trace_cubic_bound(trace_rows, n):
    rows, _ = trace_rows
    d = 3 ** (3 * n)
    bound = 4 * d + 3 ** (2 * n)
    worst = max(tm.tr3 for tm in rows[n])
    bad = sum(tm.tr3 > bound + 1e-6 * d for tm in rows[n])
    check(3, f"Tr S^3 <= {bound} at n={n}: max {worst:.1f}, {bad}/20 violations", bad == 0)


def test_criterion_04_dual_certificate():
    rng = make_rng(4)
    with Timer() as t:
        F = gf.field_new(3, 2)
        table = [int(v) for v in rng.integers(9, size=9)]
        cert = bounds.dual_certificate(bounds.build_S(F, table), 1.0, rng, strict=False)
    sweep_ok = all(min(s, key=s.get) == 1.0 for s in (bounds.alpha_sweep(3, n) for n in (1, 2, 3, 8)))
    limit_ok = bounds.asymptotic_taylor(1.0) == 0.75 and abs(bounds.taylor_dual_value(3, 40, 1.0) - 0.75) <= 1e-12
    check(4, f"min eig {cert.feasibility_min_eig:.2e} over {cert.checked_pairs} pairs, dual {cert.dual_value:.5f} "
          f"<= 0.83334, sweep minimum at 1 {sweep_ok}, limit 3/4 {limit_ok}, {t.elapsed:.1f}s",
          cert.feasibility_min_eig >= -1e-7 and cert.dual_value <= 0.83334
          and sweep_ok and limit_ok and t.elapsed < 600)


def test_criterion_05_gauss_sums():
    with Timer() as t:
        worst = 0.0
        for p in (3, 5, 7):
            for coef in range(1, p):
                res = bounds.weil_sum_audit(p, bounds.FullQuadratic(np.array([[coef]])))
                worst = max(worst, abs(res.abs_sum - math.sqrt(p)))
    check(5, f"Gauss sums equal sqrt(q), max error {worst:.1e}, {t.elapsed:.1f}s", worst <= 1e-6 and t.elapsed < 300)


def test_criterion_05_constrained_bound():
    F = gf.field_new(3, 1)
    with Timer() as t:
        rows = []
        for table, (a, b, c) in bounds.constrained_cases(F):
            W = bounds.build_weil_matrices(F, a, b, c, table)
            rows.append(bounds.weil_sum_audit(3, bounds.Constrained(W.B_abc, W.C_abc)))
    assert all(r.domain <= 10**7 for r in rows)
    bad = sum(not r.holds for r in rows)
    corrected = all(r.abs_sum <= r.corrected_bound + 1e-6 for r in rows)
    check(5, f"constrained q^(m/2) bound: {bad}/{len(rows)} violations (rank-corrected bound holds: {corrected}), "
          f"{t.elapsed:.1f}s", bad == 0 and t.elapsed < 300)


@pytest.mark.parametrize("nmk", [(2, 1, 1), (3, 1, 2)])
def test_criterion_06_chernoff_identity(nmk):
    with Timer() as t:
        rep = chernoff.enumerate_f_audit(chernoff.build_binary_toy(*nmk))
    check(6, f"{nmk}: mean success {rep.exact_mean_success:.12f} vs delta/(1+eta) {rep.predicted:.12f}, "
          f"operator error {rep.mean_operator_error:.1e}, {t.elapsed:.1f}s",
          rep.identity_error <= 1e-9 and rep.mean_operator_error <= 1e-9 and t.elapsed < 120)


def test_criterion_07_hybrid_distance():
    vals = []
    ok = True
    with Timer() as t:
        for n in (2, 3, 4):
            proto = chernoff.build_binary_toy(n, 1, 1)
            rep = chernoff.hybrid_distance(proto, chernoff.entangled_circuit(proto.prover_dim, 1))
            ok &= abs(rep.total - single_query_distance(n, 1, 1, rep.eta)) <= 1e-9
            vals.append(rep.total)
    mono = vals[0] >= vals[1] >= vals[2]
    check(7, f"distances {', '.join(f'{v:.6f}' for v in vals)} match the reference to 1e-9 {ok}, "
          f"non-increasing {mono}, {t.elapsed:.1f}s", ok and mono and t.elapsed < 600)


def test_criterion_08_nlbox():
    rng = make_rng(8)
    code = nlbox.repetition_code(4, 3)
    fam = nlbox.toeplitz_family(code.length, 2)
    trials = 100_000
    with Timer() as t:
        acc = agree = 0
        for _ in range(trials):
            tr = nlbox.nlbox_protocol_run(code, fam, fam.sample(rng), int(rng.integers(16)), rng)
            acc += tr.accepted
            agree += tr.prover_c == tr.verifier_c
        att = nlbox.nlbox_attack_audit(code, fam, [0, 1, 2, 3], nlbox.random_target(4, 2, rng), trials, rng)
    check(8, f"honest accept {acc / trials}, agreement {agree / trials}, flip accept {att.accepted.rate:.5f} "
          f"(1/16), hit {att.hit_prob:.4f} (1/4), {t.elapsed:.1f}s",
          acc == trials and agree == trials and att.expected_accept == 1 / 16
          and att.accept_within() and att.hit_within() and t.elapsed < 60)


def test_criterion_09_baselines():
    rng = make_rng(9)
    trials = 20_000
    ident = lambda a: a  # noqa: E731
    with Timer() as t:
        triv = wotro.build_baseline("trivial_two_message", q=2, n=2, m=2)
        hit = wotro.avoidance_audit(triv, wotro.HonestAdversary(), wotro.random_target(triv, rng), trials, rng)
        out = {}
        for blocks in (2, 64):
            proto = wotro.build_baseline("crs_blocks", q=2, n=6, blocks=blocks)
            exact = wotro.crs_blocks_exact_hit(proto, ident)
            emp = wotro.avoidance_audit(proto, wotro.block_adversary(proto, ident), ident, trials, rng)
            out[blocks] = (exact, emp.hit_prob)
    v64 = 1 - (1 - 1 / 64) ** 64
    ok = (within_sigma(hit.hit_prob, 0.25, trials)
          and out[2][0] == 0.75 and within_sigma(out[2][1], 0.75, trials)
          and abs(out[64][0] - v64) <= 1e-12 and within_sigma(out[64][1], v64, trials)
          and t.elapsed < 60)
    check(9, f"trivial {hit.hit_prob:.4f} (1/4), blocks=2 {out[2][0]} / {out[2][1]:.4f}, "
          f"blocks=64 {out[64][0]:.5f} / {out[64][1]:.4f}, {t.elapsed:.1f}s", ok)


def test_criterion_10_fiat_shamir():
    toy = chernoff.build_binary_toy(2, 1, 1)
    ok = True
    parts = []
    with Timer() as t:
        for i, f in enumerate([(0, 0, 0, 0), (1, 0, 1, 1), (0, 1, 1, 0)]):
            att = chernoff.build_attack(toy, f)
            assert not att.nonphysical
            rep = fs.fs_attack(f, toy, 10_000, make_rng(10 * 100 + i))
            exact = chernoff.attack_success(toy, att)
            ok &= rep.breaks.low <= exact <= rep.breaks.high
            parts.append(f"{rep.break_rate:.4f}")
        cons = fs.consistency_audit(chernoff.build_binary_toy(8, 1, 1), 10, 2000, make_rng(10))
    ok &= cons.within_bound() and cons.consistent and t.elapsed < 120
    check(10, f"break rates {', '.join(parts)} vs exact {exact:.4f}; joint failure {cons.failure_prob:.4f} "
          f"<= {cons.bound:.4f}, consistent {cons.consistent}, {t.elapsed:.1f}s", ok)


@pytest.fixture(scope="module")
def tql_retries():
    rng = make_rng(11)
    scheme = tql.tql_from_ql(tql.mock_ql(12), 2, 8)
    with Timer() as t:
        rep = tql.retry_audit(scheme, 10_000, rng)
    return scheme, rep, rng, t.elapsed


def test_criterion_11_retries_and_collisions(tql_retries):
    scheme, rep, rng, elapsed = tql_retries
    with Timer() as t:
        storm = scheme.setup(rng)
        adv = tql.planted_adversary(scheme, storm, 0, 4, rng)
        col = tql.collision_audit(adv.gen, lambda b: scheme.ql.ver(storm.storm, b), adv.collision_entropy, 1000, 1000, rng)
    check(11, f"mean retries {rep.mean_retries:.4f} (4), type consistent {rep.type_consistent}, "
          f"planted mean pairs {col.mean_pairs:.3f} (<= 3 x {col.expected_pairs:.0f}), {elapsed + t.elapsed:.1f}s",
          rep.mean_within(3.0) and rep.type_consistent and col.within(3.0) and elapsed + t.elapsed < 60)


def test_criterion_11_no_exhaustion(tql_retries):
    _, rep, _, _ = tql_retries
    check(11, f"{rep.exhausted} retry exhaustions in 10^4 calls "
          f"(per-call probability {tql.exhaustion_probability(2, 8):.2e})", rep.exhausted == 0)


def test_criterion_12_shelter():
    with Timer() as t:
        G = wotro.truncation_hash(3, 1)
        rep = chernoff.shelter_attack_state(lambda x: G(0, x), 3, 2, 1)
    frozen = 2 / 3
    assert shelter_delta_truncation(3, 2, 1) == Fraction(2, 3)
    check(12, f"delta {rep.delta:.12f} (frozen 2/3), {t.elapsed:.2f}s",
          rep.delta > 0.5 and abs(rep.delta - frozen) <= 1e-12 and t.elapsed < 60)
