"""Sigma protocols, their Fiat-Shamir composition with a one-message random
oracle protocol, the empty-language family indexed by a table f, and the
jointly simulated prover/verifier pair.

The public instance is not fed to the oracle protocol; only the commitment is.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .chernoff import attack_success, build_attack, honest_acceptance, simulator_step
from .errors import AlphabetMismatch, InvalidAttackFamily, LengthMismatch, SimulationFailed
from .qsim import measure_sample
from .stats import Estimate, wilson, within_sigma
from .wotro import HonestAdversary, Transcript, WotroProtocol, _verify, honest_run

NO_RESPONSE = None


@dataclass(frozen=True)
class SigmaProtocol:
    """Three-move public-coin protocol with n-bit commitments and m-bit challenges.

    ``commit(x, w, rng)`` returns ``(a, state)``; ``respond(state, c)`` returns
    ``z``; ``verify(x, a, c, z)`` decides. ``extract`` maps two accepting
    conversations with one commitment to a witness, or returns ``None`` when
    it is undefined for that pair.
    """

    n: int
    m: int
    commit: Callable[[Any, Any, np.random.Generator], tuple[int, Any]]
    respond: Callable[[Any, int], Any]
    verify: Callable[[Any, int, int, Any], bool]
    extract: Callable[[Any, int, int, Any, int, Any], Any] | None = None
    name: str = "sigma"

    def run(self, x: Any, w: Any, rng: np.random.Generator) -> tuple[int, int, Any, bool]:
        """Interactive run with a uniform challenge."""
        a, st = self.commit(x, w, rng)
        c = int(rng.integers(1 << self.m))
        z = self.respond(st, c)
        return a, c, z, bool(self.verify(x, a, c, z))


def toy_sigma(n: int, m: int, generator: int = 3) -> SigmaProtocol:
    """Knowledge of w with X = w*G in Z_{2^n}, G odd.

    Commit a = r*G, respond z = r + c*w, verify z*G = a + c*X. Extraction
    works when the two challenges differ by an odd number.
    """
    if generator % 2 == 0:
        raise ValueError("generator must be odd")
    if m > n:
        raise LengthMismatch("challenge longer than commitment")
    mod = 1 << n
    G = generator % mod

    def commit(x, w, rng):
        r = int(rng.integers(mod))
        return (r * G) % mod, (r, w)

    def respond(st, c):
        r, w = st
        return (r + c * w) % mod

    def verify(x, a, c, z):
        return (z * G) % mod == (a + c * x) % mod

    def extract(x, a, c1, z1, c2, z2):
        diff = (c1 - c2) % mod
        if diff % 2 == 0:
            return None
        return ((z1 - z2) * pow(diff, -1, mod)) % mod

    return SigmaProtocol(n, m, commit, respond, verify, extract, "toy_linear")


def toy_instance(sigma: SigmaProtocol, rng: np.random.Generator, generator: int = 3) -> tuple[int, int]:
    """Planted (X, w) pair for :func:`toy_sigma`."""
    mod = 1 << sigma.n
    w = int(rng.integers(mod))
    return (w * generator) % mod, w


def sigma_f(f: Sequence[int], n: int, m: int) -> SigmaProtocol:
    """Protocol for the empty language: accept iff the challenge equals f(a).

    The honest prover has no witness, so it commits to a uniform a and
    responds with nothing.
    """
    table = tuple(int(v) for v in f)
    if len(table) != 1 << n:
        raise LengthMismatch(f"f must have {1 << n} entries")
    if any(not 0 <= v < 1 << m for v in table):
        raise ValueError("f values out of range")

    def commit(x, w, rng):
        return int(rng.integers(1 << n)), None

    def verify(x, a, c, z):
        return c == table[a]

    return SigmaProtocol(n, m, commit, lambda st, c: NO_RESPONSE, verify, None, "sigma_f")


def accepting_challenges(sigma: SigmaProtocol, x: Any, a: int, z: Any = NO_RESPONSE) -> list[int]:
    return [c for c in range(1 << sigma.m) if sigma.verify(x, a, c, z)]


# ------------------------------------------------------------ composition


@dataclass(frozen=True)
class FsTranscript:
    a: int | None
    c: int | None
    y: Any
    w: Any
    z: Any
    oracle_accepted: bool
    sigma_accepted: bool

    @property
    def accepted(self) -> bool:
        return self.oracle_accepted and self.sigma_accepted


@dataclass(frozen=True)
class FsSystem:
    """Non-interactive proof system from a sigma protocol and an oracle protocol.

    ``to_input`` maps a commitment to an oracle input and ``to_challenge``
    maps an oracle challenge to a sigma challenge; both default to identity.
    """

    sigma: SigmaProtocol
    wotro: WotroProtocol
    to_input: Callable[[int], int] = lambda a: a
    to_challenge: Callable[[int], int] = lambda c: c

    def prove_and_verify(self, x: Any, w: Any, rng: np.random.Generator) -> FsTranscript:
        a, st = self.sigma.commit(x, w, rng)
        tr = honest_run(self.wotro, self.to_input(a), rng)
        if not tr.accepted:
            return FsTranscript(a, None, tr.y, tr.w, None, False, False)
        c = self.to_challenge(tr.c)
        z = self.sigma.respond(st, c)
        return FsTranscript(a, c, tr.y, tr.w, z, True, bool(self.sigma.verify(x, a, c, z)))

    def verify_transcript(self, x: Any, tr: Transcript, z: Any) -> FsTranscript:
        """Combine an oracle transcript produced by any prover with response z."""
        if not tr.accepted or tr.a is None:
            return FsTranscript(tr.a, None, tr.y, tr.w, z, False, False)
        c = self.to_challenge(tr.c)
        return FsTranscript(tr.a, c, tr.y, tr.w, z, True, bool(self.sigma.verify(x, tr.a, c, z)))


def fs_compose(
    sigma: SigmaProtocol,
    wotro: WotroProtocol,
    to_input: Callable[[int], int] | None = None,
    to_challenge: Callable[[int], int] | None = None,
) -> FsSystem:
    """Check alphabets and lengths, then bundle the pair.

    A non-binary oracle protocol needs both adapters.
    """
    adapted = to_input is not None and to_challenge is not None
    if wotro.q != 2 and not adapted:
        raise AlphabetMismatch(f"oracle protocol has alphabet {wotro.q}; supply adapters")
    if not adapted:
        if len(wotro.inputs) != 1 << sigma.n or wotro.n != sigma.n:
            raise LengthMismatch(f"commitment length {sigma.n} vs oracle input length {wotro.n}")
        if wotro.challenge_count != 1 << sigma.m:
            raise LengthMismatch(f"challenge length {sigma.m} vs oracle output length {wotro.m}")
    return FsSystem(sigma, wotro, to_input or (lambda a: a), to_challenge or (lambda c: c))


# ------------------------------------------------------------ attack


@dataclass(frozen=True)
class FsAttackReport:
    f: tuple[int, ...] | None
    breaks: Estimate
    exact: float
    valid: bool
    attacker: str

    @property
    def break_rate(self) -> float:
        return self.breaks.rate

    def agrees(self, k: float = 3.0) -> bool:
        return within_sigma(self.break_rate, self.exact, self.breaks.trials, k)

    def to_json(self) -> dict:
        return {
            "f": None if self.f is None else list(self.f),
            "attacker": self.attacker,
            "break_rate": self.break_rate,
            "breaks": self.breaks.to_json(),
            "exact": self.exact,
            "valid": self.valid,
        }


def fs_attack(
    f: Sequence[int],
    wotro: WotroProtocol,
    trials: int,
    rng: np.random.Generator,
    attacker: str = "chernoff",
    strict: bool = False,
) -> FsAttackReport:
    """Soundness-break rate of the composed empty-language system.

    ``attacker`` is ``"chernoff"`` (rescaled measurement targeting f) or
    ``"honest"``. An attack family that is not a valid measurement raises
    :class:`InvalidAttackFamily` under ``strict``; otherwise it runs with its
    clipped abort element and ``valid`` is reported false.
    """
    f = tuple(int(v) for v in f)
    system = fs_compose(sigma_f(f, wotro.n, wotro.m), wotro)
    if attacker == "chernoff":
        att = build_attack(wotro, f)
        if strict and not att.valid:
            raise InvalidAttackFamily(f"attack for f={f} is not a valid measurement")
        adv = att.adversary()
        exact, valid = attack_success(wotro, att), att.valid
    elif attacker == "honest":
        adv = HonestAdversary()
        exact, valid = honest_acceptance(wotro) / wotro.challenge_count, True
    else:
        raise ValueError(f"unknown attacker {attacker!r}")
    breaks = sum(system.verify_transcript(None, adv.play(wotro, rng), NO_RESPONSE).accepted for _ in range(trials))
    return FsAttackReport(f, wilson(breaks, trials), exact, valid, attacker)


def fs_attack_random_f(wotro: WotroProtocol, trials: int, rng: np.random.Generator) -> FsAttackReport:
    """Break rate with a fresh uniform table f per trial.

    The reference value is the exact mean success over every table, which
    equals delta / (1 + eta).
    """
    from .chernoff import enumerate_f_audit

    cache: dict[tuple[int, ...], Any] = {}
    breaks = 0
    for _ in range(trials):
        f = tuple(int(v) for v in rng.integers(wotro.challenge_count, size=len(wotro.inputs)))
        if f not in cache:
            cache[f] = build_attack(wotro, f).adversary()
        system = fs_compose(sigma_f(f, wotro.n, wotro.m), wotro)
        breaks += system.verify_transcript(None, cache[f].play(wotro, rng), NO_RESPONSE).accepted
    rep = enumerate_f_audit(wotro)
    return FsAttackReport(None, wilson(breaks, trials), rep.exact_mean_success, rep.valid_count == rep.total_f, "chernoff")


# ------------------------------------------------------------ joint simulation


@dataclass
class JointSimState:
    f_A: dict[int, int] = field(default_factory=dict)

    @property
    def A(self) -> set[int]:
        return set(self.f_A)


@dataclass
class SimulatedProof:
    a: int
    c: int
    y: Any
    w: Any
    post: Any


class JointSimulator:
    """Prover and verifier simulators sharing one partial function.

    ``prove`` draws (a, y, w) from the honest simulator and records
    f_A(a) = c, failing if a was already defined. ``verify`` runs the oracle
    verifier on the supplied shared state and then checks c against f_A,
    extending f_A with a uniform value when a is new.
    """

    def __init__(self, proto: WotroProtocol, rng: np.random.Generator):
        self.proto = proto
        self.rng = rng
        self.state = JointSimState()

    def prove(self) -> SimulatedProof:
        (a, y, w), post = simulator_step(self.proto, self.rng, return_state=True)
        if a in self.state.f_A:
            raise SimulationFailed(f"simulator repeated input {a}")
        c = self.proto.challenge(a, y, w)
        self.state.f_A[a] = c
        return SimulatedProof(a, c, y, w, post)

    def check(self, a: int, c: int, y: Any, w: Any, post: Any) -> tuple[bool, bool]:
        """(oracle verifier accepted, final decision)."""
        tr = _verify(self.proto, post, a, y, w, self.rng)
        if a not in self.state.f_A:
            self.state.f_A[a] = int(self.rng.integers(self.proto.challenge_count))
        return tr.accepted, tr.accepted and c == self.state.f_A[a]

    def verify(self, a: int, c: int, y: Any, w: Any, post: Any) -> bool:
        return self.check(a, c, y, w, post)[1]


def joint_simulator_pair(proto: WotroProtocol, rng: np.random.Generator) -> tuple[Callable, Callable, JointSimState]:
    sim = JointSimulator(proto, rng)
    return sim.prove, sim.verify, sim.state


@dataclass(frozen=True)
class ConsistencyReport:
    queries: int
    runs: int
    failures: Estimate
    bound: float
    consistent: bool

    @property
    def failure_prob(self) -> float:
        return self.failures.rate

    def within_bound(self, k: float = 3.0) -> bool:
        sigma = np.sqrt(max(self.bound * (1 - self.bound), 0.0) / self.runs) if self.bound < 1 else 0.0
        return self.failure_prob <= self.bound + k * sigma + 1e-12

    def to_json(self) -> dict:
        return {
            "queries": self.queries,
            "runs": self.runs,
            "failure_prob": self.failure_prob,
            "failures": self.failures.to_json(),
            "bound": self.bound,
            "consistent": self.consistent,
        }


def _fresh_message(proto: WotroProtocol, rng: np.random.Generator) -> tuple[int, int, Any, Any, Any]:
    """Honest oracle message on a fresh shared state with a uniform claimed challenge."""
    a = int(rng.choice(proto.inputs))
    (y, w), post = measure_sample(proto.crqs, proto.prover_povm(a), proto.prover_reg, rng)
    return a, int(rng.integers(proto.challenge_count)), y, w, post


def consistency_audit(
    proto: WotroProtocol,
    queries: int,
    runs: int,
    rng: np.random.Generator,
    verify_fraction: float = 0.5,
) -> ConsistencyReport:
    """Interleave ``queries`` prover and verifier calls per run.

    Verifier calls replay an earlier simulated proof when one exists, or a
    fresh honest message otherwise. A run fails when the prover simulator
    repeats an input. In every other run, all decisions are checked against
    the final f_A.
    """
    failures = 0
    consistent = True
    for _ in range(runs):
        sim = JointSimulator(proto, rng)
        proofs: list[SimulatedProof] = []
        decisions: list[tuple[int, int, bool, bool]] = []
        try:
            for _ in range(queries):
                if rng.random() < verify_fraction:
                    if proofs and rng.random() < 0.5:
                        pr = proofs[int(rng.integers(len(proofs)))]
                        msg = (pr.a, pr.c, pr.y, pr.w, pr.post)
                    else:
                        msg = _fresh_message(proto, rng)
                    ok, dec = sim.check(*msg)
                    decisions.append((msg[0], msg[1], ok, dec))
                else:
                    proofs.append(sim.prove())
        except SimulationFailed:
            failures += 1
            continue
        f_A = sim.state.f_A
        consistent &= all(f_A[p.a] == p.c for p in proofs)
        consistent &= all(dec == (ok and c == f_A[a]) for a, c, ok, dec in decisions)
    bound = min(1.0, queries**2 / len(proto.inputs))
    return ConsistencyReport(queries, runs, wilson(failures, runs), bound, bool(consistent))
