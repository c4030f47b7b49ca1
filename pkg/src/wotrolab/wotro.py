"""One-message random-oracle protocols on a shared entangled state.

A :class:`WotroProtocol` bundles a shared state, a prover measurement per
input ``a`` with outcome labels ``(y, w)``, and a verifier test per
``(a, y, w)``. Classical baselines reuse the same interface with a
one-dimensional shared state and a :class:`ClassicalLaw` that supplies the
common random string.

Convention for the entangled protocols: the shared state is sum_j |j>|j>, so
measuring both halves in the same complex basis does not give matching
outcomes. The prover measures in the entrywise-conjugate basis and the
verifier tests against the basis vector itself.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Sequence

import numpy as np

from .errors import AlphabetMismatch, BadParams
from .gf import Field, field_new
from .mub import _basis_matrix
from .qsim import (
    BasisMeasurement,
    Measurement,
    ProjectorTest,
    StateVec,
    _to_matrix,
    epr_state,
    measure_sample,
)
from .stats import Estimate, total_variation, wilson

BOT = None


@dataclass(frozen=True)
class Transcript:
    a: Any
    y: Any
    w: Any
    accepted: bool
    c: Any = None

    def __post_init__(self) -> None:
        if not self.accepted and self.c is not None:
            raise ValueError("rejected transcripts carry no challenge")


@dataclass(frozen=True)
class ClassicalLaw:
    """Common random string and deterministic output rule.

    ``visible`` says whether a cheating prover sees ``r`` before choosing its
    input (false for the two-message protocol, where the verifier draws it).
    """

    sample: Callable[[np.random.Generator], Any]
    output: Callable[[Any, Any], int]
    visible: bool
    exact_law: Callable[[Any], dict[int, float]] | None = None


@dataclass(eq=False)
class WotroProtocol:
    name: str
    q: int
    n: int
    m: int
    inputs: list[int]
    challenge_count: int
    crqs: StateVec
    prover_reg: tuple[int, ...]
    verifier_reg: tuple[int, ...]
    prover_povm: Callable[[int], Measurement]
    verifier_povm: Callable[[int, Any, Any], Measurement]
    challenge: Callable[[int, Any, Any], int] = lambda a, y, w: y
    classical: ClassicalLaw | None = None
    aux_len: int = 0
    notes: tuple[str, ...] = ()
    params: dict = field(default_factory=dict)

    @property
    def prover_dim(self) -> int:
        return int(np.prod([self.crqs.dims[i] for i in self.prover_reg]))

    @property
    def verifier_dim(self) -> int:
        return int(np.prod([self.crqs.dims[i] for i in self.verifier_reg]))

    def check_input(self, a: int) -> None:
        if a not in self._input_set:
            raise ValueError(f"input {a!r} not in the protocol's alphabet")

    @property
    def _input_set(self) -> frozenset:
        return frozenset(self.inputs)


# ------------------------------------------------------------ the MUB protocol


def _wf_rule(field: Field) -> Callable[[int, int, int], int]:
    add, mul = field.add_table, field.mul_table
    inv = {int(x): int(x.inverse()) for x in field.elements()[1:]}

    def rule(x1: int, x2: int, x3: int) -> int:
        s = int(add[x1, x2])
        return 0 if s == 0 else int(mul[x3, inv[s]])

    return rule


def build_wf_protocol(p: int, n: int = 1, field: Field | None = None) -> WotroProtocol:
    """Three-block MUB protocol with output c = x3 / (x1 + x2).

    The shared state is |Phi>^{3n} over p-dimensional pairs. For input ``a``
    the prover measures its three blocks in the conjugate of basis ``a`` and
    gets x = (x1, x2, x3); the challenge is 0 when x1 + x2 = 0. The verifier
    accepts when its half projects onto |x1>_a|x2>_a|x3>_a and the announced
    challenge matches the same rule.
    """
    field = field or field_new(p, n)
    q = field.order
    count = 3 * n
    crqs = epr_state(p, count)
    rule = _wf_rule(field)
    cache: dict[int, np.ndarray] = {}

    def block_basis(a: int) -> np.ndarray:
        if a not in cache:
            B = _basis_matrix(field, a)
            cache[a] = np.kron(np.kron(B, B), B)
        return cache[a]

    labels = []
    for idx in range(q**3):
        x1, x2, x3 = idx // (q * q), (idx // q) % q, idx % q
        labels.append((rule(x1, x2, x3), (x1, x2, x3)))

    def prover_povm(a: int) -> Measurement:
        return BasisMeasurement(block_basis(a).conj(), labels)

    def verifier_povm(a: int, y: int, w: tuple[int, int, int]) -> Measurement:
        x1, x2, x3 = w
        if rule(x1, x2, x3) != y:
            return ProjectorTest(np.zeros((q**3, 0)), dim=q**3)
        return ProjectorTest(block_basis(a)[:, (x1 * q + x2) * q + x3])

    return WotroProtocol(
        name="wf",
        q=p,
        n=n,
        m=n,
        inputs=list(range(q)),
        challenge_count=q,
        crqs=crqs,
        prover_reg=tuple(range(count)),
        verifier_reg=tuple(range(count, 2 * count)),
        prover_povm=prover_povm,
        verifier_povm=verifier_povm,
        aux_len=3,
        notes=("challenge 0 when x1 + x2 = 0, mirrored by the verifier",),
        params={"p": p, "n": n, "field": field.to_json()},
    )


def wf_verifier_projector(proto: WotroProtocol, a: int, x: tuple[int, int, int]) -> np.ndarray:
    """Verifier acceptance projector for input ``a`` and outcome ``x``."""
    return proto.verifier_povm(a, _wf_rule_from(proto)(*x), x).effects()[1]


def _wf_rule_from(proto: WotroProtocol) -> Callable[[int, int, int], int]:
    f = proto.params["field"]
    return _wf_rule(field_new(f["p"], f["n"], f["modulus"]))


# ------------------------------------------------------- hashed variant


HashFn = Callable[[int, int], int]


@dataclass(frozen=True)
class LinearHash:
    """G(a, c') = M [a; c'] + b over F_p on base-p digit vectors."""

    p: int
    n_in: int
    m: int
    M: tuple[tuple[int, ...], ...]
    b: tuple[int, ...]

    def digits(self, v: int) -> list[int]:
        return [(v // self.p**j) % self.p for j in range(self.n_in)]

    def __call__(self, a: int, c: int) -> int:
        vec = self.digits(a) + self.digits(c)
        out = 0
        for i in range(self.m):
            s = (sum(r * v for r, v in zip(self.M[i], vec)) + self.b[i]) % self.p
            out += s * self.p**i
        return out


def linear_hash_family(p: int, n_in: int, m: int) -> list[LinearHash]:
    """All affine maps F_p^{2 n_in} -> F_p^m (a 2-universal family)."""
    fam = []
    width = 2 * n_in
    for rows in itertools.product(itertools.product(range(p), repeat=width), repeat=m):
        for b in itertools.product(range(p), repeat=m):
            fam.append(LinearHash(p, n_in, m, tuple(rows), tuple(b)))
    return fam


def seeded_linear_hash(p: int, n_in: int, m: int, rng: np.random.Generator) -> LinearHash:
    M = tuple(tuple(int(v) for v in rng.integers(p, size=2 * n_in)) for _ in range(m))
    b = tuple(int(v) for v in rng.integers(p, size=m))
    return LinearHash(p, n_in, m, M, b)


def truncation_hash(p: int, m: int) -> HashFn:
    """G(a, c') = the first m base-p digits of c'."""
    return lambda a, c: c % p**m


def build_hashed_protocol(base: WotroProtocol, hash_fn: HashFn, m: int, p: int | None = None) -> WotroProtocol:
    """Same transcripts as ``base`` with the final challenge G(a, c')."""
    if base.m != base.n or base.classical is not None:
        raise AlphabetMismatch("the base protocol must be quantum with output length equal to input length")
    p = p or base.params.get("p", base.q)
    if p**m > base.challenge_count:
        raise AlphabetMismatch("hash output alphabet larger than the base challenge alphabet")
    base_challenge = base.challenge

    def challenge(a: int, y: Any, w: Any) -> int:
        return int(hash_fn(a, base_challenge(a, y, w)))

    return WotroProtocol(
        name=f"hashed[{base.name}]",
        q=base.q,
        n=base.n,
        m=m,
        inputs=base.inputs,
        challenge_count=p**m,
        crqs=base.crqs,
        prover_reg=base.prover_reg,
        verifier_reg=base.verifier_reg,
        prover_povm=base.prover_povm,
        verifier_povm=base.verifier_povm,
        challenge=challenge,
        aux_len=base.aux_len,
        notes=base.notes,
        params={**base.params, "m": m, "hash": repr(hash_fn)},
    )


# ------------------------------------------------------------ baselines


def _classical_shell(name: str, q: int, n: int, m: int, challenge_count: int, law: ClassicalLaw, params: dict) -> WotroProtocol:
    trivial = StateVec((1, 1), np.ones(1))
    one = BasisMeasurement(np.eye(1), labels=[(None, None)])
    accept = ProjectorTest(np.eye(1))
    return WotroProtocol(
        name=name,
        q=q,
        n=n,
        m=m,
        inputs=list(range(q**n)),
        challenge_count=challenge_count,
        crqs=trivial,
        prover_reg=(0,),
        verifier_reg=(1,),
        prover_povm=lambda a: one,
        verifier_povm=lambda a, y, w: accept,
        classical=law,
        params=params,
    )


def build_baseline(kind: str, q: int = 2, n: int = 1, m: int = 1, blocks: int | None = None) -> WotroProtocol:
    """Classical reference protocols.

    ``trivial_two_message``: the verifier draws c uniformly after seeing a.
    ``crs_direct_m_gt_n``: both parties output the common random string.
    ``crs_blocks``: inputs split into ``blocks`` equal blocks, block i
    outputs the i-th common random word of length n.
    """
    if kind == "trivial_two_message":
        size = q**m
        law = ClassicalLaw(
            sample=lambda rng: int(rng.integers(size)),
            output=lambda a, r: r,
            visible=False,
            exact_law=lambda a: {c: 1.0 / size for c in range(size)},
        )
        return _classical_shell(kind, q, n, m, size, law, {"q": q, "n": n, "m": m})
    if kind == "crs_direct_m_gt_n":
        if m <= n:
            raise BadParams("crs_direct_m_gt_n needs m > n")
        size = q**m
        law = ClassicalLaw(
            sample=lambda rng: int(rng.integers(size)),
            output=lambda a, r: r,
            visible=True,
            exact_law=lambda a: {c: 1.0 / size for c in range(size)},
        )
        return _classical_shell(kind, q, n, m, size, law, {"q": q, "n": n, "m": m})
    if kind == "crs_blocks":
        total = q**n
        if blocks is None or blocks < 1 or total % blocks:
            raise BadParams(f"block count {blocks} must divide {total}")
        width = total // blocks
        law = ClassicalLaw(
            sample=lambda rng: tuple(int(v) for v in rng.integers(total, size=blocks)),
            output=lambda a, r: r[a // width],
            visible=True,
            exact_law=lambda a: {c: 1.0 / total for c in range(total)},
        )
        return _classical_shell(kind, q, n, n, total, law, {"q": q, "n": n, "blocks": blocks})
    raise BadParams(f"unknown baseline {kind!r}")


def block_of(proto: WotroProtocol, a: int) -> int:
    return a // (len(proto.inputs) // proto.params["blocks"])


def crs_blocks_exact_hit(proto: WotroProtocol, target: Callable[[int], int]) -> float:
    """Best hit probability against ``target`` for the block protocol.

    Block i is hit when its random word lies in target(block i); blocks are
    independent.
    """
    blocks = proto.params["blocks"]
    width = len(proto.inputs) // blocks
    miss = 1.0
    for i in range(blocks):
        image = {target(a) for a in range(i * width, (i + 1) * width)}
        miss *= 1.0 - len(image) / proto.challenge_count
    return 1.0 - miss


def crs_blocks_formula(blocks: int) -> float:
    return 1.0 - (1.0 - 1.0 / blocks) ** blocks


# ------------------------------------------------------------------ runs


def honest_run(proto: WotroProtocol, a: int, rng: np.random.Generator) -> Transcript:
    proto.check_input(a)
    if proto.classical is not None:
        r = proto.classical.sample(rng)
        c = proto.classical.output(a, r)
        return Transcript(a, c, None, True, c)
    (y, w), post = measure_sample(proto.crqs, proto.prover_povm(a), proto.prover_reg, rng)
    return _verify(proto, post, a, y, w, rng)


def _verify(proto: WotroProtocol, post: StateVec, a: int, y: Any, w: Any, rng: np.random.Generator) -> Transcript:
    bit, _ = measure_sample(post, proto.verifier_povm(a, y, w), proto.verifier_reg, rng)
    if bit == 1:
        return Transcript(a, y, w, True, proto.challenge(a, y, w))
    return Transcript(a, y, w, False, None)


def challenge_law(proto: WotroProtocol, a: int) -> dict[int, float]:
    """Exact Pr[accept and challenge = c] for the honest prover on input ``a``."""
    proto.check_input(a)
    if proto.classical is not None:
        if proto.classical.exact_law is None:
            raise BadParams("classical law is not enumerable")
        return dict(proto.classical.exact_law(a))
    law: dict[int, float] = {}
    povm = proto.prover_povm(a)
    mat = _to_matrix(proto.crqs.amps, proto.crqs.dims, proto.prover_reg + proto.verifier_reg)
    dv = proto.verifier_dim
    mat = mat.reshape(proto.prover_dim, dv)
    for i, (y, w) in enumerate(povm.labels):
        branch = povm.branch(mat, i)
        # verifier acts on the second tensor factor: transpose to (V, P)
        vmat = branch.T
        p_acc = float(proto.verifier_povm(a, y, w).probabilities(vmat)[1])
        if p_acc > 0:
            c = proto.challenge(a, y, w)
            law[c] = law.get(c, 0.0) + p_acc
    return law


def distance_from_uniform(law: dict[int, float], size: int) -> float:
    """Total variation between the accepted-challenge law and uniform; rejection mass counts in full."""
    dist = np.zeros(size)
    for c, pr in law.items():
        dist[c] += pr
    reject = max(0.0, 1.0 - dist.sum())
    return total_variation(dist, np.full(size, 1.0 / size)) + 0.5 * reject


@dataclass(frozen=True)
class CorrectnessReport:
    accept: Estimate
    exact_accept: dict[int, float] | None
    distances: dict[int, float]
    exact: bool

    @property
    def accept_rate(self) -> float:
        return self.accept.rate

    @property
    def max_distance(self) -> float:
        return max(self.distances.values()) if self.distances else float("nan")

    def to_json(self) -> dict:
        return {
            "accept": self.accept.to_json(),
            "exact_accept": self.exact_accept,
            "distances": {str(k): v for k, v in self.distances.items()},
            "max_distance": self.max_distance,
            "exact": self.exact,
        }


def correctness_audit(
    proto: WotroProtocol,
    trials: int,
    rng: np.random.Generator,
    inputs: Sequence[int] | None = None,
    exact: bool | None = None,
) -> CorrectnessReport:
    """Honest acceptance rate and per-input distance of the challenge law from uniform.

    Exact enumeration is used for the distances whenever the prover register
    has at most 729 outcomes, otherwise they are estimated from the sampled
    trials.
    """
    inputs = list(proto.inputs if inputs is None else inputs)
    if exact is None:
        exact = proto.classical is not None and proto.classical.exact_law is not None or (
            proto.classical is None and proto.prover_dim <= 729
        )
    accepted = 0
    counts = {a: np.zeros(proto.challenge_count) for a in inputs}
    runs = {a: 0 for a in inputs}
    for t in range(trials):
        a = inputs[t % len(inputs)]
        tr = honest_run(proto, a, rng)
        runs[a] += 1
        if tr.accepted:
            accepted += 1
            counts[a][tr.c] += 1
    distances: dict[int, float] = {}
    exact_accept = None
    if exact:
        exact_accept = {}
        for a in inputs:
            law = challenge_law(proto, a)
            exact_accept[a] = float(sum(law.values()))
            distances[a] = distance_from_uniform(law, proto.challenge_count)
    else:
        for a in inputs:
            if runs[a]:
                emp = {c: counts[a][c] / runs[a] for c in range(proto.challenge_count)}
                distances[a] = distance_from_uniform(emp, proto.challenge_count)
    return CorrectnessReport(wilson(accepted, trials), exact_accept, distances, bool(exact))


# ----------------------------------------------------------- avoidance


class Adversary:
    """Cheating prover: returns a full transcript for one execution."""

    description = "adversary"

    def play(self, proto: WotroProtocol, rng: np.random.Generator) -> Transcript:
        raise NotImplementedError


@dataclass
class HonestAdversary(Adversary):
    """Honest prover on an input chosen by ``choose`` (uniform by default)."""

    choose: Callable[[np.random.Generator], int] | None = None
    description: str = "honest prover"

    def play(self, proto, rng):
        a = self.choose(rng) if self.choose else int(rng.choice(proto.inputs))
        return honest_run(proto, a, rng)


@dataclass
class PovmAdversary(Adversary):
    """Single measurement on the prover register with labels (a, y, w) or ``None`` for abort."""

    measurement: Measurement
    description: str = "measurement adversary"

    def play(self, proto, rng):
        label, post = measure_sample(proto.crqs, self.measurement, proto.prover_reg, rng)
        if label is BOT:
            return Transcript(None, None, None, False, None)
        a, y, w = label
        return _verify(proto, post, a, y, w, rng)


@dataclass
class ClassicalAdversary(Adversary):
    """Chooses an input from the common random string (``None`` when hidden)."""

    choose: Callable[[Any, np.random.Generator], int]
    description: str = "classical adversary"

    def play(self, proto, rng):
        law = proto.classical
        r = law.sample(rng)
        a = self.choose(r if law.visible else None, rng)
        proto.check_input(a)
        c = law.output(a, r)
        return Transcript(a, c, None, True, c)


def block_adversary(proto: WotroProtocol, target: Callable[[int], int]) -> ClassicalAdversary:
    """Best strategy against the block protocol: find a block whose word is in its target image."""
    blocks = proto.params["blocks"]
    width = len(proto.inputs) // blocks
    preimage = [{} for _ in range(blocks)]
    for a in proto.inputs:
        preimage[a // width].setdefault(target(a), a)

    def choose(r, rng):
        for i, word in enumerate(r):
            if word in preimage[i]:
                return preimage[i][word]
        return 0

    return ClassicalAdversary(choose, "block adversary")


def direct_adversary(proto: WotroProtocol, target: Callable[[int], int]) -> ClassicalAdversary:
    pre = {}
    for a in proto.inputs:
        pre.setdefault(target(a), a)
    return ClassicalAdversary(lambda r, rng: pre.get(r, 0), "preimage adversary")


@dataclass(frozen=True)
class AvoidanceReport:
    target: str
    adversary: str
    hits: int
    trials: int
    estimate: Estimate

    @property
    def hit_prob(self) -> float:
        return self.estimate.rate

    def to_json(self) -> dict:
        return {"target": self.target, "adversary": self.adversary, **self.estimate.to_json()}


def avoidance_audit(
    proto: WotroProtocol,
    adversary: Adversary,
    target: Callable[[int], int],
    trials: int,
    rng: np.random.Generator,
    target_name: str = "c(.)",
) -> AvoidanceReport:
    """Estimate Pr[verifier accepts and challenge = target(a)]."""
    hits = 0
    for _ in range(trials):
        tr = adversary.play(proto, rng)
        if tr.accepted and tr.c == target(tr.a):
            hits += 1
    return AvoidanceReport(target_name, adversary.description, hits, trials, wilson(hits, trials))


def random_target(proto: WotroProtocol, rng: np.random.Generator) -> Callable[[int], int]:
    table = {a: int(rng.integers(proto.challenge_count)) for a in proto.inputs}
    return table.__getitem__
