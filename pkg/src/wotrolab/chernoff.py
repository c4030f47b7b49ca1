"""Rescaled-measurement attacks, the honest simulator, and exact audits.

For a target table f the attack measures the prover register with
P^f_{a,w} = N^a_{f(a),w} / ((1 + eta) q^{n-m}) and aborts on the remainder.
Everything here is computed exactly by dense linear algebra; sampling is only
used where a Monte-Carlo cross-check is wanted.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterable, NamedTuple, Sequence

import numpy as np

from .errors import TooLarge, TooManyFunctions
from .qsim import (
    BasisMeasurement,
    Povm,
    ProjectorTest,
    StateVec,
    _to_matrix,
    epr_state,
    eigvalsh,
    measure_sample,
    povm_validate,
    psd_part,
    trace_distance,
)
from .wotro import BOT, PovmAdversary, WotroProtocol


class Eta(NamedTuple):
    value: float
    vacuous: bool


def eta(n: int, m: int, k: int, q: int = 2) -> Eta:
    """sqrt(2 ln2 (n + k) q^{m-n}); vacuous when above 1/2."""
    if n < m or m < 1 or k < 1:
        raise ValueError("need n >= m >= 1 and k >= 1")
    v = math.sqrt(2 * math.log(2) * (n + k) * float(q) ** (m - n))
    return Eta(v, v > 0.5)


# --------------------------------------------------------------- toy protocol


_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def product_basis(k: int, pattern: int) -> np.ndarray:
    """k-qubit basis: qubit i (most significant first) uses Hadamard when bit i of pattern is set."""
    U = np.ones((1, 1), dtype=complex)
    for i in range(k):
        bit = (pattern >> (k - 1 - i)) & 1
        U = np.kron(U, _H if bit else np.eye(2))
    return U


def build_binary_toy(n: int, m: int, k: int) -> WotroProtocol:
    """Binary protocol on k EPR qubit pairs.

    Input a selects the product basis with pattern a mod 2^k; the prover
    measures its k qubits, outputs the top m outcome bits as y, and keeps no
    aux string. The verifier projects its half onto the outcomes whose top m
    bits equal y. Honest acceptance is 1.
    """
    if not (1 <= m <= k):
        raise ValueError("need 1 <= m <= k")
    d = 2**k
    crqs = epr_state(2, k)
    bases = {b: product_basis(k, b) for b in range(min(d, 2**n))}
    shift = k - m

    def prover_povm(a: int) -> Povm:
        U = bases[a % d]
        outs = []
        for y in range(2**m):
            cols = U[:, [o for o in range(d) if o >> shift == y]]
            outs.append(((y, None), cols @ cols.conj().T))
        return Povm(outs)

    def verifier_povm(a: int, y: int, w: Any) -> ProjectorTest:
        U = bases[a % d]
        # real bases, so prover and verifier use the same vectors
        return ProjectorTest(U[:, [o for o in range(d) if o >> shift == y]])

    return WotroProtocol(
        name="binary_toy",
        q=2,
        n=n,
        m=m,
        inputs=list(range(2**n)),
        challenge_count=2**m,
        crqs=crqs,
        prover_reg=tuple(range(k)),
        verifier_reg=tuple(range(k, 2 * k)),
        prover_povm=prover_povm,
        verifier_povm=verifier_povm,
        params={"n": n, "m": m, "k": k},
    )


# ---------------------------------------------------------------- attack


def _grouped_effects(proto: WotroProtocol, a: int) -> dict[tuple, np.ndarray]:
    """Prover effects N^a_{y,w} keyed by (y, w), summing repeated labels."""
    povm = proto.prover_povm(a)
    out: dict[tuple, np.ndarray] = {}
    for (y, w), E in zip(povm.labels, povm.effects()):
        key = (y, w)
        out[key] = out[key] + E if key in out else E
    return out


def protocol_eta(proto: WotroProtocol) -> Eta:
    k = proto.params.get("k", proto.aux_len or 1)
    return eta(proto.n, proto.m, k, proto.q)


def _scale(proto: WotroProtocol, eta_value: float) -> float:
    return (1.0 + eta_value) * len(proto.inputs) / proto.challenge_count


@dataclass(eq=False)
class AttackPovm:
    f: tuple[int, ...]
    ops: dict[tuple[int, Any], np.ndarray]
    bottom: np.ndarray
    eta: float
    valid: bool
    sum_max_eig: float
    sum_min_eig: float
    raw_bottom_min_eig: float

    @property
    def nonphysical(self) -> bool:
        return not self.valid

    def measurement(self) -> Povm:
        """Outcomes (a, f(a), w) plus ``None`` for abort."""
        outs = [((a, self.f[a], w), P) for (a, w), P in self.ops.items()]
        outs.append((BOT, self.bottom))
        return Povm(outs)

    def adversary(self) -> PovmAdversary:
        return PovmAdversary(self.measurement(), f"rescaled attack f={self.f}")

    def summary(self) -> dict:
        return {
            "f": list(self.f),
            "eta": self.eta,
            "valid": self.valid,
            "sum_max_eig": self.sum_max_eig,
            "sum_min_eig": self.sum_min_eig,
        }


def build_attack(proto: WotroProtocol, f: Sequence[int], eta_value: float | None = None) -> AttackPovm:
    f = tuple(int(v) for v in f)
    if len(f) != len(proto.inputs):
        raise ValueError("f must be total on the input set")
    ev = protocol_eta(proto).value if eta_value is None else eta_value
    s = _scale(proto, ev)
    ops: dict[tuple[int, Any], np.ndarray] = {}
    for a in proto.inputs:
        for (y, w), E in _grouped_effects(proto, a).items():
            if y == f[a]:
                ops[(a, w)] = E / s
    total = np.sum(list(ops.values()), axis=0)
    d = total.shape[0]
    w_sum = eigvalsh(total)
    raw_bottom = np.eye(d) - total
    valid = bool(w_sum[-1] <= 1 + 1e-9)
    bottom = raw_bottom if valid else psd_part(raw_bottom)
    return AttackPovm(f, ops, bottom, ev, valid, float(w_sum[-1]), float(w_sum[0]), float(1 - w_sum[-1]))


def _psi_matrix(proto: WotroProtocol) -> np.ndarray:
    return _to_matrix(proto.crqs.amps, proto.crqs.dims, proto.prover_reg + proto.verifier_reg).reshape(
        proto.prover_dim, proto.verifier_dim
    )


def joint_accept(proto: WotroProtocol, A: np.ndarray, a: int, y: Any, w: Any, psi: np.ndarray | None = None) -> float:
    """tr((A (x) V_1^{a,y,w}) Psi) for an operator A on the prover register."""
    psi = _psi_matrix(proto) if psi is None else psi
    test = proto.verifier_povm(a, y, w)
    W = test.W if isinstance(test, ProjectorTest) else None
    if W is not None:
        X = psi @ W.conj()
        return float(np.real(np.trace(X.conj().T @ A @ X)))
    V1 = test.effects()[1]
    return float(np.real(np.trace(psi.conj().T @ A @ psi @ V1.T)))


def attack_success(proto: WotroProtocol, attack: AttackPovm) -> float:
    """Exact Pr[challenge = f(a) and the verifier accepts]."""
    psi = _psi_matrix(proto)
    return sum(joint_accept(proto, P, a, attack.f[a], w, psi) for (a, w), P in attack.ops.items())


def honest_acceptance(proto: WotroProtocol) -> float:
    """delta: honest acceptance probability averaged over inputs."""
    psi = _psi_matrix(proto)
    total = 0.0
    for a in proto.inputs:
        for (y, w), E in _grouped_effects(proto, a).items():
            total += joint_accept(proto, E, a, y, w, psi)
    return total / len(proto.inputs)


def all_tables(proto: WotroProtocol) -> Iterable[tuple[int, ...]]:
    return itertools.product(range(proto.challenge_count), repeat=len(proto.inputs))


def function_count(proto: WotroProtocol) -> int:
    return proto.challenge_count ** len(proto.inputs)


@dataclass
class EnumerationReport:
    total_f: int
    valid_count: int
    exact_mean_success: float
    predicted: float
    delta: float
    eta: float
    eta_vacuous: bool
    mean_operator_error: float
    bracket: dict[str, float] = field(default_factory=dict)
    successes: list[float] = field(default_factory=list)

    @property
    def fraction_in_Fstar(self) -> float:
        return self.valid_count / self.total_f

    @property
    def identity_error(self) -> float:
        return abs(self.exact_mean_success - self.predicted)

    def to_json(self) -> dict:
        return {
            "total_f": self.total_f,
            "valid_count": self.valid_count,
            "fraction_in_Fstar": self.fraction_in_Fstar,
            "exact_mean_success": self.exact_mean_success,
            "predicted_delta_over_1_plus_eta": self.predicted,
            "identity_error": self.identity_error,
            "delta": self.delta,
            "eta": self.eta,
            "eta_vacuous": self.eta_vacuous,
            "mean_operator_error": self.mean_operator_error,
            "bracket_informational": self.bracket,
        }


def enumerate_f_audit(proto: WotroProtocol, limit: int = 4096, t_grid: Sequence[float] = (1.0, 1.5, 2.0)) -> EnumerationReport:
    """Build the attack for every table f and average the exact success.

    Also checks E_f[sum_w N^a_{f(a),w}] = I / q^m per input and records, for
    information, how often the normalised operator sum q^{m-n} sum_a X^f_a
    falls in [1 - t eta, 1 + t eta].
    """
    total = function_count(proto)
    if total > limit:
        raise TooManyFunctions(f"{total} tables exceed limit {limit}")
    ev = protocol_eta(proto)
    effects = {a: _grouped_effects(proto, a) for a in proto.inputs}
    d = proto.prover_dim
    X_sum = {a: np.zeros((d, d), dtype=complex) for a in proto.inputs}
    successes = []
    valid = 0
    norm_factor = proto.challenge_count / len(proto.inputs)
    inside = {t: 0 for t in t_grid}
    for f in all_tables(proto):
        att = build_attack(proto, f, ev.value)
        successes.append(attack_success(proto, att))
        valid += att.valid
        Xtot = np.zeros((d, d), dtype=complex)
        for a in proto.inputs:
            Xa = sum((E for (y, w), E in effects[a].items() if y == f[a]), np.zeros((d, d), dtype=complex))
            X_sum[a] += Xa
            Xtot += Xa
        w = eigvalsh(Xtot * norm_factor)
        for t in t_grid:
            inside[t] += bool(w[0] >= 1 - t * ev.value - 1e-12 and w[-1] <= 1 + t * ev.value + 1e-12)
    target = np.eye(d) / proto.challenge_count
    op_err = max(float(np.max(np.abs(X_sum[a] / total - target))) for a in proto.inputs)
    delta = honest_acceptance(proto)
    mean = float(np.mean(successes))
    rep = EnumerationReport(
        total_f=total,
        valid_count=valid,
        exact_mean_success=mean,
        predicted=delta / (1 + ev.value),
        delta=delta,
        eta=ev.value,
        eta_vacuous=ev.vacuous,
        mean_operator_error=op_err,
        bracket={f"t={t:g}": inside[t] / total for t in t_grid},
        successes=successes,
    )
    return rep


# -------------------------------------------------------------- simulator


def simulator_step(proto: WotroProtocol, rng: np.random.Generator, return_state: bool = False):
    """Uniform a, then the honest measurement on a fresh shared state.

    With ``return_state`` the post-measurement shared state is returned too,
    so a verifier can act on its half.
    """
    a = int(rng.choice(proto.inputs))
    (y, w), post = measure_sample(proto.crqs, proto.prover_povm(a), proto.prover_reg, rng)
    if return_state:
        return (a, y, w), post
    return a, y, w


# ------------------------------------------------------- hybrid distances


@dataclass
class DistinguisherCircuit:
    """Query machine for the exact hybrid computation.

    ``initial`` lives on registers P_1 ... P_q followed by a memory Z. Query
    i consumes P_i and returns a classical label. ``unitaries[i]`` maps the
    history after i queries to a unitary on the registers still held (or
    ``None``). ``view`` coarse-grains the final history; the circuit's
    output is the classical view together with the remaining memory.
    """

    queries: int
    initial: StateVec
    p_dim: int
    unitaries: list[Callable[[tuple], np.ndarray | None]] = field(default_factory=list)
    view: Callable[[tuple], Hashable] = lambda h: h

    def __post_init__(self) -> None:
        self.unitaries = list(self.unitaries) + [lambda h: None] * (self.queries + 1 - len(self.unitaries))
        for U_fn in self.unitaries:
            U = U_fn(())
            if U is not None and np.linalg.norm(U.conj().T @ U - np.eye(U.shape[0]), 2) > 1e-8:
                raise ValueError("interleaving operators must be unitary")

    @property
    def memory_dim(self) -> int:
        return self.initial.dim // self.p_dim**self.queries


def entangled_circuit(p_dim: int, queries: int = 1, view: Callable[[tuple], Hashable] | None = None) -> DistinguisherCircuit:
    """Each P_i maximally entangled with its own memory qudit."""
    d = p_dim
    phi = np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)
    amps = np.ones(1, dtype=complex)
    for _ in range(queries):
        amps = np.kron(amps, phi)
    # reorder from (P1 Z1 P2 Z2 ...) to (P1 ... Pq Z1 ... Zq)
    t = amps.reshape([d] * (2 * queries))
    order = [2 * i for i in range(queries)] + [2 * i + 1 for i in range(queries)]
    amps = t.transpose(order).reshape(-1)
    init = StateVec((d**queries, d**queries), amps)
    return DistinguisherCircuit(queries, init, d, view=view or (lambda h: h))


Channel = Callable[[int], list[tuple[Hashable, np.ndarray]]]


def _run_exact(circuit: DistinguisherCircuit, oracles: Sequence[list[tuple[Hashable, np.ndarray]]]) -> dict[Hashable, np.ndarray]:
    """Evolve the circuit with the given measurement oracles (one per query).

    Returns the unnormalised memory operator for each classical view.
    """
    d = circuit.p_dim
    rho = np.outer(circuit.initial.amps, circuit.initial.amps.conj())
    branches: dict[tuple, np.ndarray] = {(): rho}
    U0 = circuit.unitaries[0](())
    if U0 is not None:
        branches = {(): U0 @ rho @ U0.conj().T}
    for i, oracle in enumerate(oracles):
        new: dict[tuple, np.ndarray] = {}
        for hist, r in branches.items():
            rest = r.shape[0] // d
            r4 = r.reshape(d, rest, d, rest)
            for label, E in oracle:
                # tr_P((E (x) I) r)
                out = np.einsum("ji,iajb->ab", E, r4)
                h2 = hist + (label,)
                U = circuit.unitaries[i + 1](h2)
                if U is not None:
                    out = U @ out @ U.conj().T
                new[h2] = new[h2] + out if h2 in new else out
        branches = new
    result: dict[Hashable, np.ndarray] = {}
    for hist, r in branches.items():
        key = circuit.view(hist)
        result[key] = result[key] + r if key in result else r
    return result


def _cq_distance(x: dict[Hashable, np.ndarray], y: dict[Hashable, np.ndarray]) -> float:
    keys = set(x) | set(y)
    total = 0.0
    for k in keys:
        A = x.get(k)
        B = y.get(k)
        if A is None:
            A = np.zeros_like(B)
        if B is None:
            B = np.zeros_like(A)
        total += trace_distance(A, B)
    return total


def simulator_oracle(proto: WotroProtocol) -> list[tuple[Hashable, np.ndarray]]:
    """Uniform a, then the honest measurement: effects N^a_{y,w} / |inputs|."""
    outs = []
    for a in proto.inputs:
        for (y, w), E in _grouped_effects(proto, a).items():
            outs.append(((a, y, w), E / len(proto.inputs)))
    return outs


def attack_oracle(att: AttackPovm) -> list[tuple[Hashable, np.ndarray]]:
    return list(att.measurement().outcomes)


def _average(maps: Iterable[dict[Hashable, np.ndarray]], count: int) -> dict[Hashable, np.ndarray]:
    acc: dict[Hashable, np.ndarray] = {}
    for mp in maps:
        for k, v in mp.items():
            acc[k] = acc[k] + v if k in acc else v.copy()
    return {k: v / count for k, v in acc.items()}


@dataclass
class HybridReport:
    hybrids: list[float]
    consecutive: list[float]
    total: float
    eta: float
    valid_fraction: float
    function_count: int

    def to_json(self) -> dict:
        return dict(self.__dict__)


def hybrid_distance(
    proto: WotroProtocol,
    circuit: DistinguisherCircuit | None = None,
    mode: str = "exact",
    limit: int = 1 << 16,
    rng: np.random.Generator | None = None,
    samples: int = 1000,
) -> HybridReport:
    """Exact distances between the hybrids H_0 ... H_q.

    H_j answers the first j queries with the simulator and the rest with the
    attack, one table f per run, averaged over all f. ``total`` is the
    distance between H_q (all simulator) and H_0 (all attack).
    In ``sampled`` mode the f-average is replaced by ``samples`` uniform f.
    """
    circuit = circuit or entangled_circuit(proto.prover_dim, 1)
    if circuit.p_dim != proto.prover_dim:
        raise ValueError("circuit register does not match the prover register")
    qn = circuit.queries
    ev = protocol_eta(proto).value
    if mode == "exact":
        total_f = function_count(proto)
        if total_f > limit:
            raise TooLarge(f"{total_f} tables exceed limit {limit}")
        tables: Iterable[tuple[int, ...]] = all_tables(proto)
        count = total_f
    elif mode == "sampled":
        if rng is None:
            raise ValueError("sampled mode needs an rng")
        count = samples
        tables = [tuple(int(v) for v in rng.integers(proto.challenge_count, size=len(proto.inputs))) for _ in range(samples)]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    sim = simulator_oracle(proto)
    if qn == 1:
        return _single_query(proto, circuit, sim, tables, count, ev)
    attacks = [build_attack(proto, f, ev) for f in tables]
    valid = sum(a.valid for a in attacks)
    hybrids_states = []
    for j in range(qn + 1):
        outs = (_run_exact(circuit, [sim] * j + [attack_oracle(att)] * (qn - j)) for att in attacks)
        hybrids_states.append(_average(outs, count))
    consecutive = [_cq_distance(hybrids_states[j], hybrids_states[j + 1]) for j in range(qn)]
    total = _cq_distance(hybrids_states[qn], hybrids_states[0])
    return HybridReport(
        [_cq_distance(hybrids_states[j], hybrids_states[0]) for j in range(qn + 1)],
        consecutive,
        total,
        ev,
        valid / count,
        count,
    )


def _single_query(proto, circuit, sim, tables, count, ev) -> HybridReport:
    """One query: only the abort branch depends non-linearly on f, so the
    attack outputs are accumulated in closed form per label and the abort
    operator is averaged over f in batches."""
    effects = {a: _grouped_effects(proto, a) for a in proto.inputs}
    s = _scale(proto, ev)
    d = proto.prover_dim
    inputs = list(proto.inputs)
    labels = []
    for a in inputs:
        for (y, w) in effects[a]:
            labels.append((a, y, w))
    # stacked N^a_y summed over w, indexed [a, y]
    stack = np.zeros((len(inputs), proto.challenge_count, d, d), dtype=complex)
    for ai, a in enumerate(inputs):
        for (y, w), E in effects[a].items():
            stack[ai, y] += E
    att_label_weight = {lab: 0.0 for lab in labels}
    bottom_sum = np.zeros((d, d), dtype=complex)
    valid = 0
    batch: list[tuple[int, ...]] = []

    def flush(batch):
        nonlocal bottom_sum, valid
        F = np.array(batch)
        sums = stack[np.arange(len(inputs))[None, :], F].sum(axis=1) / s
        w, U = np.linalg.eigh(sums)
        valid += int(np.sum(w[:, -1] <= 1 + 1e-9))
        wb = np.clip(1.0 - w, 0.0, None)
        bottom_sum += np.einsum("fij,fj,fkj->ik", U, wb, U.conj())

    for f in tables:
        for ai, a in enumerate(inputs):
            for (y, w) in effects[a]:
                if y == f[ai]:
                    att_label_weight[(a, y, w)] += 1.0
        batch.append(tuple(f))
        if len(batch) >= 4096:
            flush(batch)
            batch = []
    if batch:
        flush(batch)
    att = [((a, y, w), effects[a][(y, w)] * att_label_weight[(a, y, w)] / (count * s)) for (a, y, w) in labels]
    att.append((BOT, bottom_sum / count))
    h_att = _run_exact(circuit, [att])
    h_sim = _run_exact(circuit, [sim])
    dist = _cq_distance(h_sim, h_att)
    return HybridReport([0.0, dist], [dist], dist, ev, valid / count, count)


def analytic_single_query_distance(eta_value: float) -> float:
    """eta / (1 + eta): the single-query distance when every table gives a valid POVM."""
    return eta_value / (1.0 + eta_value)


# ------------------------------------------------------- shelter state


@dataclass
class ShelterReport:
    state: StateVec
    delta: float
    per_a_max_weight: np.ndarray
    image_size: int

    def to_json(self) -> dict:
        return {"delta": self.delta, "image_size": self.image_size}


def shelter_attack_state(h: Callable[[int], int], p: int, n: int, m: int) -> ShelterReport:
    """Superposition hitting c(a) = first m digits of a under G(a, x) = h(x).

    Builds sum_x sum_{a : a mod p^m = h(x)} |a>_A |x>_X (normalised) and
    returns the colliding mass 1 - sum_a |alpha_a|^2 max_x |gamma^a_x|^2.
    """
    q, qm = p**n, p**m
    if q * q > 10**6:
        raise TooLarge("state exceeds the vector cap")
    if m > n:
        raise ValueError("need m <= n")
    hx = np.array([int(h(x)) % qm for x in range(q)])
    amps = np.zeros((q, q))
    for a in range(q):
        amps[a, hx == a % qm] = 1.0
    amps /= np.linalg.norm(amps)
    state = StateVec((q, q), amps.reshape(-1))
    weights = np.abs(amps) ** 2
    max_branch = weights.max(axis=1)
    delta = 1.0 - float(max_branch.sum())
    return ShelterReport(state, delta, max_branch, len(set(hx.tolist())))
