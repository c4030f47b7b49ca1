"""Quantum lightning mocks, typed lightning by rejection sampling, the
pairwise collision finder, and the one-message protocol that teleports a
typed bolt.

Serial numbers are integers in [0, 2^m). Types are integers in [0, 2^t).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .errors import BadParams, Exhausted, RetryExhausted
from .gf import binary_field, field_new
from .mub import _basis_matrix
from .qsim import StateVec, epr_state, teleport
from .stats import Estimate, wilson
from .wotro import Transcript

MAX_TYPE_BITS = 10


@dataclass(frozen=True)
class Bolt:
    """Bolt state (``None`` for the classical mock) plus a classical tag."""

    state: StateVec | None
    tag: Any


@dataclass(frozen=True)
class QlScheme:
    """setup(rng) -> storm; gen(storm, rng) -> Bolt; ver(storm, bolt) -> serial or None."""

    serial_bits: int
    setup: Callable[[np.random.Generator], Any]
    gen: Callable[[Any, np.random.Generator], Bolt]
    ver: Callable[[Any, Bolt], int | None]
    name: str = "ql"


def mock_ql(serial_bits: int) -> QlScheme:
    """Classical mock: a bolt is a tag (storm id, serial) with a uniform serial."""

    def setup(rng):
        return int(rng.integers(1 << 62))

    def gen(storm, rng):
        return Bolt(None, (storm, int(rng.integers(1 << serial_bits))))

    def ver(storm, bolt):
        sid, s = bolt.tag
        return s if sid == storm else None

    return QlScheme(serial_bits, setup, gen, ver, "mock")


def toy_quantum_ql(p: int = 3, n: int = 1) -> QlScheme:
    """Bolt = basis vector |u>_b of a quadratic-phase basis over F_{p^n}.

    The tag is the basis index b and the serial is b * p^n + u. Verification
    measures in basis b, which leaves an honest bolt unchanged.
    """
    F = field_new(p, n)
    d = F.order
    bits = max(1, math.ceil(math.log2(d * d)))

    def setup(rng):
        return F

    def gen(storm, rng):
        b = int(rng.integers(d))
        u = int(rng.integers(d))
        return Bolt(StateVec((p,) * n, _basis_matrix(F, b)[:, u].copy()), b)

    def ver(storm, bolt):
        b = bolt.tag
        probs = np.abs(_basis_matrix(F, b).conj().T @ bolt.state.amps) ** 2
        u = int(np.argmax(probs))
        if probs[u] < 1 - 1e-9:
            return None
        return b * d + u

    return QlScheme(bits, setup, gen, ver, f"toy_quantum_p{p}_n{n}")


# ------------------------------------------------------------ t-wise hashing


def _modulus_mask(m: int) -> int:
    return sum(int(c) << i for i, c in enumerate(binary_field(m).modulus))


def gf2_mul(x: int, y: int, m: int, mask: int) -> int:
    """Product in F_{2^m}; bit i of an integer is the coefficient of t^i."""
    acc = 0
    while y:
        if y & 1:
            acc ^= x
        y >>= 1
        x <<= 1
        if x >> m:
            x ^= mask
    return acc


@dataclass
class TWiseHash:
    """h(s) = low ``out_bits`` bits of sum_i coeffs[i] s^i over F_{2^m}.

    A uniformly random polynomial of degree < k is k-wise independent on
    F_{2^m}; truncating uniform field elements keeps the outputs uniform.
    """

    m: int
    coeffs: tuple[int, ...]
    out_bits: int
    _mask: int = field(init=False, repr=False)
    _cache: dict[int, int] = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self) -> None:
        self._mask = _modulus_mask(self.m)

    @property
    def independence(self) -> int:
        return len(self.coeffs)

    def evaluate(self, s: int) -> int:
        acc = 0
        for c in reversed(self.coeffs):
            acc = gf2_mul(acc, s, self.m, self._mask) ^ c
        return acc

    def __call__(self, s: int) -> int:
        s = int(s)
        if s not in self._cache:
            self._cache[s] = self.evaluate(s) & ((1 << self.out_bits) - 1)
        return self._cache[s]


def twise_hash(m: int, k: int, out_bits: int, rng: np.random.Generator) -> TWiseHash:
    if out_bits > m:
        raise BadParams("hash output longer than its input")
    coeffs = tuple(int(c) for c in rng.integers(1 << m, size=k))
    return TWiseHash(m, coeffs, out_bits)


# ------------------------------------------------------------ typed lightning


@dataclass(frozen=True)
class TypedStorm:
    storm: Any
    h: TWiseHash


@dataclass(frozen=True)
class TqlScheme:
    """Typed lightning from ``ql`` with ``type_bits``-bit types.

    ``security`` is the parameter n in the retry cap n * 2^type_bits and in
    the independence degree of the hash.
    """

    ql: QlScheme
    type_bits: int
    security: int

    @property
    def types(self) -> int:
        return 1 << self.type_bits

    @property
    def retry_cap(self) -> int:
        return self.security * self.types

    def setup(self, rng: np.random.Generator) -> TypedStorm:
        h = twise_hash(self.ql.serial_bits, self.retry_cap, self.type_bits, rng)
        return TypedStorm(self.ql.setup(rng), h)

    def gen_counted(self, storm: TypedStorm, a: int, rng: np.random.Generator) -> tuple[Bolt, int]:
        """Bolt of type ``a`` and the number of underlying generations used."""
        if not 0 <= a < self.types:
            raise BadParams(f"type {a} out of range")
        for tries in range(1, self.retry_cap + 1):
            bolt = self.ql.gen(storm.storm, rng)
            s = self.ql.ver(storm.storm, bolt)
            if s is not None and storm.h(s) == a:
                return bolt, tries
        raise RetryExhausted(f"no bolt of type {a} after {self.retry_cap} tries")

    def gen(self, storm: TypedStorm, a: int, rng: np.random.Generator) -> Bolt:
        return self.gen_counted(storm, a, rng)[0]

    def ver(self, storm: TypedStorm, bolt: Bolt) -> tuple[int, int] | None:
        s = self.ql.ver(storm.storm, bolt)
        if s is None:
            return None
        return storm.h(s), s


def tql_from_ql(ql: QlScheme, type_bits: int, security: int) -> TqlScheme:
    if not 1 <= type_bits <= MAX_TYPE_BITS:
        raise BadParams(f"type length must be in [1, {MAX_TYPE_BITS}]")
    if type_bits > ql.serial_bits:
        raise BadParams("types longer than serial numbers")
    if security < 1:
        raise BadParams("security parameter must be positive")
    return TqlScheme(ql, type_bits, security)


@dataclass(frozen=True)
class RetryReport:
    calls: int
    mean_retries: float
    retry_std: float
    exhausted: int
    expected_mean: float
    exhaustion_bound: float
    type_consistent: bool

    @property
    def exhaustion(self) -> Estimate:
        return wilson(self.exhausted, self.calls)

    def mean_within(self, k: float = 3.0) -> bool:
        completed = self.calls - self.exhausted
        q = 1.0 / self.expected_mean
        sigma = math.sqrt((1 - q) / q**2 / max(completed, 1))
        return abs(self.mean_retries - self.expected_mean) <= k * sigma

    def to_json(self) -> dict:
        return {
            "calls": self.calls,
            "mean_retries": self.mean_retries,
            "retry_std": self.retry_std,
            "expected_mean": self.expected_mean,
            "exhausted": self.exhausted,
            "exhaustion_bound": self.exhaustion_bound,
            "exhaustion": self.exhaustion.to_json(),
            "type_consistent": self.type_consistent,
        }


def retry_audit(tql: TqlScheme, calls: int, rng: np.random.Generator, fresh_setup: bool = True) -> RetryReport:
    """Generate ``calls`` typed bolts with uniform types.

    With ``fresh_setup`` each call draws a new storm and hash, which is the
    probability space of the exhaustion bound (1 - 1/p)^(n p) <= e^-n.
    """
    storm = tql.setup(rng)
    tries: list[int] = []
    exhausted = 0
    consistent = True
    for _ in range(calls):
        if fresh_setup:
            storm = tql.setup(rng)
        a = int(rng.integers(tql.types))
        try:
            bolt, t = tql.gen_counted(storm, a, rng)
        except RetryExhausted:
            exhausted += 1
            continue
        tries.append(t)
        got = tql.ver(storm, bolt)
        consistent &= got is not None and got[0] == a
    arr = np.asarray(tries, dtype=float)
    return RetryReport(
        calls=calls,
        mean_retries=float(arr.mean()) if arr.size else float("nan"),
        retry_std=float(arr.std(ddof=1)) if arr.size > 1 else float("nan"),
        exhausted=exhausted,
        expected_mean=float(tql.types),
        exhaustion_bound=math.exp(-tql.security),
        type_consistent=bool(consistent),
    )


def exhaustion_probability(type_bits: int, security: int) -> float:
    """(1 - 2^-t)^(n 2^t), the chance one call exhausts its retries."""
    p = 1 << type_bits
    return (1 - 1 / p) ** (security * p)


# ------------------------------------------------------------ collisions


@dataclass(frozen=True)
class Collision:
    first: Bolt
    second: Bolt
    serial: int
    pairs: int


def collision_finder(
    gen: Callable[[np.random.Generator], Bolt],
    ver: Callable[[Bolt], int | None],
    rng: np.random.Generator,
    budget: int,
) -> Collision:
    """Draw bolt pairs until both verify to the same serial."""
    if budget < 1:
        raise BadParams("budget must be >= 1")
    for pairs in range(1, budget + 1):
        b1, b2 = gen(rng), gen(rng)
        s1, s2 = ver(b1), ver(b2)
        if s1 is not None and s1 == s2:
            return Collision(b1, b2, s1, pairs)
    raise Exhausted(f"no collision in {budget} pairs")


@dataclass(frozen=True)
class PlantedAdversary:
    """Outputs type ``a`` bolts whose serial follows ``law`` (value -> probability).

    Against the mock scheme any tag verifies, so the adversary simply forges
    tags.
    """

    storm: TypedStorm
    a: int
    values: tuple[int, ...]
    probs: tuple[float, ...]

    def gen(self, rng: np.random.Generator) -> Bolt:
        s = self.values[int(rng.choice(len(self.values), p=self.probs))]
        return Bolt(None, (self.storm.storm, s))

    @property
    def collision_entropy(self) -> float:
        return collision_entropy(self.probs)


def planted_adversary(tql: TqlScheme, storm: TypedStorm, a: int, count: int, rng: np.random.Generator) -> PlantedAdversary:
    """Uniform over ``count`` distinct serials of type ``a``."""
    pool = [s for s in range(1 << tql.ql.serial_bits) if storm.h(s) == a]
    if len(pool) < count:
        raise BadParams(f"only {len(pool)} serials of type {a}")
    pick = rng.choice(len(pool), size=count, replace=False)
    return PlantedAdversary(storm, a, tuple(int(pool[i]) for i in pick), tuple([1.0 / count] * count))


def constant_adversary(storm: TypedStorm, serial: int) -> PlantedAdversary:
    return PlantedAdversary(storm, storm.h(serial), (int(serial),), (1.0,))


def collision_entropy(probs: Sequence[float]) -> float:
    p = np.asarray(probs, dtype=float)
    return float(-np.log2(np.sum(p * p)))


@dataclass(frozen=True)
class CollisionReport:
    runs: int
    mean_pairs: float
    expected_pairs: float
    exhausted: int

    def within(self, factor: float = 3.0) -> bool:
        return self.exhausted == 0 and self.mean_pairs <= factor * self.expected_pairs

    def to_json(self) -> dict:
        return {
            "runs": self.runs,
            "mean_pairs": self.mean_pairs,
            "expected_pairs": self.expected_pairs,
            "exhausted": self.exhausted,
        }


def collision_audit(
    gen: Callable[[np.random.Generator], Bolt],
    ver: Callable[[Bolt], int | None],
    h2: float,
    runs: int,
    budget: int,
    rng: np.random.Generator,
) -> CollisionReport:
    """Mean number of pairs until collision, against the 2^H2 expectation."""
    counts = []
    exhausted = 0
    for _ in range(runs):
        try:
            counts.append(collision_finder(gen, ver, rng, budget).pairs)
        except Exhausted:
            exhausted += 1
    mean = float(np.mean(counts)) if counts else float("inf")
    return CollisionReport(runs, mean, 2.0**h2, exhausted)


# ------------------------------------------------------------ protocol


@dataclass(frozen=True)
class TqlTranscript:
    transcript: Transcript
    prover_serial: int
    corrections: tuple
    applied: tuple


@dataclass(frozen=True)
class TqlWotro:
    """One-message protocol: the prover teleports a typed bolt and sends (a, s).

    The verifier re-verifies the received bolt, checks type and serial, and
    outputs c = s.
    """

    tql: TqlScheme
    storm: TypedStorm

    @property
    def inputs(self) -> list[int]:
        return list(range(self.tql.types))

    @property
    def challenge_count(self) -> int:
        return 1 << self.tql.ql.serial_bits

    def run(self, a: int, rng: np.random.Generator, tamper: Callable[[int, int, int], tuple[int, int]] | None = None) -> TqlTranscript:
        bolt = self.tql.gen(self.storm, a, rng)
        got = self.tql.ver(self.storm, bolt)
        if got is None:
            raise RuntimeError("honest bolt failed verification")
        ta, s = got
        corr: tuple = ()
        applied: tuple = ()
        received = bolt
        if bolt.state is not None:
            d = bolt.state.dims[0]
            epr = epr_state(d, len(bolt.state.dims))
            moved, rec = teleport(bolt.state, epr, rng, tamper)
            received = Bolt(moved, bolt.tag)
            corr, applied = rec.corrections, rec.applied
        check = self.tql.ver(self.storm, received)
        ok = check is not None and check == (a, s)
        tr = Transcript(a, s, None, ok, s if ok else None)
        return TqlTranscript(tr, s, corr, applied)


def wotro_from_tql(tql: TqlScheme, rng: np.random.Generator) -> TqlWotro:
    return TqlWotro(tql, tql.setup(rng))


def serial_slice(protocol: TqlWotro, a: int) -> list[int]:
    """Serials of type ``a``: the support of the honest challenge law."""
    h = protocol.storm.h
    return [s for s in range(1 << protocol.tql.ql.serial_bits) if h(s) == a]
