"""Nonlocal boxes and the coded one-message protocol built on them.

Each box takes one bit from each side and returns bits ``u`` (prover) and
``v`` (verifier) with u xor v = x and y, the first output uniform. The
protocol encodes the input with a binary linear code, feeds the codeword into
the prover's side of the boxes, and hashes the outputs with a seeded
Toeplitz family.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import BadParams, DoubleFire, LengthMismatch, TooLarge
from .stats import Estimate, wilson, within_sigma

SIDES = ("P", "V")


@dataclass
class NlBoxBank:
    """``count`` boxes with a per-side record of which boxes were used.

    ``log`` holds one ``(x, y, u, v)`` tuple per fully fired box, in order of
    completion. ``order`` records ``(side, index)`` for every fire.
    """

    count: int
    log: list[tuple[int, int, int, int]] = field(default_factory=list)
    order: list[tuple[str, int]] = field(default_factory=list)
    _first: dict[int, tuple[str, int, int]] = field(default_factory=dict, repr=False)
    _used: dict[str, set[int]] = field(default_factory=lambda: {"P": set(), "V": set()}, repr=False)

    def fire(self, side: str, index: int, bit: int, rng: np.random.Generator) -> int:
        if side not in SIDES:
            raise ValueError(f"side must be P or V, got {side!r}")
        if not 0 <= index < self.count:
            raise IndexError(index)
        if index in self._used[side]:
            raise DoubleFire(f"side {side} already used box {index}")
        bit = int(bit) & 1
        self._used[side].add(index)
        self.order.append((side, index))
        if index not in self._first:
            out = int(rng.integers(2))
            self._first[index] = (side, bit, out)
            return out
        other_side, other_bit, other_out = self._first[index]
        out = other_out ^ (other_bit & bit)
        x, u = (other_bit, other_out) if other_side == "P" else (bit, out)
        y, v = (bit, out) if other_side == "P" else (other_bit, other_out)
        assert u ^ v == x & y
        self.log.append((x, y, u, v))
        return out

    def fire_many(self, side: str, bits: Sequence[int], rng: np.random.Generator) -> np.ndarray:
        """Fire boxes ``0..len(bits)-1`` in index order."""
        return np.array([self.fire(side, i, b, rng) for i, b in enumerate(bits)], dtype=np.uint8)


def nlbox_fire(bank: NlBoxBank, side: str, index: int, bit: int, rng: np.random.Generator) -> int:
    return bank.fire(side, index, bit, rng)


# ---------------------------------------------------------------- codes

@dataclass(frozen=True, eq=False)
class LinearCode:
    """Binary linear code with generator rows of length ``length``."""

    generator: np.ndarray
    min_distance: int

    @property
    def dimension(self) -> int:
        return self.generator.shape[0]

    @property
    def length(self) -> int:
        return self.generator.shape[1]

    def encode(self, a: Sequence[int] | int) -> np.ndarray:
        bits = int_to_bits(a, self.dimension) if isinstance(a, (int, np.integer)) else np.asarray(a, dtype=np.uint8)
        if bits.shape != (self.dimension,):
            raise LengthMismatch(f"message must have {self.dimension} bits")
        return (bits.astype(np.int64) @ self.generator % 2).astype(np.uint8)

    def codewords(self) -> np.ndarray:
        msgs = all_bit_strings(self.dimension)
        return (msgs.astype(np.int64) @ self.generator % 2).astype(np.uint8)


def exhaustive_min_distance(generator: np.ndarray) -> int:
    """Minimum weight of a nonzero codeword, by enumerating all 2^k messages."""
    k = generator.shape[0]
    if k > 20:
        raise TooLarge("exhaustive distance limited to dimension 20")
    words = all_bit_strings(k)[1:].astype(np.int64) @ generator % 2
    return int(words.sum(axis=1).min())


def linear_code(generator: np.ndarray) -> LinearCode:
    g = np.asarray(generator, dtype=np.uint8) % 2
    return LinearCode(g, exhaustive_min_distance(g))


def repetition_code(n: int, t: int) -> LinearCode:
    """Each message bit repeated ``t`` times in a contiguous block."""
    g = np.kron(np.eye(n, dtype=np.uint8), np.ones((1, t), dtype=np.uint8))
    return linear_code(g)


# ---------------------------------------------------------------- hashing

@dataclass(frozen=True)
class ToeplitzSeed:
    diagonals: tuple[int, ...]
    offset: tuple[int, ...]


@dataclass(frozen=True)
class ToeplitzFamily:
    """Affine Toeplitz hashes h(u) = T u xor b from {0,1}^N to {0,1}^m.

    ``T`` is fixed by its N + m - 1 diagonals. The offset ``b`` makes every
    preimage count average to exactly 2^(N-m) over seeds.
    """

    N: int
    m: int

    @property
    def seed_bits(self) -> int:
        return self.N + 2 * self.m - 1

    def sample(self, rng: np.random.Generator) -> ToeplitzSeed:
        d = rng.integers(2, size=self.N + self.m - 1)
        b = rng.integers(2, size=self.m)
        return ToeplitzSeed(tuple(int(x) for x in d), tuple(int(x) for x in b))

    def seed_from_int(self, r: int) -> ToeplitzSeed:
        bits = int_to_bits(r, self.seed_bits)
        k = self.N + self.m - 1
        return ToeplitzSeed(tuple(int(x) for x in bits[:k]), tuple(int(x) for x in bits[k:]))

    def matrix(self, seed: ToeplitzSeed) -> np.ndarray:
        d = np.asarray(seed.diagonals, dtype=np.uint8)
        i = np.arange(self.m)[:, None]
        j = np.arange(self.N)[None, :]
        return d[i - j + self.N - 1]

    def hash(self, seed: ToeplitzSeed, u: np.ndarray) -> np.ndarray:
        """Hash one string (shape (N,)) or a batch (shape (k, N))."""
        u = np.asarray(u, dtype=np.int64)
        if u.shape[-1] != self.N:
            raise LengthMismatch(f"input must have {self.N} bits")
        return ((u @ self.matrix(seed).T.astype(np.int64) + np.asarray(seed.offset)) % 2).astype(np.uint8)

    def hash_int(self, seed: ToeplitzSeed, u: np.ndarray) -> int | np.ndarray:
        return bits_to_int(self.hash(seed, u))


def toeplitz_family(N: int, m: int) -> ToeplitzFamily:
    if not 1 <= m <= N:
        raise BadParams("need 1 <= m <= N")
    return ToeplitzFamily(N, m)


@dataclass(frozen=True)
class PreimageReport:
    mean_counts: np.ndarray
    expected: float
    seeds_used: int
    exhaustive: bool

    @property
    def max_error(self) -> float:
        return float(np.max(np.abs(self.mean_counts - self.expected)))

    def to_json(self) -> dict:
        return {
            "mean_counts": self.mean_counts.tolist(),
            "expected": self.expected,
            "seeds_used": self.seeds_used,
            "exhaustive": self.exhaustive,
            "max_error": self.max_error,
        }


def preimage_audit(
    family: ToeplitzFamily,
    max_seeds: int = 1 << 16,
    rng: np.random.Generator | None = None,
) -> PreimageReport:
    """Mean of |h^{-1}(z)| over seeds, for every z.

    Exhaustive over all 2^(N+2m-1) seeds when that fits in ``max_seeds``.
    Otherwise the matrix part is sampled and the offset is still summed
    exhaustively, which keeps the mean exact for every sampled matrix.
    """
    N, m = family.N, family.m
    if N > 20:
        raise TooLarge("preimage audit enumerates 2^N inputs")
    inputs = all_bit_strings(N)
    n_mats = 1 << (N + m - 1)
    exhaustive = (1 << family.seed_bits) <= max_seeds
    if exhaustive:
        mats = range(n_mats)
    else:
        if rng is None:
            raise ValueError("sampled audit needs an rng")
        mats = rng.integers(n_mats, size=max(1, max_seeds >> m))
    total = np.zeros(1 << m)
    used = 0
    offsets = all_bit_strings(m)
    for t in mats:
        seed = family.seed_from_int(int(t) << m)
        base = bits_to_int(family.hash(seed, inputs))
        counts = np.bincount(base, minlength=1 << m)
        zs = np.arange(1 << m)
        for b in offsets:
            total += counts[zs ^ int(bits_to_int(b))]
            used += 1
    return PreimageReport(total / used, 2.0 ** (N - m), used, exhaustive)


# ---------------------------------------------------------------- protocol

@dataclass(frozen=True)
class NlTranscript:
    a: int
    x: tuple[int, ...]
    u: tuple[int, ...]
    y: tuple[int, ...]
    v: tuple[int, ...]
    accepted: bool
    prover_c: int | None
    verifier_c: int | None


def _verify(code: LinearCode, family: ToeplitzFamily, seed: ToeplitzSeed, bank: NlBoxBank,
            a: int, x: np.ndarray, u: np.ndarray, rng: np.random.Generator) -> tuple[bool, np.ndarray, np.ndarray, int | None]:
    N = code.length
    y = rng.integers(2, size=N).astype(np.uint8)
    if not np.array_equal(x, code.encode(a)):
        return False, y, np.zeros(N, dtype=np.uint8), None
    v = bank.fire_many("V", y, rng)
    if not np.array_equal(u ^ v, x & y):
        return False, y, v, None
    return True, y, v, int(family.hash_int(seed, (x & y) ^ v))


def nlbox_protocol_run(
    code: LinearCode,
    family: ToeplitzFamily,
    seed: ToeplitzSeed,
    a: int,
    rng: np.random.Generator,
    tamper_x: np.ndarray | None = None,
) -> NlTranscript:
    """Honest prover on input ``a``; ``tamper_x`` replaces the announced codeword."""
    if family.N != code.length:
        raise LengthMismatch("hash input length must equal code length")
    bank = NlBoxBank(code.length)
    x = code.encode(a)
    u = bank.fire_many("P", x, rng)
    sent = x if tamper_x is None else np.asarray(tamper_x, dtype=np.uint8)
    ok, y, v, c = _verify(code, family, seed, bank, a, sent, u, rng)
    pc = int(family.hash_int(seed, u))
    return NlTranscript(a, tuple(sent.tolist()), tuple(u.tolist()), tuple(y.tolist()), tuple(v.tolist()),
                        ok, pc if ok else None, c)


# An adversary gets a fire(index, bit) callback for its side of the boxes, the
# hash seed and an rng, and returns the message (a, x, u) it sends.
NlAdversary = Callable[[Callable[[int, int], int], ToeplitzSeed, np.random.Generator], tuple[int, np.ndarray, np.ndarray]]


def flip_adversary(code: LinearCode, positions: Sequence[int], a: int | None = None) -> NlAdversary:
    """Feed C(a) with ``positions`` flipped into the boxes, then announce C(a).

    The reported ``u`` is the boxes' raw output; on each flipped position the
    verifier's check then passes with probability 1/2 whatever the adversary
    reports.
    """
    S = sorted(set(int(i) for i in positions))
    if any(not 0 <= i < code.length for i in S):
        raise BadParams("flip position out of range")

    def run(fire, seed, rng):
        msg = int(rng.integers(1 << code.dimension)) if a is None else a
        x = code.encode(msg)
        xhat = x.copy()
        xhat[S] ^= 1
        u = np.array([fire(i, int(b)) for i, b in enumerate(xhat)], dtype=np.uint8)
        return msg, x, u

    return run


@dataclass(frozen=True)
class NlAttackReport:
    trials: int
    accepted: Estimate
    hits: Estimate
    expected_accept: float | None
    expected_hit: float

    @property
    def reject_rate(self) -> float:
        return 1.0 - self.accepted.rate

    @property
    def hit_prob(self) -> float:
        return self.hits.rate

    def accept_within(self, k: float = 3.0) -> bool:
        if self.expected_accept is None:
            return True
        return within_sigma(self.accepted.rate, self.expected_accept, self.trials, k)

    def hit_within(self, k: float = 3.0) -> bool:
        return self.hits.trials == 0 or within_sigma(self.hits.rate, self.expected_hit, self.hits.trials, k)

    def to_json(self) -> dict:
        return {
            "trials": self.trials,
            "reject_rate": self.reject_rate,
            "accepted": self.accepted.to_json(),
            "hit_prob": self.hit_prob,
            "hits": self.hits.to_json(),
            "expected_accept": self.expected_accept,
            "expected_hit": self.expected_hit,
        }


def random_target(n: int, m: int, rng: np.random.Generator) -> Callable[[int], int]:
    table = rng.integers(1 << m, size=1 << n)
    return lambda a: int(table[a])


def nlbox_attack_audit(
    code: LinearCode,
    family: ToeplitzFamily,
    adversary: NlAdversary | Sequence[int],
    target: Callable[[int], int],
    trials: int,
    rng: np.random.Generator,
) -> NlAttackReport:
    """Run ``trials`` attacks with a fresh hash seed each time.

    A sequence of positions selects :func:`flip_adversary` with a uniformly
    random message; its exact accept probability 2^-|S| is reported alongside.
    """
    expected_accept = None
    if not callable(adversary):
        S = sorted(set(int(i) for i in adversary))
        expected_accept = 2.0 ** (-len(S))
        adversary = flip_adversary(code, S)
    acc = hit = 0
    for _ in range(trials):
        seed = family.sample(rng)
        bank = NlBoxBank(code.length)
        a, x, u = adversary(lambda i, b: bank.fire("P", i, b, rng), seed, rng)
        ok, _, _, c = _verify(code, family, seed, bank, a, np.asarray(x, dtype=np.uint8),
                              np.asarray(u, dtype=np.uint8), rng)
        if ok:
            acc += 1
            hit += int(c == target(a))
    return NlAttackReport(trials, wilson(acc, trials), wilson(hit, acc), expected_accept, 2.0 ** (-family.m))


def analytic_accept(flips: int) -> float:
    return 2.0 ** (-flips)


def unique_decoding_radius(code: LinearCode) -> int:
    """Largest t with at most one codeword within distance t of any string."""
    return (code.min_distance - 1) // 2


# ---------------------------------------------------------------- bits

def int_to_bits(value: int, width: int) -> np.ndarray:
    """Big-endian bit vector of ``value``."""
    value = int(value)
    if value < 0 or value >> width:
        raise ValueError(f"{value} does not fit in {width} bits")
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def bits_to_int(bits: np.ndarray) -> int | np.ndarray:
    bits = np.asarray(bits, dtype=np.int64)
    w = bits.shape[-1]
    weights = 1 << np.arange(w - 1, -1, -1, dtype=np.int64)
    out = bits @ weights
    return int(out) if np.ndim(out) == 0 else out


def all_bit_strings(width: int) -> np.ndarray:
    """All 2^width strings as rows, in increasing integer order."""
    if width == 0:
        return np.zeros((1, 0), dtype=np.uint8)
    idx = np.arange(1 << width)[:, None]
    return ((idx >> np.arange(width - 1, -1, -1)[None, :]) & 1).astype(np.uint8)
