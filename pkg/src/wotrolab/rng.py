"""Seeded counter-based random streams.

Every stochastic routine takes an explicit ``numpy.random.Generator``. Streams
are built on Philox so that child streams derived from one top-level seed are
independent and replayable.
"""
from __future__ import annotations

import numpy as np


def make_rng(seed: int | np.random.SeedSequence | None = 0) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def spawn(rng: np.random.Generator, count: int) -> list[np.random.Generator]:
    """Derive ``count`` independent child streams from ``rng``."""
    seeds = rng.bit_generator.seed_seq.spawn(count)
    return [make_rng(s) for s in seeds]
