"""Small statistical helpers for Monte-Carlo checks."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats as _st


@dataclass(frozen=True)
class Estimate:
    successes: int
    trials: int
    low: float
    high: float

    @property
    def rate(self) -> float:
        return self.successes / self.trials if self.trials else float("nan")

    def to_json(self) -> dict:
        return {"successes": self.successes, "trials": self.trials, "rate": self.rate, "ci": [self.low, self.high]}


def wilson(successes: int, trials: int, confidence: float = 0.99) -> Estimate:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return Estimate(successes, trials, 0.0, 1.0)
    z = float(_st.norm.ppf(0.5 + confidence / 2))
    phat = successes / trials
    denom = 1 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return Estimate(successes, trials, max(0.0, centre - half), min(1.0, centre + half))


def within_sigma(rate: float, p: float, trials: int, k: float = 3.0) -> bool:
    """|rate - p| <= k standard errors of a Binomial(trials, p) proportion."""
    sigma = math.sqrt(p * (1 - p) / trials)
    return abs(rate - p) <= k * sigma + 1e-12


def chi2_uniform_pvalue(counts: Sequence[int]) -> float:
    return float(_st.chisquare(np.asarray(counts, dtype=float)).pvalue)


def total_variation(p: Sequence[float], q: Sequence[float]) -> float:
    return 0.5 * float(np.sum(np.abs(np.asarray(p, dtype=float) - np.asarray(q, dtype=float))))
