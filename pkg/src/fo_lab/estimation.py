"""Binomial estimates: Wilson intervals, standard errors, two-proportion test."""

from __future__ import annotations

import math
from dataclasses import dataclass


def wilson_interval(k: int, n: int, z: float = 1.96) -> tuple[float, float]:
    if n <= 0:
        return 0.0, 1.0
    p = k / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def binomial_se(k: int, n: int) -> float:
    """Agresti-Coull standard error; stays positive when k is 0 or n."""
    if n <= 0:
        return float("inf")
    p = (k + 2) / (n + 4)
    return math.sqrt(p * (1 - p) / (n + 4))


def two_proportion_pvalue(x0: int, n0: int, x1: int, n1: int) -> float:
    """Two-sided pooled z-test p-value for equal success probabilities."""
    if n0 == 0 or n1 == 0:
        return 1.0
    pooled = (x0 + x1) / (n0 + n1)
    var = pooled * (1 - pooled) * (1 / n0 + 1 / n1)
    if var == 0:
        return 1.0
    z = (x0 / n0 - x1 / n1) / math.sqrt(var)
    return math.erfc(abs(z) / math.sqrt(2))


@dataclass(frozen=True)
class WinRate:
    wins: int
    trials: int

    @property
    def rate(self) -> float:
        return self.wins / self.trials if self.trials else 0.0

    @property
    def se(self) -> float:
        return binomial_se(self.wins, self.trials)

    @property
    def interval(self) -> tuple[float, float]:
        return wilson_interval(self.wins, self.trials)

    @property
    def advantage(self) -> float:
        """|rate - 1/2|, for guess-a-bit games."""
        return abs(self.rate - 0.5)

    def to_dict(self) -> dict:
        lo, hi = self.interval
        return {"wins": self.wins, "trials": self.trials, "rate": self.rate,
                "stderr": self.se, "wilson95": [lo, hi]}
