"""Uniform-weight linear knapsack rounds.

Every PRB has the same cost, so the LP

    max sum v_i * theta_i   s.t.  sum theta_i <= B,  l_i <= theta_i <= r_i

is solved by granting the lower bounds and then filling in descending value
order. Sorting dominates: O(n log n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence


@dataclass(frozen=True)
class KnapsackRound:
    rntis: Sequence[int]
    values: Sequence[float]
    lower: Sequence[int]
    upper: Sequence[int]
    budget: int

    def __post_init__(self):
        n = len(self.rntis)
        if not (len(self.values) == len(self.lower) == len(self.upper) == n):
            raise ValueError("rntis, values, lower and upper must have equal length")
        if self.budget < 0:
            raise ValueError("budget must be >= 0")
        for lo, hi in zip(self.lower, self.upper):
            if not 0 <= lo <= hi:
                raise ValueError(f"bounds must satisfy 0 <= lower <= upper, got ({lo}, {hi})")


@dataclass
class RoundResult:
    theta: list[int]
    degraded: bool = False
    flags: list[str] = field(default_factory=list)

    @property
    def total(self) -> int:
        return sum(self.theta)


def solve_knapsack_round(rnd: KnapsackRound) -> RoundResult:
    n = len(rnd.rntis)
    vals = rnd.values
    order = sorted(range(n), key=lambda i: (-vals[i], rnd.rntis[i]))
    theta = [0] * n
    budget = rnd.budget
    degraded = sum(rnd.lower) > budget
    for i in order:
        lo = rnd.lower[i]
        take = lo if lo < budget else budget
        theta[i] = take
        budget -= take
    if not degraded:
        for i in order:
            if budget <= 0:
                break
            if vals[i] == -math.inf:
                continue
            room = rnd.upper[i] - theta[i]
            take = room if room < budget else budget
            if take > 0:
                theta[i] += take
                budget -= take
    res = RoundResult(theta, degraded)
    if degraded:
        res.flags.append("lower-bounds-degraded")
    return res


def round_objective(rnd: KnapsackRound, theta: Sequence[int]) -> float:
    return sum(v * t for v, t in zip(rnd.values, theta) if t)
