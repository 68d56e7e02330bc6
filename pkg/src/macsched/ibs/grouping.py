"""Grouping functions: partition the UEs of a slot and attach budget shares."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from ..model import ConfigError, UeMetrics

_EPS = 1e-9


@dataclass(frozen=True)
class Group:
    rntis: tuple[int, ...]
    share: float


class Grouping:
    """Callable ``(metrics, ctx) -> list[Group]`` with a fixed group count."""

    n_groups = 1

    def __call__(self, metrics: Sequence[UeMetrics], ctx) -> list[Group]:
        raise NotImplementedError


GROUPINGS: dict[str, tuple[Callable[..., Grouping], str]] = {}


def register_grouping(name: str, description: str = ""):
    def deco(factory):
        GROUPINGS[name] = (factory, description)
        return factory
    return deco


def make_grouping(name: str, **params) -> Grouping:
    try:
        factory, _ = GROUPINGS[name]
    except KeyError:
        raise ConfigError(f"unknown grouping {name!r}; known: {', '.join(sorted(GROUPINGS))}") from None
    try:
        return factory(**params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"grouping {name!r}: {exc}") from None


def split_budget(shares: Sequence[float], n_prbs: int) -> list[int]:
    """Integer budgets: floor each share, then hand the remainder of
    ``floor(sum(shares) * n_prbs)`` to groups in declaration order."""
    raw = [s * n_prbs for s in shares]
    out = [math.floor(x + _EPS) for x in raw]
    target = min(n_prbs, math.floor(sum(raw) + _EPS))
    i = 0
    while sum(out) < target and shares:
        out[i % len(out)] += 1
        i += 1
    return out


def _check_fraction(x, what, closed_right=False):
    ok = 0 < x <= 1 if closed_right else 0 < x < 1
    if not ok:
        raise ValueError(f"{what} must be in (0, 1{']' if closed_right else ')'}, got {x}")


def _take(n_total: int, fraction: float) -> int:
    return math.ceil(fraction * n_total - _EPS)


@register_grouping("single", "All UEs in one group")
class SingleGroup(Grouping):
    n_groups = 1

    def __init__(self, share: float = 1.0):
        _check_fraction(share, "share", closed_right=True)
        self.share = share

    def __call__(self, metrics, ctx):
        return [Group(tuple(m.rnti for m in metrics), self.share)]


@register_grouping("by_cqi", "Top fraction of UEs by CQI vs. the rest")
class GroupByCqi(Grouping):
    n_groups = 2

    def __init__(self, split_fraction: float = 0.5, share_high: float = 0.7):
        _check_fraction(split_fraction, "split_fraction")
        _check_fraction(share_high, "share_high")
        self.split_fraction = split_fraction
        self.share_high = share_high

    def __call__(self, metrics, ctx):
        ranked = sorted(metrics, key=lambda m: (-m.cqi, m.rnti))
        k = _take(len(ranked), self.split_fraction)
        top = {m.rnti for m in ranked[:k]}
        return [Group(tuple(m.rnti for m in metrics if m.rnti in top), self.share_high),
                Group(tuple(m.rnti for m in metrics if m.rnti not in top), 1.0 - self.share_high)]


@register_grouping("by_burstiness", "Bursty-traffic UEs (by 5QI) vs. the rest")
class GroupByBurstiness(Grouping):
    n_groups = 2

    def __init__(self, share: float = 0.8, five_qis: Sequence[int] | None = None):
        _check_fraction(share, "share")
        self.share = share
        self.five_qis = None if five_qis is None else frozenset(int(q) for q in five_qis)

    def is_bursty(self, m, ctx) -> bool:
        if self.five_qis is not None:
            return m.five_qi in self.five_qis
        q = ctx.profiles.get(m.five_qi)
        return bool(q is not None and q.bursty)

    def __call__(self, metrics, ctx):
        flags = [self.is_bursty(m, ctx) for m in metrics]
        return [Group(tuple(m.rnti for m, f in zip(metrics, flags) if f), self.share),
                Group(tuple(m.rnti for m, f in zip(metrics, flags) if not f), 1.0 - self.share)]


@register_grouping("by_rank", "Bottom fraction of UEs by average rate (edge users) vs. the rest")
class GroupByRank(Grouping):
    n_groups = 2

    def __init__(self, bottom_fraction: float = 0.4, share: float = 0.5):
        _check_fraction(bottom_fraction, "bottom_fraction")
        _check_fraction(share, "share")
        self.bottom_fraction = bottom_fraction
        self.share = share

    def __call__(self, metrics, ctx):
        r_ave = ctx.state.r_ave
        ranked = sorted(metrics, key=lambda m: (r_ave.get(m.rnti, 0.0), m.rnti))
        edge = {m.rnti for m in ranked[:_take(len(ranked), self.bottom_fraction)]}
        return [Group(tuple(m.rnti for m in metrics if m.rnti in edge), self.share),
                Group(tuple(m.rnti for m in metrics if m.rnti not in edge), 1.0 - self.share)]


# call-shape aliases
def group_by_cqi(split_fraction: float, share_high: float) -> GroupByCqi:
    return GroupByCqi(split_fraction, share_high)


def group_by_burstiness(share: float, five_qis=None) -> GroupByBurstiness:
    return GroupByBurstiness(share, five_qis)


def group_by_rank(bottom_fraction: float, share: float = 0.5) -> GroupByRank:
    return GroupByRank(bottom_fraction, share)
