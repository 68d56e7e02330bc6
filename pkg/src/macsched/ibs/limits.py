"""Limit functions: per-UE PRB bounds ``(lower, upper)`` for one round."""

from __future__ import annotations

from typing import Callable

from ..model import ConfigError


class Limit:
    def __call__(self, metrics, ctx, budget: int) -> tuple[list[int], list[int]]:
        raise NotImplementedError


LIMITS: dict[str, tuple[Callable[..., Limit], str]] = {}


def register_limit(name: str, description: str = ""):
    def deco(factory):
        LIMITS[name] = (factory, description)
        return factory
    return deco


def make_limit(name: str, **params) -> Limit:
    try:
        factory, _ = LIMITS[name]
    except KeyError:
        raise ConfigError(f"unknown limit {name!r}; known: {', '.join(sorted(LIMITS))}") from None
    try:
        return factory(**params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"limit {name!r}: {exc}") from None


@register_limit("default", "No lower bound, upper bound = round budget")
class DefaultLimit(Limit):
    def __call__(self, metrics, ctx, budget):
        n = len(metrics)
        return [0] * n, [budget] * n


@register_limit("target_throughput", "Upper bound 0 once the average rate exceeds cap_mbps")
class TargetThroughput(Limit):
    def __init__(self, cap_mbps: float):
        if cap_mbps <= 0:
            raise ValueError("cap_mbps must be > 0")
        self.cap_mbps = cap_mbps

    def __call__(self, metrics, ctx, budget):
        r_ave = ctx.state.r_ave
        cap = self.cap_mbps
        return [0] * len(metrics), [0 if r_ave.get(m.rnti, 0.0) > cap else budget for m in metrics]


def limit_default() -> DefaultLimit:
    return DefaultLimit()


def limit_target_throughput(cap_mbps: float) -> TargetThroughput:
    return TargetThroughput(cap_mbps)
