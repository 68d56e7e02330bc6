"""Value functions for knapsack rounds.

Every single-stage policy in the policy registry doubles as a value function
under its own name. On top of those this module adds LTTI with explicit
targets and conditional selection.
"""

from __future__ import annotations

from typing import Callable, Mapping, Sequence

from ..model import ConfigError
from ..policies import POLICIES, Policy, make_policy
from ..policies.aware import _common, ltti_value
from ..policies.unaware import mask_empty


class ValueFn:
    """Callable ``(metrics, ctx) -> list[float]``."""

    def __call__(self, metrics, ctx) -> list[float]:
        raise NotImplementedError

    def observe(self, metrics, served, ctx) -> None:
        pass


class PolicyValues(ValueFn):
    def __init__(self, policy: Policy):
        self.policy = policy

    def __call__(self, metrics, ctx):
        return self.policy.values(metrics, ctx)

    def observe(self, metrics, served, ctx):
        self.policy.observe(metrics, served, ctx)

    def __repr__(self):
        return f"PolicyValues({self.policy!r})"


def _has_values(factory) -> bool:
    return isinstance(factory, type) and factory.values is not Policy.values


VALUES: dict[str, tuple[Callable[..., ValueFn], str]] = {}
SELECTORS: dict[str, tuple[Callable[..., Callable], str]] = {}


def register_value(name: str, description: str = ""):
    def deco(factory):
        VALUES[name] = (factory, description)
        return factory
    return deco


def register_selector(name: str, description: str = ""):
    def deco(factory):
        SELECTORS[name] = (factory, description)
        return factory
    return deco


def value_names() -> list[str]:
    names = set(VALUES)
    names.update(n for n, (f, _) in POLICIES.items() if _has_values(f))
    return sorted(names)


def make_value(name: str, **params) -> ValueFn:
    if name in VALUES:
        factory, _ = VALUES[name]
        try:
            return factory(**params)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"value {name!r}: {exc}") from None
    if name in POLICIES and _has_values(POLICIES[name][0]):
        return PolicyValues(make_policy(name, **params))
    raise ConfigError(f"unknown value function {name!r}; known: {', '.join(value_names())}")


@register_value("ltti_target", "LTTI with one explicit delay target for every UE")
class LttiTarget(ValueFn):
    def __init__(self, delta_us: float = 50_000, reliability: float = 0.95):
        if delta_us <= 0 or not 0 < reliability < 1:
            raise ValueError("need delta_us > 0 and reliability in (0, 1)")
        self.delta_s = delta_us * 1e-6
        self.pdb = 1.0 - reliability

    def __call__(self, metrics, ctx):
        pf, _, hol = _common(metrics, ctx)
        return mask_empty([ltti_value(p, self.delta_s, h, self.pdb) for p, h in zip(pf, hol)], metrics)


@register_value("ltti_multi", "LTTI with per-subset delay targets")
class LttiMulti(ValueFn):
    """``delta_us[k]`` and ``reliability[k]`` apply to the RNTIs in ``rntis[k]``;
    unlisted UEs fall back to their 5QI profile."""

    def __init__(self, delta_us: Sequence[float], reliability: Sequence[float],
                 rntis: Sequence[Sequence[int]]):
        if not len(delta_us) == len(reliability) == len(rntis):
            raise ValueError("delta_us, reliability and rntis must have equal length")
        self.targets: dict[int, tuple[float, float]] = {}
        for d, rel, members in zip(delta_us, reliability, rntis):
            if d <= 0 or not 0 < rel < 1:
                raise ValueError("need delta_us > 0 and reliability in (0, 1)")
            for r in members:
                self.targets[int(r)] = (d * 1e-6, 1.0 - rel)

    def __call__(self, metrics, ctx):
        pf, profiles, hol = _common(metrics, ctx)
        out = []
        for m, p, q, h in zip(metrics, pf, profiles, hol):
            delta, pdb = self.targets.get(m.rnti, (q.delta_s, q.pdb))
            out.append(ltti_value(p, delta, h, pdb))
        return mask_empty(out, metrics)


@register_value("conditional", "Pick a value function per slot from group conditions")
class ConditionalValue(ValueFn):
    def __init__(self, selector: str, **params):
        try:
            factory, _ = SELECTORS[selector]
        except KeyError:
            raise ConfigError(f"unknown selector {selector!r}; known: {', '.join(sorted(SELECTORS))}") from None
        self.selector_name = selector
        self.selector = factory(**params)
        self.last_choice: ValueFn | None = None

    def __call__(self, metrics, ctx):
        fn = self.selector(metrics, ctx)
        if not isinstance(fn, ValueFn):
            raise ConfigError(f"selector {self.selector_name!r} returned {fn!r}, not a value function")
        self.last_choice = fn
        return fn(metrics, ctx)

    def observe(self, metrics, served, ctx):
        if self.last_choice is not None:
            self.last_choice.observe(metrics, served, ctx)


def _ref(spec) -> ValueFn:
    if isinstance(spec, ValueFn):
        return spec
    if isinstance(spec, str):
        return make_value(spec)
    if isinstance(spec, Mapping) and "name" in spec:
        return make_value(spec["name"], **dict(spec.get("params") or {}))
    raise ConfigError(f"cannot build a value function from {spec!r}")


@register_selector("constant", "Always the same value function")
def constant_selector(value):
    fn = _ref(value)
    return lambda metrics, ctx: fn


@register_selector("by_count", "One value function up to max_ues UEs, another above")
def by_count_selector(max_ues: int, below, above):
    lo, hi = _ref(below), _ref(above)
    return lambda metrics, ctx: lo if len(metrics) <= max_ues else hi


@register_selector("adaptive_delay", "Single tight LTTI target for small groups, "
                                     "tight/loose tiers ranked by RSRP otherwise")
def adaptive_delay_selector(max_ues: int = 2, n_tight: int = 2, tight_us: float = 50_000,
                            loose_us: float = 300_000, reliability: float = 0.95):
    single = LttiTarget(tight_us, reliability)

    def select(metrics, ctx):
        if len(metrics) <= max_ues:
            return single
        ranked = sorted(metrics, key=lambda m: (-m.dl_rsrp, m.rnti))
        tight = [m.rnti for m in ranked[:n_tight]]
        loose = [m.rnti for m in ranked[n_tight:]]
        return LttiMulti([tight_us, loose_us], [reliability, reliability], [tight, loose])
    return select
