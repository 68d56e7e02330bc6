"""Composition of groups, limit/value rounds and a leftover scheduler."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import yaml

from ..model import Allocation, ConfigError
from ..policies.base import Policy
from .grouping import Grouping, make_grouping, split_budget
from .knapsack import KnapsackRound, solve_knapsack_round
from .limits import Limit, make_limit
from .values import ValueFn, make_value


@dataclass(frozen=True)
class FnRef:
    name: str
    params: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class RoundSpec:
    limit: FnRef
    value: FnRef


@dataclass(frozen=True)
class GroupSpec:
    rounds: tuple[RoundSpec, ...]
    share: float | None = None


@dataclass(frozen=True)
class LeftoverSpec:
    limit: FnRef
    value: FnRef
    # cap leftover grants by the limits the UE saw in its own group
    respect_group_limits: bool = False


@dataclass(frozen=True)
class CompositionSpec:
    grouping: FnRef
    groups: tuple[GroupSpec, ...]
    leftover: LeftoverSpec | None = None
    name: str = "composition"

    def compile(self) -> "Composition":
        return Composition(self)


@dataclass
class SlotTrace:
    group_budgets: list[int] = field(default_factory=list)
    group_used: list[int] = field(default_factory=list)
    round_budgets: list[list[int]] = field(default_factory=list)
    leftover_budget: int = 0
    leftover_used: int = 0
    flags: list[str] = field(default_factory=list)


class Composition:
    """A validated spec with every function object built once, at load time."""

    def __init__(self, spec: CompositionSpec):
        self.spec = spec
        problems = []

        def build(kind, ref, where):
            try:
                return kind(ref.name, **dict(ref.params))
            except ConfigError as exc:
                problems.extend(f"{where}: {p}" for p in exc.problems)
                return None

        self.grouping: Grouping = build(make_grouping, spec.grouping, "grouping")
        if self.grouping is not None and len(spec.groups) != self.grouping.n_groups:
            problems.append(f"groups: grouping {spec.grouping.name!r} forms "
                            f"{self.grouping.n_groups} groups, {len(spec.groups)} configured")
        self.rounds: list[list[tuple[Limit, ValueFn]]] = []
        for g, gs in enumerate(spec.groups):
            if gs.share is not None and not 0 <= gs.share <= 1:
                problems.append(f"groups[{g}].share: must be in [0, 1]")
            if not gs.rounds:
                problems.append(f"groups[{g}].rounds: at least one round required")
            self.rounds.append([(build(make_limit, r.limit, f"groups[{g}].rounds[{j}].limit"),
                                 build(make_value, r.value, f"groups[{g}].rounds[{j}].value"))
                                for j, r in enumerate(gs.rounds)])
        shares = [gs.share for gs in spec.groups if gs.share is not None]
        if sum(shares) > 1 + 1e-9:
            problems.append("groups: shares sum above 1")
        self.leftover = None
        if spec.leftover is not None:
            self.leftover = (build(make_limit, spec.leftover.limit, "leftover.limit"),
                             build(make_value, spec.leftover.value, "leftover.value"))
        if problems:
            raise ConfigError(problems)

    def value_fns(self):
        for rounds in self.rounds:
            for _, v in rounds:
                yield v
        if self.leftover is not None:
            yield self.leftover[1]


def compose_schedule(comp: Composition, metrics, ctx, budget: int | None = None):
    """Run one slot of the composition. Returns ``(Allocation, SlotTrace)``."""
    n_prbs = ctx.cell.n_prbs if budget is None else budget
    trace = SlotTrace()
    groups = comp.grouping(metrics, ctx)
    shares = [gs.share if gs.share is not None else grp.share
              for gs, grp in zip(comp.spec.groups, groups)]
    budgets = split_budget(shares, n_prbs)
    by_rnti = {m.rnti: m for m in metrics}
    theta = {m.rnti: 0 for m in metrics}
    # tightest upper limit each UE saw in its group rounds
    cap = {m.rnti: math.inf for m in metrics}

    for grp, rounds, b in zip(groups, comp.rounds, budgets):
        members = [by_rnti[r] for r in grp.rntis]
        trace.group_budgets.append(b)
        round_budgets = []
        used = 0
        if members:
            left = b
            for limit, value in rounds:
                round_budgets.append(left)
                resid = [m._replace(num_rbs_required=m.num_rbs_required - theta[m.rnti]) for m in members]
                lower, upper = limit(resid, ctx, left)
                for m, hi in zip(resid, upper):
                    cap[m.rnti] = min(cap[m.rnti], hi)
                upper = [min(hi, m.num_rbs_required) for m, hi in zip(resid, upper)]
                lower = [min(lo, hi) for lo, hi in zip(lower, upper)]
                vals = value(resid, ctx)
                res = solve_knapsack_round(KnapsackRound([m.rnti for m in resid], vals, lower, upper, left))
                trace.flags.extend(res.flags)
                for m, t in zip(resid, res.theta):
                    theta[m.rnti] += t
                left -= res.total
                used += res.total
        trace.round_budgets.append(round_budgets)
        trace.group_used.append(used)

    remaining = n_prbs - sum(trace.group_used)
    trace.leftover_budget = remaining
    if comp.leftover is not None and remaining > 0:
        limit, value = comp.leftover
        resid = [m._replace(num_rbs_required=m.num_rbs_required - theta[m.rnti]) for m in metrics]
        lower, upper = limit(resid, ctx, remaining)
        if comp.spec.leftover.respect_group_limits:
            upper = [hi if cap[m.rnti] == math.inf else min(hi, max(0, cap[m.rnti] - theta[m.rnti]))
                     for m, hi in zip(resid, upper)]
        upper = [min(hi, m.num_rbs_required) for m, hi in zip(resid, upper)]
        lower = [min(lo, hi) for lo, hi in zip(lower, upper)]
        res = solve_knapsack_round(KnapsackRound([m.rnti for m in resid], value(resid, ctx),
                                                 lower, upper, remaining))
        trace.flags.extend(res.flags)
        for m, t in zip(resid, res.theta):
            theta[m.rnti] += t
        trace.leftover_used = res.total
    return Allocation({r: t for r, t in theta.items() if t > 0}), trace


class CompositionPolicy(Policy):
    """Adapter so a composition can be simulated like any other policy."""

    qos_aware = True

    def __init__(self, spec: CompositionSpec | Composition):
        self.comp = spec if isinstance(spec, Composition) else spec.compile()
        self.name = self.comp.spec.name
        self.last_trace: SlotTrace | None = None

    def allocate(self, metrics, ctx, budget):
        alloc, self.last_trace = compose_schedule(self.comp, metrics, ctx, budget)
        return alloc

    def observe(self, metrics, served, ctx):
        for v in self.comp.value_fns():
            v.observe(metrics, served, ctx)

    def __repr__(self):
        return f"CompositionPolicy({self.name!r})"


# ---------------------------------------------------------------- config file

_TOP_KEYS = {"name", "grouping", "groups", "leftover"}


class _Src:
    """YAML tree converted to plain data plus a path -> line index."""

    def __init__(self, text: str):
        try:
            node = yaml.compose(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            where = f"line {mark.line + 1}: " if mark is not None else ""
            raise ConfigError(f"{where}YAML syntax error: {getattr(exc, 'problem', exc)}") from None
        self.lines: dict[str, int] = {}
        self.data = self._walk(node, "") if node is not None else None

    def _walk(self, node, path):
        self.lines[path] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            out = {}
            for k, v in node.value:
                key = k.value
                out[key] = self._walk(v, f"{path}.{key}" if path else key)
                self.lines.setdefault(f"{path}.{key}" if path else key, k.start_mark.line + 1)
            return out
        if isinstance(node, yaml.SequenceNode):
            return [self._walk(v, f"{path}[{i}]") for i, v in enumerate(node.value)]
        return yaml.safe_load(yaml.serialize(node))

    def line(self, path: str) -> int | None:
        while path:
            if path in self.lines:
                return self.lines[path]
            path = path.rsplit(".", 1)[0] if "." in path else path.rsplit("[", 1)[0] if "[" in path else ""
        return self.lines.get("")


def _fnref(obj, path, problems, src) -> FnRef | None:
    def err(p, msg):
        ln = src.line(p) if src else None
        problems.append(f"{'line %d: ' % ln if ln else ''}{p}: {msg}")

    if isinstance(obj, str):
        return FnRef(obj)
    if not isinstance(obj, Mapping):
        err(path, "expected a mapping with 'name' and optional 'params'")
        return None
    extra = set(obj) - {"name", "params"}
    if extra:
        err(path, f"unknown keys {sorted(extra)}")
    name = obj.get("name")
    if not isinstance(name, str):
        err(f"{path}.name", "required string")
        return None
    params = obj.get("params") or {}
    if not isinstance(params, Mapping):
        err(f"{path}.params", "expected a mapping")
        params = {}
    return FnRef(name, dict(params))


def composition_from_dict(data, src: _Src | None = None) -> CompositionSpec:
    problems: list[str] = []

    def err(p, msg):
        ln = src.line(p) if src else None
        problems.append(f"{'line %d: ' % ln if ln else ''}{p}: {msg}")

    if not isinstance(data, Mapping):
        raise ConfigError("composition: expected a mapping at top level")
    for k in set(data) - _TOP_KEYS:
        err(k, "unknown key")
    grouping = _fnref(data.get("grouping", "single"), "grouping", problems, src)
    groups = []
    raw_groups = data.get("groups")
    if not isinstance(raw_groups, list) or not raw_groups:
        err("groups", "required non-empty list")
        raw_groups = []
    for g, rg in enumerate(raw_groups):
        p = f"groups[{g}]"
        if not isinstance(rg, Mapping):
            err(p, "expected a mapping")
            continue
        for k in set(rg) - {"share", "rounds"}:
            err(f"{p}.{k}", "unknown key")
        share = rg.get("share")
        if share is not None and not isinstance(share, (int, float)):
            err(f"{p}.share", "expected a number")
            share = None
        rounds = []
        for j, rr in enumerate(rg.get("rounds") or []):
            rp = f"{p}.rounds[{j}]"
            if not isinstance(rr, Mapping):
                err(rp, "expected a mapping with 'limit' and 'value'")
                continue
            for k in set(rr) - {"limit", "value"}:
                err(f"{rp}.{k}", "unknown key")
            lim = _fnref(rr.get("limit", "default"), f"{rp}.limit", problems, src)
            if "value" not in rr:
                err(f"{rp}.value", "required")
                continue
            val = _fnref(rr["value"], f"{rp}.value", problems, src)
            if lim and val:
                rounds.append(RoundSpec(lim, val))
        groups.append(GroupSpec(tuple(rounds), None if share is None else float(share)))
    leftover = None
    lo = data.get("leftover")
    if lo is not None:
        if not isinstance(lo, Mapping):
            err("leftover", "expected a mapping")
        else:
            for k in set(lo) - {"limit", "value", "respect_group_limits"}:
                err(f"leftover.{k}", "unknown key")
            lim = _fnref(lo.get("limit", "default"), "leftover.limit", problems, src)
            val = _fnref(lo.get("value", "pf"), "leftover.value", problems, src)
            if lim and val:
                leftover = LeftoverSpec(lim, val, bool(lo.get("respect_group_limits", False)))
    if problems:
        raise ConfigError(problems)
    spec = CompositionSpec(grouping, tuple(groups), leftover, str(data.get("name", "composition")))
    try:
        spec.compile()
    except ConfigError as exc:
        # attach line numbers where the message starts with a known path
        located = []
        for msg in exc.problems:
            path = msg.split(":", 1)[0]
            ln = src.line(path) if src else None
            located.append(f"line {ln}: {msg}" if ln else msg)
        raise ConfigError(located) from None
    return spec


def load_composition(source: str | Path) -> CompositionSpec:
    """Parse a composition from YAML text or a file path."""
    text = Path(source).read_text() if _looks_like_path(source) else str(source)
    src = _Src(text)
    return composition_from_dict(src.data, src)


def _looks_like_path(source) -> bool:
    if isinstance(source, Path):
        return True
    return "\n" not in source and source.endswith((".yaml", ".yml"))
