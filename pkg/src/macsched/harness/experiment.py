"""Batches of runs over scenarios, policies and seeds."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from ..ibs.compose import CompositionSpec
from ..metrics.delay import delay_stats
from ..metrics.report import MetricsReport
from ..model import ConfigError
from ..sim.scenario import ScenarioConfig, load_composition_ref, load_scenario
from ..sim.simulator import run_scenario


@dataclass(frozen=True)
class PolicyRef:
    """A policy by registry name, or a composition."""

    name: str | None = None
    params: Mapping[str, Any] = field(default_factory=dict)
    composition: CompositionSpec | None = None

    @classmethod
    def parse(cls, text: str) -> "PolicyRef":
        """``name`` or ``name:key=value,key=value`` (values parsed as YAML scalars)."""
        import yaml
        name, _, rest = text.partition(":")
        params = {}
        for item in filter(None, rest.split(",")):
            k, sep, v = item.partition("=")
            if not sep:
                raise ConfigError(f"policy {text!r}: expected key=value, got {item!r}")
            params[k.strip()] = yaml.safe_load(v)
        return cls(name.strip(), params)

    @classmethod
    def from_composition(cls, ref: str | CompositionSpec) -> "PolicyRef":
        spec = ref if isinstance(ref, CompositionSpec) else load_composition_ref(ref)
        return cls(composition=spec)

    def apply(self, cfg: ScenarioConfig) -> ScenarioConfig:
        if self.composition is not None:
            return cfg.with_composition(self.composition)
        return cfg.with_policy(self.name, **dict(self.params))


@dataclass(frozen=True)
class ExperimentPlan:
    scenarios: tuple = ("iperf24",)
    policies: tuple[PolicyRef, ...] = ()
    seeds: tuple[int, ...] = ()
    repetitions: int = 10
    duration_s: float | None = None
    out_dir: Path | None = None
    timing: bool = False
    workers: int = 1
    check_invariants: bool = False

    @property
    def seed_list(self) -> tuple[int, ...]:
        return tuple(self.seeds) if self.seeds else tuple(range(1, self.repetitions + 1))

    def problems(self) -> list[str]:
        out = []
        if self.repetitions < 1:
            out.append("repetitions must be >= 1")
        seeds = self.seed_list
        if len(set(seeds)) != len(seeds):
            out.append("seeds must be distinct")
        if self.workers < 1:
            out.append("workers must be >= 1")
        if not self.scenarios:
            out.append("at least one scenario required")
        return out

    def configs(self) -> list[ScenarioConfig]:
        """Resolve every run up front; any bad reference aborts before a run starts."""
        problems = self.problems()
        if problems:
            raise ConfigError(problems)
        out = []
        for sc in self.scenarios:
            base = sc if isinstance(sc, ScenarioConfig) else load_scenario(sc)
            if self.duration_s is not None:
                base = base.replace(duration_s=self.duration_s)
            base = base.replace(record_timing=self.timing or base.record_timing,
                                check_invariants=self.check_invariants or base.check_invariants)
            variants = [p.apply(base) for p in self.policies] if self.policies else [base]
            for v in variants:
                v.validate()
                for seed in self.seed_list:
                    out.append(v.replace(seed=seed))
        return out


@dataclass
class ExperimentResult:
    reports: list[MetricsReport]
    summary: list[dict]


def summarize(reports: Sequence[MetricsReport]) -> list[dict]:
    """Aggregates per (scenario, policy), ordered by that key."""
    groups: dict[tuple[str, str], list[MetricsReport]] = {}
    for r in reports:
        groups.setdefault((r.scenario, r.policy), []).append(r)
    out = []
    for (sc, pol), rs in sorted(groups.items()):
        rs = sorted(rs, key=lambda r: r.seed)
        jains = [r.jain for r in rs if r.jain is not None]
        ginis = [r.gini for r in rs if r.gini is not None]
        pooled = [r.pooled_delays() for r in rs]
        pooled = np.concatenate(pooled) if pooled else np.zeros(0)
        rntis = [u.rnti for u in rs[0].ues]
        out.append({
            "scenario": sc, "policy": pol, "runs": len(rs), "seeds": [r.seed for r in rs],
            "starvation_rate": sum(r.any_starved for r in rs) / len(rs),
            "mean_jain": float(np.mean(jains)) if jains else None,
            "mean_gini": float(np.mean(ginis)) if ginis else None,
            "pooled_delay_ms": delay_stats(pooled).as_dict(),
            "mean_goodput_mbps": {str(rn): float(np.mean([r.ue(rn).avg_goodput_mbps for r in rs]))
                                  for rn in rntis},
        })
    return out


def _run_one(cfg: ScenarioConfig) -> MetricsReport:
    return run_scenario(cfg)


def run_experiment(plan: ExperimentPlan) -> ExperimentResult:
    cfgs = plan.configs()
    if plan.workers > 1 and len(cfgs) > 1 and not plan.timing:
        with ProcessPoolExecutor(plan.workers) as ex:
            reports = list(ex.map(_run_one, cfgs))
    else:
        # timing runs stay serial so measurements do not compete for a core
        reports = [_run_one(c) for c in cfgs]
    reports.sort(key=lambda r: (r.scenario, r.policy, r.seed))
    result = ExperimentResult(reports, summarize(reports))
    if plan.out_dir is not None:
        from .output import emit_outputs
        emit_outputs(result, plan.out_dir)
    return result
