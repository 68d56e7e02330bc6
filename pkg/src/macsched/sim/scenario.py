"""Scenario configuration and the YAML loader for it."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import yaml

from ..ibs.compose import CompositionPolicy, CompositionSpec, composition_from_dict, load_composition
from ..model import CellConfig, ConfigError, QosProfile, default_profiles
from ..policies import POLICIES, make_policy
from .channel import ChannelModel
from .traffic import CbrSource, FullBufferSource, OnOffSource, source_from_dict, source_to_dict

MAX_BUFF = 10_000_000


@dataclass(frozen=True)
class UeConfig:
    rnti: int
    mean_cqi: float
    traffic: CbrSource | OnOffSource | FullBufferSource | None = None
    bler: float = 0.0
    five_qi: int = 9


def policy_label(name: str, params: Mapping[str, Any] | None = None) -> str:
    if not params:
        return name
    return name + "".join(f"_{k}{params[k]}" for k in sorted(params))


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    ues: tuple[UeConfig, ...]
    cell: CellConfig = field(default_factory=CellConfig)
    profiles: Mapping[int, QosProfile] = field(default_factory=default_profiles)
    channel: ChannelModel = field(default_factory=ChannelModel)
    policy: str | None = "pf"
    policy_params: Mapping[str, Any] = field(default_factory=dict)
    composition: CompositionSpec | None = None
    duration_s: float = 60.0
    seed: int = 1
    max_buff: int = MAX_BUFF
    check_invariants: bool = False
    record_timing: bool = False

    def replace(self, **kw) -> "ScenarioConfig":
        return dataclasses.replace(self, **kw)

    def with_policy(self, name: str, **params) -> "ScenarioConfig":
        return self.replace(policy=name, policy_params=params, composition=None)

    def with_composition(self, spec: CompositionSpec) -> "ScenarioConfig":
        return self.replace(policy=None, policy_params={}, composition=spec)

    @property
    def policy_label(self) -> str:
        if self.composition is not None:
            return self.composition.name
        return policy_label(self.policy or "none", self.policy_params)

    def problems(self) -> list[str]:
        out = []
        if self.duration_s < 0:
            out.append("duration_s must be >= 0")
        if self.max_buff <= 0:
            out.append("max_buff must be > 0")
        if not self.ues:
            out.append("ues: at least one UE required")
        seen = set()
        for i, u in enumerate(self.ues):
            if u.rnti in seen:
                out.append(f"ues[{i}].rnti: duplicate {u.rnti}")
            seen.add(u.rnti)
            if not 1 <= u.mean_cqi <= 15:
                out.append(f"ues[{i}].mean_cqi: must be in [1, 15]")
            if not 0 <= u.bler < 1:
                out.append(f"ues[{i}].bler: must be in [0, 1)")
            if u.five_qi not in self.profiles:
                out.append(f"ues[{i}].five_qi: no QoS profile for {u.five_qi}")
            if u.traffic is None:
                out.append(f"ues[{i}].traffic: required")
        if (self.policy is None) == (self.composition is None):
            out.append("exactly one of policy or composition must be set")
        elif self.policy is not None:
            try:
                make_policy(self.policy, **dict(self.policy_params))
            except (ConfigError, ValueError) as exc:
                out.append(f"policy: {exc}")
        else:
            try:
                self.composition.compile()
            except ConfigError as exc:
                out.extend(f"composition: {p}" for p in exc.problems)
        return out

    def validate(self) -> "ScenarioConfig":
        p = self.problems()
        if p:
            raise ConfigError(p)
        return self

    def build_policy(self):
        if self.composition is not None:
            return CompositionPolicy(self.composition)
        return make_policy(self.policy, **dict(self.policy_params))


# ---------------------------------------------------------------- loading

PRESET_NAMES = ("iperf24", "bursty", "bursty1500", "listing2", "listing3")


def preset_path(name: str):
    return resources.files("macsched") / "presets" / f"{name}.yaml"


def _read(source) -> tuple[str, str]:
    """Resolve a preset name or a file path to (text, origin)."""
    if isinstance(source, (str, Path)) and str(source) in PRESET_NAMES:
        return preset_path(str(source)).read_text(), str(source)
    p = Path(source)
    if not p.exists():
        raise ConfigError(f"scenario {source!r}: not a preset ({', '.join(PRESET_NAMES)}) or a file")
    return p.read_text(), str(p)


def _profiles(raw, problems) -> dict[int, QosProfile]:
    profiles = default_profiles()
    for k, v in (raw or {}).items():
        try:
            qi = int(k)
            profiles[qi] = QosProfile(
                qi, delta_us=float(v["delta_ms"]) * 1000, pdb=float(v["pdb"]),
                gbr_mbps=float(v.get("gbr_mbps", 0.0)), is_rt=bool(v.get("rt", False)),
                priority=float(v.get("priority", 0.0)), bursty=bool(v.get("bursty", False)))
        except ConfigError as exc:
            problems.extend(f"qos.{k}: {p}" for p in exc.problems)
        except (KeyError, TypeError, ValueError) as exc:
            problems.append(f"qos.{k}: {exc!r}")
    return profiles


def scenario_from_dict(d: Mapping[str, Any], base_dir: Path | None = None) -> ScenarioConfig:
    problems: list[str] = []
    known = {"name", "cell", "qos", "channel", "ues", "policy", "composition", "duration_s",
             "seed", "max_buff", "check_invariants", "record_timing", "description", "defaults"}
    for k in set(d) - known:
        problems.append(f"{k}: unknown key")
    try:
        cell = CellConfig(**(d.get("cell") or {}))
    except ConfigError as exc:
        problems.extend(exc.problems)
        cell = CellConfig()
    except TypeError as exc:
        problems.append(f"cell: {exc}")
        cell = CellConfig()
    profiles = _profiles(d.get("qos"), problems)
    try:
        channel = ChannelModel(**(d.get("channel") or {}))
    except (TypeError, ValueError) as exc:
        problems.append(f"channel: {exc}")
        channel = ChannelModel()
    defaults = d.get("defaults") or {}
    ues = []
    for i, raw in enumerate(d.get("ues") or []):
        u = {**defaults, **raw}
        try:
            ues.append(UeConfig(rnti=int(u["rnti"]), mean_cqi=float(u["mean_cqi"]),
                                traffic=source_from_dict(u["traffic"]), bler=float(u.get("bler", 0.0)),
                                five_qi=int(u.get("five_qi", 9))))
        except (KeyError, TypeError, ValueError) as exc:
            problems.append(f"ues[{i}]: {exc!r}")
    policy, params, comp = None, {}, None
    if d.get("composition") is not None:
        c = d["composition"]
        try:
            if isinstance(c, str):
                comp = _composition_ref(c, base_dir)
            else:
                comp = composition_from_dict(c)
        except ConfigError as exc:
            problems.extend(f"composition: {p}" for p in exc.problems)
    else:
        p = d.get("policy", "pf")
        if isinstance(p, str):
            policy = p
        elif isinstance(p, Mapping):
            policy, params = p.get("name"), dict(p.get("params") or {})
        if policy not in POLICIES:
            problems.append(f"policy: unknown policy {policy!r}")
    if problems:
        raise ConfigError(problems)
    return ScenarioConfig(
        name=str(d.get("name", "scenario")), ues=tuple(ues), cell=cell, profiles=profiles,
        channel=channel, policy=policy, policy_params=params, composition=comp,
        duration_s=float(d.get("duration_s", 60.0)), seed=int(d.get("seed", 1)),
        max_buff=int(d.get("max_buff", MAX_BUFF)),
        check_invariants=bool(d.get("check_invariants", False)),
        record_timing=bool(d.get("record_timing", False)),
    ).validate()


def _composition_ref(ref: str, base_dir: Path | None) -> CompositionSpec:
    """A composition by preset name (its ``composition`` section) or YAML file."""
    if ref in PRESET_NAMES:
        data = yaml.safe_load(preset_path(ref).read_text())
        if not data.get("composition"):
            raise ConfigError(f"preset {ref!r} has no composition")
        return composition_from_dict(data["composition"])
    p = Path(ref)
    if base_dir is not None and not p.is_absolute():
        p = base_dir / p
    if not p.exists():
        raise ConfigError(f"composition {ref!r}: no such preset or file")
    text = p.read_text()
    data = yaml.safe_load(text)
    if isinstance(data, Mapping) and "composition" in data and "groups" not in data:
        return composition_from_dict(data["composition"])
    return load_composition(p)


def load_composition_ref(ref: str) -> CompositionSpec:
    return _composition_ref(ref, None)


def load_scenario(source) -> ScenarioConfig:
    text, origin = _read(source)
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{origin}: YAML syntax error: {exc}") from None
    if not isinstance(data, Mapping):
        raise ConfigError(f"{origin}: expected a mapping")
    base = None if origin in PRESET_NAMES else Path(origin).parent
    try:
        return scenario_from_dict(data, base)
    except ConfigError as exc:
        raise ConfigError([f"{origin}: {p}" for p in exc.problems]) from None


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    """Plain-data echo of a scenario (used in run manifests)."""
    return {
        "name": cfg.name, "seed": cfg.seed, "duration_s": cfg.duration_s,
        "policy": cfg.policy_label,
        "cell": dataclasses.asdict(cfg.cell),
        "channel": dataclasses.asdict(cfg.channel),
        "ues": [{"rnti": u.rnti, "mean_cqi": u.mean_cqi, "bler": u.bler, "five_qi": u.five_qi,
                 "traffic": source_to_dict(u.traffic)} for u in cfg.ues],
    }
