from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from ..model import Allocation, CellConfig, ConfigError, QosProfile, UeMetrics

NEG_INF = float("-inf")

EWMA_ALPHA = 0.01
RATE_FLOOR_MBPS = 1e-3


@dataclass
class PolicyState:
    """Scheduler memory that persists across slots of a single run."""

    alpha: float = EWMA_ALPHA
    r_ave: dict[int, float] = field(default_factory=dict)
    r_inst_avg: dict[int, float] = field(default_factory=dict)
    last_served_slot: dict[int, int] = field(default_factory=dict)
    phi: dict[int, int] = field(default_factory=dict)
    w_exp_pf: float = 1.0
    w_aexp_pf: float = 1.0
    fu_c: dict[int, float] = field(default_factory=dict)
    hol_avg: float = 0.0
    vt_level: dict[int, float] = field(default_factory=dict)
    vt_delay: dict[int, float] = field(default_factory=dict)
    # 2L-FLS: newest-first history of d[k] = B[k] - B[k+1] - r[k], plus the
    # pending (B, r) pair of the last DL slot whose successor buffer is unknown yet.
    fls_diff_history: dict[int, deque] = field(default_factory=dict)
    fls_pending: dict[int, tuple[int, int]] = field(default_factory=dict)

    def add_ue(self, rnti: int) -> None:
        self.r_ave.setdefault(rnti, RATE_FLOOR_MBPS)
        self.last_served_slot.setdefault(rnti, -1)
        self.phi.setdefault(rnti, 0)

    def advance(self, goodput_bytes: Mapping[int, int], slot_us: float) -> None:
        """EWMA of goodput; called once per slot, DL or not."""
        a = self.alpha
        keep = 1.0 - a
        scale = 8.0 / slot_us
        r_ave = self.r_ave
        for rnti, value in r_ave.items():
            v = keep * value + a * goodput_bytes.get(rnti, 0) * scale
            r_ave[rnti] = v if v > RATE_FLOOR_MBPS else RATE_FLOOR_MBPS

    def record_dl(self, metrics: Sequence[UeMetrics], alloc: Allocation, slot: int,
                  slot_us: float) -> None:
        a = self.alpha
        scale = 8.0 / slot_us
        ria = self.r_inst_avg
        for m in metrics:
            r = m.tbs_per_prb * scale
            prev = ria.get(m.rnti)
            ria[m.rnti] = r if prev is None else (1.0 - a) * prev + a * r
            if alloc.prbs.get(m.rnti, 0) > 0:
                self.last_served_slot[m.rnti] = slot


@dataclass
class SchedContext:
    cell: CellConfig
    state: PolicyState
    profiles: Mapping[int, QosProfile] = field(default_factory=dict)
    slot: int = 0
    rng: random.Random = field(default_factory=lambda: random.Random(0))
    max_buff: int = 10_000_000

    def r_inst(self, m: UeMetrics) -> float:
        """Mbps one PRB would carry for this UE in a DL slot."""
        return m.tbs_per_prb * 8.0 / self.cell.slot_duration_us

    def profile(self, m: UeMetrics) -> QosProfile:
        try:
            return self.profiles[m.five_qi]
        except KeyError:
            raise ConfigError(f"no QoS profile for 5QI {m.five_qi} (rnti {m.rnti})") from None


def allocate_by_values(values: Sequence[float], metrics: Sequence[UeMetrics], budget: int) -> Allocation:
    """Greedy loop shared by single-stage policies.

    UEs are visited by descending value, ties by ascending RNTI; each takes
    ``min(num_rbs_required, remaining)``. ``-inf`` values never receive PRBs.
    """
    order = sorted(range(len(metrics)), key=lambda i: (-values[i], metrics[i].rnti))
    out: dict[int, int] = {}
    remaining = budget
    for i in order:
        if remaining <= 0:
            break
        if values[i] == NEG_INF:
            continue
        m = metrics[i]
        n = m.num_rbs_required if m.num_rbs_required < remaining else remaining
        if n > 0:
            out[m.rnti] = n
            remaining -= n
    return Allocation(out)


class Policy:
    """A scheduler. Subclasses override :meth:`allocate`, or :meth:`values` for
    single-stage value-ranking schedulers."""

    name = "policy"
    qos_aware = False

    def values(self, metrics: Sequence[UeMetrics], ctx: SchedContext) -> list[float]:
        raise NotImplementedError

    def allocate(self, metrics: Sequence[UeMetrics], ctx: SchedContext, budget: int) -> Allocation:
        return allocate_by_values(self.values(metrics, ctx), metrics, budget)

    def observe(self, metrics: Sequence[UeMetrics], served: Mapping[int, int], ctx: SchedContext) -> None:
        """Post-transmission hook, called on DL slots with bytes dequeued per RNTI."""

    def __repr__(self):
        params = ", ".join(f"{k}={v!r}" for k, v in vars(self).items() if not k.startswith("_"))
        return f"{type(self).__name__}({params})"


# name -> (factory, description)
POLICIES: dict[str, tuple[Callable[..., Policy], str]] = {}


def register_policy(name: str, description: str = ""):
    def deco(factory):
        if name in POLICIES:
            raise ValueError(f"policy {name!r} already registered")
        POLICIES[name] = (factory, description)
        return factory
    return deco


def make_policy(name: str, **params) -> Policy:
    try:
        factory, _ = POLICIES[name]
    except KeyError:
        raise ConfigError(f"unknown policy {name!r}; known: {', '.join(sorted(POLICIES))}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ConfigError(f"policy {name!r}: {exc}") from None
