"""Per-slot compute time of a policy on synthetic snapshots."""

from __future__ import annotations

import random
import time
from typing import Sequence

import numpy as np

from ..model import CellConfig, default_profiles, make_metrics, tbs_per_prb
from ..policies.base import Policy, PolicyState, SchedContext

SLOT_BUDGET_US = 400.0
CUTOFF_US = 380.0


def random_snapshots(ue_count: int, n: int, seed: int = 0, cell: CellConfig | None = None):
    """``n`` seeded metric snapshots of ``ue_count`` UEs with mixed 5QIs."""
    cell = cell or CellConfig()
    rng = random.Random(seed)
    qis = sorted(default_profiles())
    rntis = list(range(1000, 1000 + ue_count))
    five_qi = {r: rng.choice(qis) for r in rntis}
    out = []
    for _ in range(n):
        snap = []
        for r in rntis:
            cqi = rng.randint(1, 15)
            buf = 0 if rng.random() < 0.2 else rng.randint(100, 2_000_000)
            snap.append(make_metrics(r, tbs_per_prb(cqi, cell), buf, cqi=cqi,
                                     hol_delay_us=rng.randint(0, 200_000), five_qi=five_qi[r],
                                     dl_rsrp=rng.randint(-120, -70)))
        out.append(snap)
    return out


def profile_timing(policy: Policy, ue_count: int, trials: int = 1000, seed: int = 0,
                   cell: CellConfig | None = None) -> dict:
    """p50/p99/max of the wall time spent inside ``policy.allocate``, in µs."""
    if ue_count < 1 or trials < 1:
        raise ValueError("ue_count and trials must be >= 1")
    cell = cell or CellConfig()
    snaps = random_snapshots(ue_count, trials, seed, cell)
    state = PolicyState()
    rng = random.Random(seed + 1)
    for m in snaps[0]:
        state.add_ue(m.rnti)
        state.r_ave[m.rnti] = rng.uniform(0.1, 50.0)
    ctx = SchedContext(cell, state, default_profiles(), 0, random.Random(seed + 2))
    samples = np.empty(trials, dtype=np.int64)
    clock = time.perf_counter_ns
    for k, snap in enumerate(snaps):
        ctx.slot = k
        t0 = clock()
        policy.allocate(snap, ctx, cell.n_prbs)
        samples[k] = clock() - t0
    us = np.sort(samples) / 1e3
    return {"ue_count": ue_count, "trials": trials,
            "p50": float(np.percentile(us, 50)), "p99": float(np.percentile(us, 99)),
            "max": float(us[-1])}


def first_exceeding(profiles: Sequence[dict], cutoff_us: float = CUTOFF_US) -> int | None:
    """Smallest UE count whose max time exceeds the cutoff."""
    for p in sorted(profiles, key=lambda p: p["ue_count"]):
        if p["max"] > cutoff_us:
            return p["ue_count"]
    return None
