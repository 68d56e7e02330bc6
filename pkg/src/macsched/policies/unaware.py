"""QoS-unaware value functions: the classic baselines and PF variants."""

from __future__ import annotations

import math
from typing import Sequence

from ..model import UeMetrics
from .base import NEG_INF, Policy, SchedContext, register_policy

LOG_FLOOR = 1e-6


def pf_values(r_inst: Sequence[float], r_ave: Sequence[float]) -> list[float]:
    return [ri / ra for ri, ra in zip(r_inst, r_ave)]


def gpf_values(r_inst, r_ave, beta: float, gamma: float) -> list[float]:
    return [ri ** beta / ra ** gamma for ri, ra in zip(r_inst, r_ave)]


def pfb_values(r_inst, r_ave, buffers) -> list[float]:
    return [ri / ra * b for ri, ra, b in zip(r_inst, r_ave, buffers)]


def gpfb_values(r_inst, r_ave, buffers, beta: float, gamma: float, use_buffer: bool = True) -> list[float]:
    vals = gpf_values(r_inst, r_ave, beta, gamma)
    if use_buffer:
        vals = [v * b for v, b in zip(vals, buffers)]
    return vals


def log_rule_values(r_inst, buffers, b, c: float, a) -> list[float]:
    """``b_i * log(c + a_i * B_i) * R_inst``; ``b`` and ``a`` are per-UE sequences."""
    return [bi * math.log(c + ai * buf) * ri for ri, buf, bi, ai in zip(r_inst, buffers, b, a)]


def lean_values(r_inst, r_ave, cqi, max_mcs, alpha_rre: float, alpha_f: float) -> list[float]:
    out = []
    for ri, ra, q, mx in zip(r_inst, r_ave, cqi, max_mcs):
        x = max(ri / ra, LOG_FLOOR)
        y = max(q / mx if mx > 0 else 0.0, LOG_FLOOR)
        out.append(alpha_rre * math.log(x) + alpha_f * math.log(y))
    return out


def mask_empty(values: list[float], metrics: Sequence[UeMetrics]) -> list[float]:
    return [NEG_INF if m.buffer_length <= 0 else v for v, m in zip(values, metrics)]


def _rates(metrics, ctx: SchedContext):
    scale = 8.0 / ctx.cell.slot_duration_us
    r_ave = ctx.state.r_ave
    return [m.tbs_per_prb * scale for m in metrics], [r_ave[m.rnti] for m in metrics]


@register_policy("rr", "Round robin: longest time since last service first")
class RoundRobin(Policy):
    name = "rr"

    def values(self, metrics, ctx):
        last = ctx.state.last_served_slot
        return mask_empty([float(ctx.slot - last[m.rnti]) for m in metrics], metrics)


@register_policy("bcqi", "Best CQI")
class BestCqi(Policy):
    name = "bcqi"

    def values(self, metrics, ctx):
        return mask_empty([float(m.cqi) for m in metrics], metrics)


@register_policy("ft", "Fair throughput: lowest average goodput first")
class FairThroughput(Policy):
    name = "ft"

    def values(self, metrics, ctx):
        r_ave = ctx.state.r_ave
        return mask_empty([-r_ave[m.rnti] for m in metrics], metrics)


@register_policy("pf", "Proportional fair")
class ProportionalFair(Policy):
    name = "pf"

    def values(self, metrics, ctx):
        return mask_empty(pf_values(*_rates(metrics, ctx)), metrics)


@register_policy("lean", "Lean scheduler: PF term blended with a CQI/MCS_max term")
class Lean(Policy):
    name = "lean"

    def __init__(self, s_lean: float = 1.0):
        if s_lean <= 0:
            raise ValueError("s_lean must be > 0")
        self.s_lean = s_lean
        # alpha_rre + s_lean * alpha_f = 1 with alpha_rre = alpha_f
        self.alpha_rre = self.alpha_f = 1.0 / (1.0 + s_lean)

    def values(self, metrics, ctx):
        r_inst, r_ave = _rates(metrics, ctx)
        vals = lean_values(r_inst, r_ave, [m.cqi for m in metrics], [m.max_mcs for m in metrics],
                           self.alpha_rre, self.alpha_f)
        return mask_empty(vals, metrics)


@register_policy("log_rule", "Log rule: buffer-weighted log utility")
class LogRule(Policy):
    name = "log_rule"

    def __init__(self, c: float = 1.1, a: float | None = None, b: float | None = None):
        if c < 1:
            raise ValueError("log rule requires c >= 1")
        self.c = c
        self.a = a
        self.b = b

    def values(self, metrics, ctx):
        r_inst, _ = _rates(metrics, ctx)
        a = self.a if self.a is not None else 10.0 / ctx.max_buff
        ria = ctx.state.r_inst_avg
        if self.b is not None:
            bs = [self.b] * len(metrics)
        else:
            bs = [1.0 / ria[m.rnti] if ria.get(m.rnti, 0) > 0 else 1.0 / max(ri, 1e-9)
                  for m, ri in zip(metrics, r_inst)]
        vals = log_rule_values(r_inst, [m.buffer_length for m in metrics], bs, self.c,
                               [a] * len(metrics))
        return mask_empty(vals, metrics)


@register_policy("pfb", "Proportional fair x buffer length")
class ProportionalFairBuffer(Policy):
    name = "pfb"

    def values(self, metrics, ctx):
        r_inst, r_ave = _rates(metrics, ctx)
        return mask_empty(pfb_values(r_inst, r_ave, [m.buffer_length for m in metrics]), metrics)


@register_policy("gpf", "Generalized PF: R_inst^beta / R_ave^gamma")
class GeneralizedPF(Policy):
    name = "gpf"

    def __init__(self, beta: float = 0.6, gamma: float = 0.7):
        if beta <= 0 or gamma <= 0:
            raise ValueError("GPF requires beta, gamma > 0")
        self.beta = beta
        self.gamma = gamma

    def values(self, metrics, ctx):
        return mask_empty(gpf_values(*_rates(metrics, ctx), self.beta, self.gamma), metrics)


@register_policy("gpfb", "Generalized PF x buffer length (buffer factor optional)")
class GeneralizedPFBuffer(Policy):
    name = "gpfb"

    def __init__(self, beta: float = 0.6, gamma: float = 0.7, use_buffer: bool = True):
        if beta <= 0 or gamma <= 0:
            raise ValueError("GPFB requires beta, gamma > 0")
        self.beta = beta
        self.gamma = gamma
        self.use_buffer = bool(use_buffer)

    def values(self, metrics, ctx):
        r_inst, r_ave = _rates(metrics, ctx)
        vals = gpfb_values(r_inst, r_ave, [m.buffer_length for m in metrics],
                           self.beta, self.gamma, self.use_buffer)
        return mask_empty(vals, metrics)
