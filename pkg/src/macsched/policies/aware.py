"""QoS-aware schedulers driven by head-of-line delay against per-5QI targets."""

from __future__ import annotations

import math
from typing import Sequence

from ..model import UeMetrics
from .base import NEG_INF, Policy, SchedContext, register_policy
from .unaware import mask_empty

# exp() argument ceiling; LTTI has a pole at HoL == delta.
EXP_CAP = 50.0


def _exp(x: float) -> float:
    return math.exp(x if x < EXP_CAP else EXP_CAP)


def delay_weight(pdb: float, delta_s: float) -> float:
    """-log(PDB) / delta, the urgency weight shared by the delay-aware rules."""
    return -math.log(pdb) / delta_s


def ltti_value(pf: float, delta_s: float, hol_s: float, pdb: float) -> float:
    if hol_s >= delta_s:
        arg = EXP_CAP
    else:
        arg = delta_s / (delta_s - hol_s)
    return delay_weight(pdb, delta_s) * pf * _exp(arg)


def wdps_value(pf: float, delta_s: float, hol_s: float, pdb: float) -> float:
    kd = delay_weight(pdb, delta_s) * hol_s
    return math.log1p(kd) * kd * pf


def qos_fk_value(hol_s: float, delta_s: float, buffer: float, max_buff: float,
                 priority: float, loss: float = 0.0) -> float:
    return (16.0 * math.tanh(hol_s / delta_s) + 2.0 * math.tanh(buffer / max_buff)
            + 4.0 * math.tanh(priority) + 4.0 * math.tanh(loss))


def qos_log_rule_value(r_inst: float, r_ave: float, hol_s: float, b: float, c: float) -> float:
    return b * math.log(c + 5.0 / r_ave * hol_s) * r_inst


def exp_pf_update_w(w: float, rt_over_target: bool, eps: float = 0.01,
                    w_min: float = 1e-3, w_max: float = 1e3) -> float:
    """Multiplicative NRT-weight update.

    While RT delays sit within target the NRT class is considered under-served
    and ``w`` grows; otherwise it shrinks.
    """
    w = w * (1.0 - eps) if rt_over_target else w * (1.0 + eps)
    return min(max(w, w_min), w_max)


def _common(metrics: Sequence[UeMetrics], ctx: SchedContext):
    scale = 8.0 / ctx.cell.slot_duration_us
    r_ave = ctx.state.r_ave
    pf = [m.tbs_per_prb * scale / r_ave[m.rnti] for m in metrics]
    profiles = [ctx.profile(m) for m in metrics]
    hol = [m.hol_delay_us * 1e-6 for m in metrics]
    return pf, profiles, hol


@register_policy("ltti", "LTTI: exponential urgency as HoL approaches the delay target")
class Ltti(Policy):
    name = "ltti"
    qos_aware = True

    def values(self, metrics, ctx):
        pf, profiles, hol = _common(metrics, ctx)
        vals = [ltti_value(p, q.delta_s, h, q.pdb) for p, q, h in zip(pf, profiles, hol)]
        return mask_empty(vals, metrics)


@register_policy("wd_ps", "Weighted delay-based packet scheduling")
class WdPs(Policy):
    name = "wd_ps"
    qos_aware = True

    def values(self, metrics, ctx):
        pf, profiles, hol = _common(metrics, ctx)
        vals = [wdps_value(p, q.delta_s, h, q.pdb) for p, q, h in zip(pf, profiles, hol)]
        return mask_empty(vals, metrics)


@register_policy("qos_fk", "QoS fractional knapsack: tanh-weighted delay, buffer, priority")
class QosFk(Policy):
    name = "qos_fk"
    qos_aware = True

    def values(self, metrics, ctx):
        vals = []
        for m in metrics:
            q = ctx.profile(m)
            # packet loss is not observable at the MAC: L_i = 0
            vals.append(qos_fk_value(m.hol_delay_us * 1e-6, q.delta_s, m.buffer_length,
                                     ctx.max_buff, q.priority))
        return mask_empty(vals, metrics)


@register_policy("qos_log_rule", "Log rule on HoL delay scaled by 5/R_ave")
class QosLogRule(Policy):
    name = "qos_log_rule"
    qos_aware = True

    def __init__(self, c: float = 1.1, b: float | None = None):
        if c < 1:
            raise ValueError("log rule requires c >= 1")
        self.c = c
        self.b = b

    def values(self, metrics, ctx):
        scale = 8.0 / ctx.cell.slot_duration_us
        r_ave = ctx.state.r_ave
        ria = ctx.state.r_inst_avg
        vals = []
        for m in metrics:
            ctx.profile(m)
            ri = m.tbs_per_prb * scale
            if self.b is not None:
                b = self.b
            else:
                mean = ria.get(m.rnti, 0.0)
                b = 1.0 / mean if mean > 0 else 1.0 / max(ri, 1e-9)
            vals.append(qos_log_rule_value(ri, r_ave[m.rnti], m.hol_delay_us * 1e-6, b, self.c))
        return mask_empty(vals, metrics)


class _ExpFamily(Policy):
    qos_aware = True

    def __init__(self, eps: float = 0.01, w_min: float = 1e-3, w_max: float = 1e3):
        if eps < 0 or not 0 < w_min <= w_max:
            raise ValueError("need eps >= 0 and 0 < w_min <= w_max")
        self.eps = eps
        self.w_min = w_min
        self.w_max = w_max

    def _split(self, metrics, profiles):
        rt = [i for i, (m, q) in enumerate(zip(metrics, profiles)) if q.is_rt and m.buffer_length > 0]
        nrt = [i for i, (m, q) in enumerate(zip(metrics, profiles)) if not q.is_rt and m.buffer_length > 0]
        return rt, nrt


@register_policy("exp_pf", "EXP/PF: exponential rule for RT, w-weighted PF for NRT")
class ExpPf(_ExpFamily):
    name = "exp_pf"

    def values(self, metrics, ctx):
        pf, profiles, hol = _common(metrics, ctx)
        rt, nrt = self._split(metrics, profiles)
        k = [delay_weight(q.pdb, q.delta_s) for q in profiles]
        avg = sum(k[i] * hol[i] for i in rt) / len(rt) if rt else 0.0
        ctx.state.hol_avg = avg
        denom = 1.0 + math.sqrt(avg)
        buff_rt = max(sum(metrics[i].buffer_length for i in rt), 1)
        w = ctx.state.w_exp_pf
        vals = [NEG_INF] * len(metrics)
        for i in rt:
            vals[i] = _exp((k[i] * hol[i] - avg) / denom) * pf[i]
        for i in nrt:
            vals[i] = w / buff_rt * pf[i]
        plain_avg = sum(hol[i] for i in rt) / len(rt) if rt else 0.0
        threshold = max((q.delta_s for q in profiles if q.is_rt), default=math.inf)
        ctx.state.w_exp_pf = exp_pf_update_w(w, plain_avg > threshold, self.eps, self.w_min, self.w_max)
        return vals


@register_policy("a_exp_pf", "Adaptive EXP/PF")
class AExpPf(_ExpFamily):
    name = "a_exp_pf"

    def __init__(self, c_ms: float = 10.0, **kw):
        super().__init__(**kw)
        if c_ms <= 0:
            raise ValueError("c_ms must be > 0")
        self.c_ms = c_ms

    def values(self, metrics, ctx):
        pf, profiles, hol = _common(metrics, ctx)
        rt, nrt = self._split(metrics, profiles)
        c = self.c_ms * 1e-3
        avg = sum(c / profiles[i].pdb * hol[i] for i in rt) / len(rt) if rt else 0.0
        ctx.state.hol_avg = avg
        denom = 1.0 + math.sqrt(avg)
        buff_nrt = max(sum(metrics[i].buffer_length for i in nrt), 1)
        w = ctx.state.w_aexp_pf
        vals = [NEG_INF] * len(metrics)
        for i in rt:
            a = c / profiles[i].delta_s
            vals[i] = a * _exp((a * hol[i] - avg) / denom) * pf[i]
        for i in nrt:
            vals[i] = w / buff_nrt * pf[i]
        plain_avg = sum(hol[i] for i in rt) / len(rt) if rt else 0.0
        ctx.state.w_aexp_pf = exp_pf_update_w(w, plain_avg > c, self.eps, self.w_min, self.w_max)
        return vals
