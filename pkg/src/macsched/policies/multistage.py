"""Schedulers that run more than one ranking pass per slot."""

from __future__ import annotations

import math
from collections import deque
from operator import mul
from typing import Sequence

from ..ibs.knapsack import KnapsackRound, solve_knapsack_round
from ..model import Allocation, BUFFER_OVERHEAD, UeMetrics
from .aware import EXP_CAP
from .base import NEG_INF, Policy, SchedContext, allocate_by_values, register_policy
from .unaware import mask_empty, pf_values


def _pf(metrics, ctx):
    scale = 8.0 / ctx.cell.slot_duration_us
    r_ave = ctx.state.r_ave
    return mask_empty(pf_values([m.tbs_per_prb * scale for m in metrics],
                                [r_ave[m.rnti] for m in metrics]), metrics)


def _merge(*allocs: Allocation) -> Allocation:
    out: dict[int, int] = {}
    for a in allocs:
        for r, n in a.prbs.items():
            out[r] = out.get(r, 0) + n
    return Allocation(out)


# ---------------------------------------------------------------- EUFS

def preemption_probability(p_pf: float, n_fus: int, k: float, fu_sum: float) -> float:
    pf_c = p_pf * n_fus * k / (1.0 - p_pf)
    if pf_c <= 0:
        return 0.0
    return pf_c / (pf_c + fu_sum)


def edge_users(metrics: Sequence[UeMetrics], r_ave, fraction: float) -> list[int]:
    """Bottom ``ceil(fraction * N)`` backlogged UEs by average rate."""
    active = [m.rnti for m in metrics if m.buffer_length > 0]
    n = math.ceil(fraction * len(active) - 1e-9)
    return sorted(active, key=lambda r: (r_ave[r], r))[:n]


@register_policy("eufs", "Edge-user fair scheduler: PF with probabilistic cell-edge preemption")
class Eufs(Policy):
    name = "eufs"

    def __init__(self, p_pf: float = 0.8, k: float = 1.0, edge_fraction: float = 0.4,
                 fu_step: float = 0.1, fu_init: float = 1.0):
        if not 0 < p_pf < 1:
            raise ValueError("p_pf must be in (0, 1)")
        if not 0 < edge_fraction < 1 or k <= 0 or fu_step < 0 or fu_init < 0:
            raise ValueError("EUFS needs edge_fraction in (0, 1), k > 0, fu_step, fu_init >= 0")
        self.p_pf = p_pf
        self.k = k
        self.edge_fraction = edge_fraction
        self.fu_step = fu_step
        self.fu_init = fu_init
        self.last_preempted = False

    def allocate(self, metrics, ctx, budget):
        st = ctx.state
        fu = st.fu_c
        for m in metrics:
            fu.setdefault(m.rnti, self.fu_init)
        pf = _pf(metrics, ctx)
        edge = edge_users(metrics, st.r_ave, self.edge_fraction)
        p = preemption_probability(self.p_pf, len(edge), self.k, sum(fu[r] for r in edge))
        # always draw so the stream position does not depend on the edge set
        preempt = ctx.rng.random() < p
        self.last_preempted = preempt
        if preempt:
            # second round: edge UEs first, PF order inside each tier
            edge_set = set(edge)
            order = sorted(range(len(metrics)),
                           key=lambda i: (metrics[i].rnti not in edge_set, -pf[i], metrics[i].rnti))
            rank = [0.0] * len(metrics)
            for pos, i in enumerate(order):
                rank[i] = NEG_INF if pf[i] == NEG_INF else float(len(order) - pos)
            alloc = allocate_by_values(rank, metrics, budget)
        else:
            alloc = allocate_by_values(pf, metrics, budget)
        step = -self.fu_step if preempt else self.fu_step
        for r in fu:
            fu[r] = max(0.0, fu[r] + step)
        return alloc


# ---------------------------------------------------------------- RAD-DS

def rad_ds_gate(metrics: Sequence[UeMetrics], ctx: SchedContext) -> list[float]:
    """Gate value phi * RA * DS per UE; ``-inf`` for empty buffers."""
    scale = 8.0 / ctx.cell.slot_duration_us
    profiles = [ctx.profile(m) for m in metrics]
    active = [m.buffer_length > 0 for m in metrics]
    ra = [0.0] * len(metrics)
    ra_rt_sum = 0.0
    n_nrt = 0
    for i, (m, q) in enumerate(zip(metrics, profiles)):
        if not active[i]:
            continue
        if q.is_rt:
            r_inst = m.tbs_per_prb * scale
            ra[i] = q.gbr_mbps / r_inst if r_inst > 0 else 0.0
            ra_rt_sum += ra[i]
        else:
            n_nrt += 1
    if n_nrt:
        ra_nrt = max(0.0, ctx.cell.n_prbs - ra_rt_sum / n_nrt)
        for i, q in enumerate(profiles):
            if active[i] and not q.is_rt:
                ra[i] = ra_nrt
    phi = ctx.state.phi
    out = []
    for i, (m, q) in enumerate(zip(metrics, profiles)):
        if not active[i]:
            out.append(NEG_INF)
            continue
        ds = 1.0 + m.hol_delay_us * 1e-6 / q.delta_s if q.is_rt else 1.0
        out.append(phi.get(m.rnti, 0) * ra[i] * ds)
    return out


@register_policy("rad_ds", "Resource-allocation / delay-sensitivity gate, then PF")
class RadDs(Policy):
    name = "rad_ds"
    qos_aware = True

    def __init__(self, admit_fraction: float = 0.5):
        if not 0 < admit_fraction <= 1:
            raise ValueError("admit_fraction must be in (0, 1]")
        self.admit_fraction = admit_fraction

    def admitted(self, gate: Sequence[float], metrics) -> set[int]:
        active = [i for i, g in enumerate(gate) if g != NEG_INF]
        positive = sorted((i for i in active if gate[i] > 0),
                          key=lambda i: (-gate[i], metrics[i].rnti))
        if not positive:
            return set(active)
        return set(positive[:math.ceil(self.admit_fraction * len(active) - 1e-9)])

    def allocate(self, metrics, ctx, budget):
        gate = rad_ds_gate(metrics, ctx)
        admit = self.admitted(gate, metrics)
        pf = _pf(metrics, ctx)
        vals = [v if i in admit else NEG_INF for i, v in enumerate(pf)]
        alloc = allocate_by_values(vals, metrics, budget)
        phi = ctx.state.phi
        for m in metrics:
            phi[m.rnti] = 0 if alloc.get(m.rnti) > 0 else phi.get(m.rnti, 0) + 1
        return alloc


# ---------------------------------------------------------------- VT-SH

def shapley_two_groups(demand_rt: float, demand_nrt: float, budget: float) -> tuple[float, float]:
    """Exact Shapley values of the RT/NRT game with v(S) = min(demand_S, budget)."""
    def v(d):
        return min(d, budget)
    both = v(demand_rt + demand_nrt)
    phi_rt = 0.5 * v(demand_rt) + 0.5 * (both - v(demand_nrt))
    phi_nrt = 0.5 * v(demand_nrt) + 0.5 * (both - v(demand_rt))
    return phi_rt, phi_nrt


def shapley_budget_split(demand_rt: int, demand_nrt: int, budget: int) -> tuple[int, int]:
    phi_rt, _ = shapley_two_groups(demand_rt, demand_nrt, budget)
    rt = min(budget, int(math.floor(phi_rt + 0.5)))
    return rt, budget - rt


def vt_sh_rt_value(pf: float, delta_s: float, v_s: float, hol_avg_s: float) -> float:
    arg = (6.0 / delta_s) * v_s / (1.0 + math.sqrt(hol_avg_s))
    return math.exp(arg if arg < EXP_CAP else EXP_CAP) * pf


@register_policy("vt_sh", "Virtual-token Shapley: RT/NRT split by Shapley value, then per-group rules")
class VtSh(Policy):
    name = "vt_sh"
    qos_aware = True

    def __init__(self, token_rate_mbps: float | None = None):
        if token_rate_mbps is not None and token_rate_mbps <= 0:
            raise ValueError("token_rate_mbps must be > 0")
        self.token_rate_mbps = token_rate_mbps

    def _rate(self, q) -> float:
        return self.token_rate_mbps if self.token_rate_mbps is not None else q.gbr_mbps

    def values(self, metrics, ctx):
        pf = _pf(metrics, ctx)
        profiles = [ctx.profile(m) for m in metrics]
        rt_hol = [m.hol_delay_us * 1e-6 for m, q in zip(metrics, profiles)
                  if q.is_rt and m.buffer_length > 0]
        hol_avg = sum(rt_hol) / len(rt_hol) if rt_hol else 0.0
        ctx.state.hol_avg = hol_avg
        vd = ctx.state.vt_delay
        out = []
        for m, q, p in zip(metrics, profiles, pf):
            if p == NEG_INF or not q.is_rt:
                out.append(p)
            else:
                out.append(vt_sh_rt_value(p, q.delta_s, vd.get(m.rnti, 0.0), hol_avg))
        return out

    def allocate(self, metrics, ctx, budget):
        vals = self.values(metrics, ctx)
        rt_idx = [i for i, m in enumerate(metrics) if ctx.profile(m).is_rt]
        nrt_idx = [i for i in range(len(metrics)) if i not in set(rt_idx)]
        rt_m = [metrics[i] for i in rt_idx]
        nrt_m = [metrics[i] for i in nrt_idx]
        rt_v = [vals[i] for i in rt_idx]
        nrt_v = [vals[i] for i in nrt_idx]
        d_rt = sum(m.num_rbs_required for m in rt_m)
        d_nrt = sum(m.num_rbs_required for m in nrt_m)
        b_rt, b_nrt = shapley_budget_split(d_rt, d_nrt, budget)
        a_rt = allocate_by_values(rt_v, rt_m, b_rt)
        a_nrt = allocate_by_values(nrt_v, nrt_m, b_nrt + b_rt - a_rt.total)
        spare = budget - a_rt.total - a_nrt.total
        if spare > 0:
            # unused NRT share flows back to RT UEs with residual need
            rest = [m._replace(num_rbs_required=m.num_rbs_required - a_rt.get(m.rnti)) for m in rt_m]
            return _merge(a_rt, a_nrt, allocate_by_values(rt_v, rest, spare))
        return _merge(a_rt, a_nrt)

    def observe(self, metrics, served, ctx):
        st = ctx.state
        cell = ctx.cell
        for m in metrics:
            q = ctx.profile(m)
            if not q.is_rt:
                continue
            rate = self._rate(q)
            if rate <= 0:
                continue
            per_sec = rate * 1e6 / 8.0
            # virtual arrivals spread over DL slots only
            tokens = per_sec * cell.slot_duration_s / cell.dl_fraction
            level = max(0.0, st.vt_level.get(m.rnti, 0.0) + tokens - served.get(m.rnti, 0))
            st.vt_level[m.rnti] = level
            st.vt_delay[m.rnti] = level / per_sec


# ---------------------------------------------------------------- 2L-FLS

def fls_window(delta_s: float, slot_s: float, dl_fraction: float) -> int:
    """Filter length M counted in DL slots."""
    return max(1, math.floor(delta_s / slot_s * dl_fraction + 1e-9))


def fls_coefficients(m: int, decay: float = 0.5) -> list[float]:
    """c[2..M] as a list; index 0 holds c[2]."""
    return [decay ** (n - 1) for n in range(2, m + 1)]


def fls_quota(buffer_now: float, diffs_newest_first: Sequence[float], coeffs: Sequence[float]) -> float:
    """``B[t] + sum_n (B[t-n+1] - B[t-n+2] - r[t-n+1]) c[n]``, clamped at zero.

    ``diffs_newest_first[k]`` is ``B[t-k-1] - B[t-k] - r[t-k-1]``; missing
    history contributes nothing.
    """
    total = buffer_now + sum(map(mul, diffs_newest_first, coeffs))
    return total if total > 0 else 0.0


def fls_quota_from_series(buffers: Sequence[float], served: Sequence[float], m: int,
                          decay: float = 0.5) -> float:
    """Direct evaluation over full series ``B[0..t]`` and ``r[0..t]``."""
    t = len(buffers) - 1
    total = buffers[t]
    for n in range(2, m + 1):
        k = t - n + 1
        if k < 0:
            break
        total += (buffers[k] - buffers[k + 1] - served[k]) * decay ** (n - 1)
    return max(total, 0.0)


@register_policy("fls_2l", "Two-level FLS: control-theoretic RT quotas, then PF")
class TwoLevelFls(Policy):
    name = "fls_2l"
    qos_aware = True

    def __init__(self, decay: float = 0.5):
        if not 0 < decay <= 1:
            raise ValueError("decay must be in (0, 1]")
        self.decay = decay
        self._coeffs: dict[int, list[float]] = {}

    def _coeff(self, m: int) -> list[float]:
        c = self._coeffs.get(m)
        if c is None:
            c = self._coeffs[m] = fls_coefficients(m, self.decay)
        return c

    def lower_bounds(self, metrics, ctx) -> dict[int, float]:
        """Byte quota per RT UE; also folds the previous slot into the history."""
        st = ctx.state
        cell = ctx.cell
        out = {}
        for m in metrics:
            q = ctx.profile(m)
            if not q.is_rt:
                continue
            M = fls_window(q.delta_s, cell.slot_duration_s, cell.dl_fraction)
            hist = st.fls_diff_history.get(m.rnti)
            if hist is None or hist.maxlen != max(M - 1, 0):
                hist = st.fls_diff_history[m.rnti] = deque(hist or (), maxlen=max(M - 1, 0))
            prev = st.fls_pending.get(m.rnti)
            if prev is not None and hist.maxlen:
                hist.appendleft(prev[0] - m.buffer_length - prev[1])
            out[m.rnti] = fls_quota(m.buffer_length, hist, self._coeff(M))
        return out

    def allocate(self, metrics, ctx, budget):
        quotas = self.lower_bounds(metrics, ctx)
        pf = _pf(metrics, ctx)
        lower = []
        for m in metrics:
            l = quotas.get(m.rnti, 0.0)
            need = m.num_rbs_required
            if l > 0 and m.tbs_per_prb > 0:
                lower.append(min(math.ceil(l * (1.0 + BUFFER_OVERHEAD) / m.tbs_per_prb), need))
            else:
                lower.append(0)
        rnd = KnapsackRound([m.rnti for m in metrics], pf, lower,
                            [m.num_rbs_required for m in metrics], budget)
        res = solve_knapsack_round(rnd)
        return Allocation({m.rnti: t for m, t in zip(metrics, res.theta) if t > 0})

    def observe(self, metrics, served, ctx):
        pend = ctx.state.fls_pending
        for m in metrics:
            if ctx.profile(m).is_rt:
                pend[m.rnti] = (m.buffer_length, served.get(m.rnti, 0))


def fls_lower_bounds(metrics, ctx, policy: TwoLevelFls | None = None) -> dict[int, float]:
    return (policy or TwoLevelFls()).lower_bounds(metrics, ctx)
