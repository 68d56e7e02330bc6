"""Slot-level downlink simulator.

Per slot: PDUs that arrived during the previous slot are enqueued, the
channel row is selected, and on DL slots the policy allocates PRBs and the
granted transport blocks are sent. A block fails with probability ``bler``:
its bytes stay at the head of the queue, count towards throughput but not
goodput, and are retried at the next grant.
"""

from __future__ import annotations

import math
import random
import time
from typing import Callable, NamedTuple

import numpy as np

from ..metrics.delay import FRAME_SLOTS, WINDOW_FRAMES, GoodputWindow, StarvationTracker, STARVATION_S
from ..metrics.report import MetricsReport, UeReport
from ..model import Allocation, BUFFER_OVERHEAD, UeMetrics
from ..policies.base import PolicyState, SchedContext
from .channel import generate_channel
from .queue import PduQueue
from .scenario import ScenarioConfig
from .traffic import FullBufferSource, arrivals_per_slot

_new_metrics = tuple.__new__


class SlotRecord(NamedTuple):
    slot: int
    is_dl: bool
    alloc: Allocation | None
    served: dict


def _seed_int(ss: np.random.SeedSequence) -> int:
    return int(ss.generate_state(1, dtype=np.uint64)[0])


class World:
    """Mutable state of one run. Drive it with :func:`step_slot` or :meth:`run`."""

    def __init__(self, cfg: ScenarioConfig, policy=None,
                 on_slot: Callable | None = None):
        cfg.validate()
        self.cfg = cfg
        cell = cfg.cell
        self.cell = cell
        self.n_slots = int(round(cfg.duration_s / cell.slot_duration_s))
        n = len(cfg.ues)
        ss = np.random.SeedSequence(cfg.seed)
        s_traffic, s_channel, s_bler, s_policy = ss.spawn(4)
        slot_s = cell.slot_duration_s
        self.arrivals: list[list[int] | None] = []
        for u, s in zip(cfg.ues, s_traffic.spawn(n)):
            if isinstance(u.traffic, FullBufferSource):
                self.arrivals.append(None)
            else:
                times = u.traffic.arrival_times(cfg.duration_s, np.random.default_rng(s))
                self.arrivals.append(arrivals_per_slot(times, slot_s, self.n_slots).tolist())
        self.pdu_bytes = [u.traffic.pdu_bytes for u in cfg.ues]
        trace = generate_channel([u.mean_cqi for u in cfg.ues], cfg.channel, self.n_slots,
                                 np.random.default_rng(s_channel))
        self.chan_period = trace.period_slots
        self.cqi_rows = trace.cqi.tolist()
        self.rsrp_rows = trace.rsrp.tolist()
        self.rssi_rows = trace.rssi.tolist()
        self.rsrq_rows = trace.rsrq.tolist()
        self.snr_rows = trace.snr_x10.tolist()
        self.mcs_rows = trace.mcs.tolist()
        self.bler_rng = random.Random(_seed_int(s_bler))

        self.policy = policy if policy is not None else cfg.build_policy()
        self.state = PolicyState()
        for u in cfg.ues:
            self.state.add_ue(u.rnti)
        self.ctx = SchedContext(cell, self.state, cfg.profiles, 0,
                                random.Random(_seed_int(s_policy)), cfg.max_buff)
        self.on_slot = on_slot

        self.rntis = [u.rnti for u in cfg.ues]
        self.index = {r: i for i, r in enumerate(self.rntis)}
        self.queues = [PduQueue(cfg.max_buff) for _ in cfg.ues]
        self.tbs_table = cell.tbs_table()
        self.tx_bytes = [0] * n
        self.frame_good = [0] * n
        self.frame_tx = [0] * n
        self.good_win = [GoodputWindow(WINDOW_FRAMES, FRAME_SLOTS * slot_s) for _ in range(n)]
        self.tx_win = [GoodputWindow(WINDOW_FRAMES, FRAME_SLOTS * slot_s) for _ in range(n)]
        self.good_series: list[list[float]] = [[] for _ in range(n)]
        self.tx_series: list[list[float]] = [[] for _ in range(n)]
        self.delays: list[list[int]] = [[] for _ in range(n)]
        self.starve = [StarvationTracker() for _ in range(n)]
        self.timing: list[int] | None = [] if cfg.record_timing else None
        self.violations: list[str] = []
        self.counters = {"dl_slots": 0, "granted_prbs": 0, "failed_blocks": 0, "blocks": 0}
        self.slot = 0

    # -------------------------------------------------------------- one slot

    def snapshot(self) -> list[UeMetrics]:
        t = self.slot
        k = t // self.chan_period
        cqi = self.cqi_rows[k]
        rsrp = self.rsrp_rows[k]
        rssi = self.rssi_rows[k]
        rsrq = self.rsrq_rows[k]
        snr = self.snr_rows[k]
        mcs = self.mcs_rows[k]
        slot_us = self.cell.slot_duration_us
        r_ave = self.state.r_ave
        tbs_table = self.tbs_table
        over = 1.0 + BUFFER_OVERHEAD
        out = []
        for i, u in enumerate(self.cfg.ues):
            q = self.queues[i]
            b = q.bytes
            tbs = tbs_table[cqi[i]]
            if b:
                need = math.ceil(b * over / tbs) if tbs else 0
                hol = int((t - q.q[0][1]) * slot_us)
            else:
                need = hol = 0
            out.append(_new_metrics(UeMetrics, (
                u.rnti, tbs, r_ave[u.rnti], snr[i], snr[i], rsrp[i], b, len(q.q), u.bler, 27,
                mcs[i], False, 0, cqi[i], rssi[i], rsrq[i], hol, q.head_retx, need, u.five_qi)))
        return out

    def step(self) -> SlotRecord:
        t = self.slot
        if t >= self.n_slots:
            raise IndexError("run already finished")
        cell = self.cell
        queues = self.queues
        check = self.cfg.check_invariants

        # (1) arrivals of the previous slot become visible
        for i, arr in enumerate(self.arrivals):
            q = queues[i]
            if arr is None:
                deficit = (q.cap - q.bytes) // self.pdu_bytes[i]
                if deficit > 0:
                    q.push(self.pdu_bytes[i], deficit, max(t - 1, 0))
                    self.starve[i].on_backlog(t)
            elif t > 0:
                c = arr[t - 1]
                if c and q.push(self.pdu_bytes[i], c, t - 1):
                    self.starve[i].on_backlog(t)

        served: dict[int, int] = {}
        alloc = None
        is_dl = t % cell.tdd_period_slots < cell.tdd_dl_slots
        if is_dl:
            metrics = self.snapshot()
            ctx = self.ctx
            ctx.slot = t
            if self.timing is not None:
                t0 = time.perf_counter_ns()
                alloc = self.policy.allocate(metrics, ctx, cell.n_prbs)
                self.timing.append(time.perf_counter_ns() - t0)
            else:
                alloc = self.policy.allocate(metrics, ctx, cell.n_prbs)
            if check:
                self._check_alloc(alloc, metrics)
            self.counters["dl_slots"] += 1
            self.counters["granted_prbs"] += alloc.total
            rand = self.bler_rng.random
            index = self.index
            # rnti order, so BLER draws do not depend on how a policy built its dict
            for rnti, prbs in sorted(alloc.prbs.items()):
                if prbs <= 0:
                    continue
                i = index[rnti]
                q = queues[i]
                tb = prbs * metrics[i].tbs_per_prb
                if tb > q.bytes:
                    tb = q.bytes
                if tb <= 0:
                    continue
                self.counters["blocks"] += 1
                self.tx_bytes[i] += tb
                self.frame_tx[i] += tb
                bler = metrics[i].bler
                if bler > 0 and rand() < bler:
                    q.head_retx = True
                    self.counters["failed_blocks"] += 1
                    continue
                q.pop_bytes(tb, t, self.delays[i])
                self.frame_good[i] += tb
                served[rnti] = tb
                self.starve[i].on_delivery(t, q.bytes > 0)
            self.state.record_dl(metrics, alloc, t, cell.slot_duration_us)
            self.policy.observe(metrics, served, ctx)
            if self.on_slot is not None:
                self.on_slot(self, t, metrics, alloc, served)

        self.state.advance(served, cell.slot_duration_us)
        if check:
            for i, q in enumerate(queues):
                if q.arrived != q.delivered + q.bytes + q.dropped:
                    self.violations.append(f"slot {t} rnti {self.rntis[i]}: byte conservation broken")
        self.slot = t + 1
        if self.slot % FRAME_SLOTS == 0:
            self._close_frame()
        return SlotRecord(t, is_dl, alloc, served)

    def _check_alloc(self, alloc: Allocation, metrics) -> None:
        t = self.slot
        for v in alloc.violations(self.cell.n_prbs):
            self.violations.append(f"slot {t}: {v}")
        bufs = {m.rnti: m.buffer_length for m in metrics}
        for r, n in alloc.prbs.items():
            if r not in bufs:
                self.violations.append(f"slot {t}: allocation to unknown rnti {r}")
            elif n > 0 and bufs[r] == 0:
                self.violations.append(f"slot {t}: rnti {r} granted {n} PRBs with an empty buffer")

    def _close_frame(self) -> None:
        n = len(self.rntis)
        for i in range(n):
            self.good_win[i].push(self.frame_good[i])
            self.tx_win[i].push(self.frame_tx[i])
            self.frame_good[i] = 0
            self.frame_tx[i] = 0
        if self.slot % (FRAME_SLOTS * WINDOW_FRAMES) == 0:
            for i in range(n):
                self.good_series[i].append(self.good_win[i].rate_mbps())
                self.tx_series[i].append(self.tx_win[i].rate_mbps())

    def swap_policy(self, policy) -> None:
        """Replace the scheduler at the next slot boundary.

        Steps are atomic, so a swap between ``step`` calls never splits a slot.
        Per-UE state (r_ave, counters) carries over to the new policy.
        """
        self.policy = policy

    # -------------------------------------------------------------- whole run

    def run(self) -> MetricsReport:
        step = self.step
        for _ in range(self.slot, self.n_slots):
            step()
        return self.report()

    def report(self) -> MetricsReport:
        cfg = self.cfg
        slot_ms = self.cell.slot_duration_us / 1000.0
        slot_s = self.cell.slot_duration_s
        duration = self.slot * slot_s
        ues = []
        for i, u in enumerate(cfg.ues):
            q = self.queues[i]
            if cfg.check_invariants:
                self.violations.extend(f"rnti {u.rnti}: {p}" for p in q.check())
            gap_s = self.starve[i].finish(self.slot) * slot_s
            ues.append(UeReport(
                rnti=u.rnti, five_qi=u.five_qi, arrived_bytes=q.arrived,
                delivered_bytes=q.delivered, tx_bytes=self.tx_bytes[i], dropped_bytes=q.dropped,
                queued_bytes=q.bytes, delivered_pdus=q.delivered_pdus, dropped_pdus=q.dropped_pdus,
                goodput_series=list(self.good_series[i]), throughput_series=list(self.tx_series[i]),
                delays_ms=np.asarray(self.delays[i], dtype=float) * slot_ms,
                starved=gap_s > STARVATION_S, max_gap_s=gap_s, duration_s=duration))
        timing = np.asarray(self.timing, dtype=np.int64) if self.timing is not None else None
        return MetricsReport(cfg.name, cfg.policy_label, cfg.seed, duration, self.slot, ues,
                             timing, list(self.violations), dict(self.counters))


def step_slot(world: World) -> SlotRecord:
    return world.step()


def run_scenario(cfg: ScenarioConfig, policy=None, on_slot: Callable | None = None) -> MetricsReport:
    return World(cfg, policy, on_slot).run()
