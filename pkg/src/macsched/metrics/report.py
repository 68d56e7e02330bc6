"""Per-run report: time series, delay samples, fairness and starvation."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .delay import EMPTY_DELAY, DelayStats, delay_cdf, delay_stats
from .indices import gini_index, jain_index

SCHEMA_VERSION = 1


@dataclass
class UeReport:
    rnti: int
    five_qi: int
    arrived_bytes: int = 0
    delivered_bytes: int = 0
    tx_bytes: int = 0
    dropped_bytes: int = 0
    queued_bytes: int = 0
    delivered_pdus: int = 0
    dropped_pdus: int = 0
    goodput_series: list[float] = field(default_factory=list)
    throughput_series: list[float] = field(default_factory=list)
    delays_ms: np.ndarray = field(default_factory=lambda: np.zeros(0))
    starved: bool = False
    max_gap_s: float = 0.0
    duration_s: float = 0.0

    @property
    def avg_goodput_mbps(self) -> float:
        return self.delivered_bytes * 8e-6 / self.duration_s if self.duration_s > 0 else 0.0

    @property
    def avg_throughput_mbps(self) -> float:
        return self.tx_bytes * 8e-6 / self.duration_s if self.duration_s > 0 else 0.0

    @property
    def delay(self) -> DelayStats:
        return delay_stats(self.delays_ms) if self.delays_ms.size else EMPTY_DELAY

    def summary(self) -> dict:
        return {
            "rnti": self.rnti, "five_qi": self.five_qi,
            "arrived_bytes": self.arrived_bytes, "delivered_bytes": self.delivered_bytes,
            "tx_bytes": self.tx_bytes, "dropped_bytes": self.dropped_bytes,
            "queued_bytes": self.queued_bytes, "delivered_pdus": self.delivered_pdus,
            "dropped_pdus": self.dropped_pdus,
            "avg_goodput_mbps": self.avg_goodput_mbps,
            "avg_throughput_mbps": self.avg_throughput_mbps,
            "starved": self.starved, "max_gap_s": self.max_gap_s,
            "delay_ms": self.delay.as_dict(),
        }


@dataclass
class MetricsReport:
    scenario: str
    policy: str
    seed: int
    duration_s: float
    n_slots: int
    ues: list[UeReport] = field(default_factory=list)
    timing_ns: np.ndarray | None = None
    violations: list[str] = field(default_factory=list)
    counters: dict[str, int] = field(default_factory=dict)

    def ue(self, rnti: int) -> UeReport:
        for u in self.ues:
            if u.rnti == rnti:
                return u
        raise KeyError(rnti)

    def goodputs(self) -> np.ndarray:
        return np.array([u.avg_goodput_mbps for u in self.ues])

    @property
    def jain(self) -> float | None:
        g = self.goodputs()
        return jain_index(g) if g.size and g.sum() > 0 else None

    @property
    def gini(self) -> float | None:
        g = self.goodputs()
        return gini_index(g) if g.size and g.sum() > 0 else None

    @property
    def any_starved(self) -> bool:
        return any(u.starved for u in self.ues)

    def pooled_delays(self) -> np.ndarray:
        parts = [u.delays_ms for u in self.ues if u.delays_ms.size]
        return np.concatenate(parts) if parts else np.zeros(0)

    @property
    def stem(self) -> str:
        return f"{self.scenario}__{self.policy}__seed{self.seed}"

    def to_dict(self) -> dict:
        d = {
            "schema_version": SCHEMA_VERSION,
            "scenario": self.scenario, "policy": self.policy, "seed": self.seed,
            "duration_s": self.duration_s, "n_slots": self.n_slots,
            "jain": self.jain, "gini": self.gini, "any_starved": self.any_starved,
            "pooled_delay_ms": delay_stats(self.pooled_delays()).as_dict(),
            "ues": [u.summary() for u in self.ues],
            "violations": list(self.violations),
            "counters": dict(self.counters),
        }
        if self.timing_ns is not None and self.timing_ns.size:
            t = np.sort(self.timing_ns)
            d["timing_us"] = {"p50": float(np.percentile(t, 50)) / 1e3,
                              "p99": float(np.percentile(t, 99)) / 1e3,
                              "max": float(t[-1]) / 1e3}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    def series_csv(self) -> str:
        """One row per UE per second."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scenario", "policy", "seed", "rnti", "second", "goodput_mbps", "throughput_mbps"])
        for u in self.ues:
            for s, (g, t) in enumerate(zip(u.goodput_series, u.throughput_series)):
                w.writerow([self.scenario, self.policy, self.seed, u.rnti, s, repr(g), repr(t)])
        return buf.getvalue()

    def delays_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rnti", "delay_ms"])
        for u in self.ues:
            for d in u.delays_ms.tolist():
                w.writerow([u.rnti, repr(d)])
        return buf.getvalue()

    def cdf_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rnti", "delay_ms", "cum_fraction"])
        for u in self.ues:
            for d, c in delay_cdf(u.delays_ms):
                w.writerow([u.rnti, repr(d), repr(c)])
        return buf.getvalue()
