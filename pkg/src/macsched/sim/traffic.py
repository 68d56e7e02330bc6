"""Traffic sources. Arrival times are drawn up front for the whole run."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CbrSource:
    rate_mbps: float
    pdu_bytes: int = 1500

    def __post_init__(self):
        if self.rate_mbps <= 0 or self.pdu_bytes <= 0:
            raise ValueError("CBR rate_mbps and pdu_bytes must be > 0")

    @property
    def interval_s(self) -> float:
        return self.pdu_bytes * 8 / (self.rate_mbps * 1e6)

    def arrival_times(self, duration_s: float, rng: np.random.Generator) -> np.ndarray:
        # seeded phase offset keeps UEs out of lockstep
        offset = rng.uniform(0.0, self.interval_s)
        n = int(np.floor((duration_s - offset) / self.interval_s)) + 1 if duration_s > offset else 0
        return offset + self.interval_s * np.arange(n)


@dataclass(frozen=True)
class OnOffSource:
    mean_on_s: float = 2.0
    mean_off_s: float = 2.0
    pkts_per_s: float = 2000.0
    pdu_bytes: int = 1000

    def __post_init__(self):
        if min(self.mean_on_s, self.mean_off_s, self.pkts_per_s, self.pdu_bytes) <= 0:
            raise ValueError("ON/OFF durations, pkts_per_s and pdu_bytes must be > 0")

    def on_periods(self, duration_s: float, rng: np.random.Generator) -> list[tuple[float, float]]:
        p_on = self.mean_on_s / (self.mean_on_s + self.mean_off_s)
        on = bool(rng.random() < p_on)
        t = 0.0
        out = []
        while t < duration_s:
            d = rng.exponential(self.mean_on_s if on else self.mean_off_s)
            if on:
                out.append((t, min(t + d, duration_s)))
            t += d
            on = not on
        return out

    def arrival_times(self, duration_s: float, rng: np.random.Generator) -> np.ndarray:
        parts = []
        for a, b in self.on_periods(duration_s, rng):
            # Poisson process inside an ON period: Poisson count, uniform positions
            n = rng.poisson(self.pkts_per_s * (b - a))
            parts.append(np.sort(rng.uniform(a, b, n)))
        return np.concatenate(parts) if parts else np.zeros(0)


@dataclass(frozen=True)
class FullBufferSource:
    """Keeps the queue topped up to the buffer cap."""

    pdu_bytes: int = 1500

    def __post_init__(self):
        if self.pdu_bytes <= 0:
            raise ValueError("pdu_bytes must be > 0")


def arrivals_per_slot(times: np.ndarray, slot_s: float, n_slots: int) -> np.ndarray:
    """PDU count per slot; an arrival at time t belongs to slot floor(t / slot)."""
    if n_slots <= 0:
        return np.zeros(0, dtype=np.int64)
    idx = np.floor(np.asarray(times) / slot_s).astype(np.int64)
    idx = idx[(idx >= 0) & (idx < n_slots)]
    return np.bincount(idx, minlength=n_slots)


def source_from_dict(d: dict):
    d = dict(d)
    kind = d.pop("type", None)
    if kind == "cbr":
        return CbrSource(**d)
    if kind in ("onoff", "on_off", "bursty"):
        return OnOffSource(**d)
    if kind in ("full", "full_buffer"):
        return FullBufferSource(**d)
    raise ValueError(f"unknown traffic type {kind!r} (cbr, onoff, full)")


def source_to_dict(src) -> dict:
    if isinstance(src, CbrSource):
        return {"type": "cbr", "rate_mbps": src.rate_mbps, "pdu_bytes": src.pdu_bytes}
    if isinstance(src, OnOffSource):
        return {"type": "onoff", "mean_on_s": src.mean_on_s, "mean_off_s": src.mean_off_s,
                "pkts_per_s": src.pkts_per_s, "pdu_bytes": src.pdu_bytes}
    return {"type": "full", "pdu_bytes": src.pdu_bytes}
