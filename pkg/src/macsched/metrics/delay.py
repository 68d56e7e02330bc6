"""Delay percentiles, goodput windows and starvation detection."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

STARVATION_S = 30.0
FRAME_SLOTS = 20
WINDOW_FRAMES = 100


@dataclass(frozen=True)
class DelayStats:
    count: int
    p50: float | None
    p95: float | None
    p99: float | None
    mean: float | None
    max: float | None

    @property
    def empty(self) -> bool:
        return self.count == 0

    def as_dict(self) -> dict:
        return {"count": self.count, "p50": self.p50, "p95": self.p95, "p99": self.p99,
                "mean": self.mean, "max": self.max}


EMPTY_DELAY = DelayStats(0, None, None, None, None, None)


def nearest_rank(sorted_samples: np.ndarray, pct: float) -> float:
    n = sorted_samples.size
    rank = max(1, math.ceil(pct / 100.0 * n - 1e-9))
    return float(sorted_samples[rank - 1])


def delay_stats(samples: Sequence[float]) -> DelayStats:
    """Nearest-rank p50/p95/p99. No samples gives :data:`EMPTY_DELAY`."""
    a = np.sort(np.asarray(samples, dtype=float))
    if a.size == 0:
        return EMPTY_DELAY
    return DelayStats(int(a.size), nearest_rank(a, 50), nearest_rank(a, 95), nearest_rank(a, 99),
                      float(a.mean()), float(a[-1]))


def delay_cdf(samples: Sequence[float]) -> list[tuple[float, float]]:
    """(delay, cumulative fraction) at each distinct delay value."""
    a = np.sort(np.asarray(samples, dtype=float))
    if a.size == 0:
        return []
    vals, counts = np.unique(a, return_counts=True)
    cum = np.cumsum(counts) / a.size
    return [(float(v), float(c)) for v, c in zip(vals, cum)]


class GoodputWindow:
    """Circular buffer of per-frame delivered bytes over a fixed window."""

    def __init__(self, frames: int = WINDOW_FRAMES, frame_s: float = 0.01):
        if frames < 1:
            raise ValueError("window needs at least one frame")
        self.frames = frames
        self.frame_s = frame_s
        self.buf: deque[int] = deque(maxlen=frames)
        self.total = 0

    def push(self, frame_bytes: int) -> float:
        if len(self.buf) == self.frames:
            self.total -= self.buf[0]
        self.buf.append(frame_bytes)
        self.total += frame_bytes
        return self.rate_mbps()

    def rate_mbps(self) -> float:
        if not self.buf:
            return 0.0
        return self.total * 8 / (len(self.buf) * self.frame_s) / 1e6


def goodput_window_update(window: GoodputWindow, sent_bytes: int, retx_bytes: int) -> float:
    """Push one frame's sent-minus-retransmitted bytes and return the windowed Mbps."""
    return window.push(max(0, sent_bytes - retx_bytes))


def starvation_check(deliveries: Sequence[float], horizon: float, backlog=None,
                     threshold: float = STARVATION_S) -> tuple[bool, float]:
    """Longest delivery gap in seconds and whether it exceeds ``threshold``.

    Gaps run between consecutive deliveries, from 0 to the first and from the
    last to ``horizon``. With ``backlog`` (a list of ``(start, end)`` intervals
    when traffic was waiting), only the backlogged part of a gap counts, so a
    silent OFF period is never starvation. ``backlog=None`` counts every gap
    in full.
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    edges = [0.0, *sorted(deliveries), horizon]
    worst = 0.0
    for a, b in zip(edges, edges[1:]):
        if b <= a:
            continue
        if backlog is None:
            gap = b - a
        else:
            gap = sum(max(0.0, min(b, e) - max(a, s)) for s, e in backlog)
        worst = max(worst, gap)
    return worst > threshold, worst


class StarvationTracker:
    """Event-driven longest backlogged gap without delivery, in slots.

    A queue can only drain through deliveries, so once it turns non-empty it
    stays backlogged until the next delivery; the gap therefore only needs
    updating on enqueue into an empty queue and on delivery.
    """

    __slots__ = ("since", "worst")

    def __init__(self):
        self.since: int | None = None
        self.worst = 0

    def on_backlog(self, slot: int) -> None:
        if self.since is None:
            self.since = slot

    def on_delivery(self, slot: int, still_backlogged: bool) -> None:
        if self.since is not None and slot - self.since > self.worst:
            self.worst = slot - self.since
        self.since = slot if still_backlogged else None

    def finish(self, end_slot: int) -> int:
        if self.since is not None and end_slot - self.since > self.worst:
            self.worst = end_slot - self.since
        return self.worst
