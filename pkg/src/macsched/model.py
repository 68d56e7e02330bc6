"""Domain types and cell-level primitives.

Units used throughout the package:

* buffers and TBS estimates are in bytes (``tbs_per_prb`` is bytes per PRB per DL slot),
* rates are in Mbps,
* delays carried in :class:`UeMetrics` are microseconds, delays fed to value
  functions are seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple


class ConfigError(ValueError):
    """Raised when a configuration is invalid. Collects every violation found."""

    def __init__(self, problems: str | Iterable[str]):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


# 4-bit CQI -> spectral efficiency (bits per RE). Index 0 means out of range.
CQI_TABLES: dict[str, tuple[float, ...]] = {
    # 64QAM table
    "qam64": (
        0.0, 0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766,
        1.9141, 2.4063, 2.7305, 3.3223, 3.9023, 4.5234, 5.1152, 5.5547,
    ),
    # 256QAM table
    "qam256": (
        0.0, 0.1523, 0.3770, 0.8770, 1.4766, 1.9141, 2.4063, 2.7305,
        3.3223, 3.9023, 4.5234, 5.1152, 5.5547, 6.2266, 6.9141, 7.4063,
    ),
}

DEFAULT_CQI_TABLE = "qam256"

# Buffer need is inflated by the control-plane overhead before converting to PRBs.
BUFFER_OVERHEAD = 0.08


class UeMetrics(NamedTuple):
    """Per-UE metric snapshot handed to a scheduler at one DL slot."""

    rnti: int
    tbs_per_prb: float
    throughput: float = 0.0
    pusch_snr_x10: int = 0
    pucch_snr_x10: int = 0
    dl_rsrp: int = 0
    buffer_length: int = 0
    total_pdus: int = 0
    bler: float = 0.0
    max_mcs: int = 27
    current_mcs: int = 0
    ta_apply: bool = False
    ta_update: int = 0
    cqi: int = 0
    rssi: int = 0
    rsrq: float = 0.0
    hol_delay_us: int = 0
    hol_is_retransmission: bool = False
    num_rbs_required: int = 0
    five_qi: int = 9


def rbs_required(buffer_length: int, tbs: float, overhead: float = BUFFER_OVERHEAD) -> int:
    if buffer_length <= 0 or tbs <= 0:
        return 0
    return math.ceil(buffer_length * (1.0 + overhead) / tbs)


def make_metrics(rnti: int, tbs_per_prb: float, buffer_length: int = 0, **kw) -> UeMetrics:
    """Build a consistent snapshot: ``num_rbs_required`` is derived from the buffer,
    and an empty buffer forces a zero HoL delay."""
    if buffer_length == 0:
        kw["hol_delay_us"] = 0
    need = rbs_required(buffer_length, tbs_per_prb)
    return UeMetrics(rnti=rnti, tbs_per_prb=tbs_per_prb, buffer_length=buffer_length,
                     num_rbs_required=need, **kw)


def check_metrics(m: UeMetrics) -> list[str]:
    problems = []
    if not 0 <= m.cqi <= 15:
        problems.append(f"rnti {m.rnti}: cqi {m.cqi} outside [0, 15]")
    if not 0.0 <= m.bler <= 1.0:
        problems.append(f"rnti {m.rnti}: bler {m.bler} outside [0, 1]")
    if m.buffer_length < 0:
        problems.append(f"rnti {m.rnti}: negative buffer")
    if m.tbs_per_prb < 0:
        problems.append(f"rnti {m.rnti}: negative tbs_per_prb")
    if m.buffer_length == 0 and (m.hol_delay_us != 0 or m.num_rbs_required != 0):
        problems.append(f"rnti {m.rnti}: empty buffer with nonzero HoL delay or PRB need")
    if m.tbs_per_prb > 0 and m.num_rbs_required != rbs_required(m.buffer_length, m.tbs_per_prb):
        problems.append(f"rnti {m.rnti}: num_rbs_required inconsistent with buffer")
    return problems


@dataclass(frozen=True)
class CellConfig:
    n_prbs: int = 51
    slot_duration_us: float = 500.0
    tdd_period_slots: int = 10
    tdd_dl_slots: int = 7
    tdd_special_slots: int = 1
    tdd_ul_slots: int = 2
    usable_res_per_prb: int = 120
    mimo_layers: int = 2
    control_overhead_frac: float = BUFFER_OVERHEAD
    cqi_table: str = DEFAULT_CQI_TABLE

    def __post_init__(self):
        problems = []
        if self.n_prbs <= 0:
            problems.append("cell.n_prbs must be > 0")
        if self.slot_duration_us <= 0:
            problems.append("cell.slot_duration_us must be > 0")
        if self.tdd_period_slots <= 0:
            problems.append("cell.tdd_period_slots must be > 0")
        if min(self.tdd_dl_slots, self.tdd_special_slots, self.tdd_ul_slots) < 0:
            problems.append("cell TDD slot counts must be >= 0")
        if self.tdd_dl_slots + self.tdd_special_slots + self.tdd_ul_slots != self.tdd_period_slots:
            problems.append("cell: tdd_dl_slots + tdd_special_slots + tdd_ul_slots must equal tdd_period_slots")
        if self.mimo_layers < 1:
            problems.append("cell.mimo_layers must be >= 1")
        if self.usable_res_per_prb <= 0:
            problems.append("cell.usable_res_per_prb must be > 0")
        if not 0.0 <= self.control_overhead_frac < 1.0:
            problems.append("cell.control_overhead_frac must be in [0, 1)")
        if self.cqi_table not in CQI_TABLES:
            problems.append(f"cell.cqi_table must be one of {sorted(CQI_TABLES)}")
        if problems:
            raise ConfigError(problems)

    @property
    def dl_fraction(self) -> float:
        return self.tdd_dl_slots / self.tdd_period_slots

    @property
    def slot_duration_s(self) -> float:
        return self.slot_duration_us * 1e-6

    def tbs_table(self) -> list[int]:
        """``tbs_per_prb`` for every CQI, indexed by CQI."""
        return [tbs_per_prb(c, self) for c in range(16)]


@dataclass(frozen=True)
class QosProfile:
    five_qi: int
    delta_us: float
    pdb: float
    gbr_mbps: float = 0.0
    is_rt: bool = False
    priority: float = 0.0
    bursty: bool = False

    def __post_init__(self):
        problems = []
        if self.delta_us <= 0:
            problems.append(f"5QI {self.five_qi}: delta_us must be > 0")
        if not 0.0 < self.pdb < 1.0:
            problems.append(f"5QI {self.five_qi}: pdb must be in (0, 1)")
        if self.gbr_mbps < 0:
            problems.append(f"5QI {self.five_qi}: gbr_mbps must be >= 0")
        if problems:
            raise ConfigError(problems)

    @property
    def delta_s(self) -> float:
        return self.delta_us * 1e-6


@dataclass(frozen=True)
class Allocation:
    """PRB counts per RNTI for one slot."""

    prbs: Mapping[int, int] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.prbs.values())

    def get(self, rnti: int) -> int:
        return self.prbs.get(rnti, 0)

    def violations(self, n_prbs: int) -> list[str]:
        out = [f"rnti {r}: negative or non-integer allocation {v!r}"
               for r, v in self.prbs.items() if not isinstance(v, int) or v < 0]
        if self.total > n_prbs:
            out.append(f"allocated {self.total} PRBs > {n_prbs}")
        return out


def tbs_per_prb(cqi: int, cell: CellConfig) -> int:
    """Bytes one PRB carries in one DL slot at the given wideband CQI, over all layers."""
    if not isinstance(cqi, (int,)) or isinstance(cqi, bool) or not 0 <= cqi <= 15:
        raise ValueError(f"cqi must be an integer in [0, 15], got {cqi!r}")
    eff = CQI_TABLES[cell.cqi_table][cqi]
    return cell.mimo_layers * math.floor(eff * cell.usable_res_per_prb / 8)


def is_dl_slot(slot_index: int, cell: CellConfig) -> bool:
    # S and U slots carry no DL data.
    if slot_index < 0:
        raise ValueError("slot_index must be >= 0")
    return slot_index % cell.tdd_period_slots < cell.tdd_dl_slots


def default_profiles() -> dict[int, QosProfile]:
    """5QI presets: 9 is best effort, 80 the privileged real-time class,
    81-85 the per-UE targets of the mixed-deadline bursty experiment."""
    profiles = {
        9: QosProfile(9, delta_us=500_000, pdb=0.03),
        80: QosProfile(80, delta_us=50_000, pdb=0.01, gbr_mbps=10.0, is_rt=True, priority=1.0),
        79: QosProfile(79, delta_us=500_000, pdb=0.03, bursty=True),
    }
    for i, ms in enumerate((50, 60, 70, 80, 90)):
        qi = 81 + i
        profiles[qi] = QosProfile(qi, delta_us=ms * 1000, pdb=0.01, gbr_mbps=6.0,
                                  is_rt=True, priority=1.0, bursty=True)
    return profiles
