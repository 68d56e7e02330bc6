"""Slot-level 5G MAC downlink scheduling: policies, intent-based composition,
a deterministic cell simulator, metrics and an experiment harness."""

from .model import (
    Allocation, CellConfig, ConfigError, QosProfile, UeMetrics, default_profiles,
    is_dl_slot, make_metrics, tbs_per_prb,
)
from .policies import POLICIES, make_policy

__version__ = "0.1.0"
