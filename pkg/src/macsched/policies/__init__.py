"""Scheduling policies. Importing this package populates :data:`POLICIES`."""

from .base import (
    EWMA_ALPHA, NEG_INF, POLICIES, RATE_FLOOR_MBPS, Policy, PolicyState, SchedContext,
    allocate_by_values, make_policy, register_policy,
)
from . import unaware, aware, multistage  # noqa: F401  (registration side effects)
from .aware import exp_pf_update_w, ltti_value
from .multistage import fls_lower_bounds, rad_ds_gate, shapley_two_groups

UNAWARE = ("rr", "bcqi", "ft", "pf", "lean", "log_rule", "pfb", "gpf", "eufs", "gpfb")
AWARE = ("qos_log_rule", "rad_ds", "qos_fk", "vt_sh", "exp_pf", "a_exp_pf", "fls_2l", "ltti", "wd_ps")


def compute_values_qos_unaware(kind, metrics, ctx: SchedContext, **params) -> list[float]:
    """Value vector of a single-stage QoS-unaware policy given by name or instance."""
    pol = make_policy(kind, **params) if isinstance(kind, str) else kind
    if pol.qos_aware:
        raise ValueError(f"{pol.name} is QoS-aware")
    return pol.values(metrics, ctx)


def compute_values_qos_aware(kind, metrics, ctx: SchedContext, **params) -> list[float]:
    pol = make_policy(kind, **params) if isinstance(kind, str) else kind
    if not pol.qos_aware:
        raise ValueError(f"{pol.name} is not QoS-aware")
    return pol.values(metrics, ctx)


def policy_names() -> list[str]:
    return sorted(POLICIES)
