"""Intent-based scheduling: groups, per-round limits and values, knapsack rounds."""

from .knapsack import KnapsackRound, RoundResult, round_objective, solve_knapsack_round
from .grouping import (
    GROUPINGS, Group, group_by_burstiness, group_by_cqi, group_by_rank, make_grouping, split_budget,
)
from .limits import LIMITS, limit_default, limit_target_throughput, make_limit
from .values import SELECTORS, VALUES, ValueFn, make_value, value_names
from .compose import (
    Composition, CompositionPolicy, CompositionSpec, FnRef, GroupSpec, LeftoverSpec, RoundSpec,
    compose_schedule, composition_from_dict, load_composition,
)
