from .experiment import ExperimentPlan, ExperimentResult, PolicyRef, run_experiment, summarize
from .output import emit_outputs, fairness_table, similarity_tables
from .timing import CUTOFF_US, SLOT_BUDGET_US, first_exceeding, profile_timing, random_snapshots

__all__ = [
    "ExperimentPlan", "ExperimentResult", "PolicyRef", "run_experiment", "summarize",
    "emit_outputs", "fairness_table", "similarity_tables",
    "CUTOFF_US", "SLOT_BUDGET_US", "first_exceeding", "profile_timing", "random_snapshots",
]
