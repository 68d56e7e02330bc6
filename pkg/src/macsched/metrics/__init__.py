"""Measurement: fairness indices, delay statistics, goodput windows, reports."""

from .indices import gini_index, jain_index, rmse, similarity_rmse
from .delay import (
    EMPTY_DELAY, FRAME_SLOTS, STARVATION_S, WINDOW_FRAMES, DelayStats, GoodputWindow,
    StarvationTracker, delay_cdf, delay_stats, goodput_window_update, nearest_rank,
    starvation_check,
)
from .report import SCHEMA_VERSION, MetricsReport, UeReport
