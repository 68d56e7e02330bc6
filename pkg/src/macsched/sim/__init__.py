"""Deterministic slot-level downlink cell simulator."""

from .traffic import CbrSource, FullBufferSource, OnOffSource, arrivals_per_slot
from .channel import ChannelModel, generate_channel
from .queue import PduQueue
from .scenario import (
    PRESET_NAMES, ScenarioConfig, UeConfig, load_composition_ref, load_scenario, scenario_from_dict,
)
from .simulator import SlotRecord, World, run_scenario, step_slot
