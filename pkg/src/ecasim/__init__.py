"""Slot-level simulator of WLAN contention with deterministic backoff.

Public surface: protocol variants, scenario construction, the simulation
engine, analytic throughput bounds and run metrics.
"""
from .bounds import BoundsResult, bound_curves, bounds_for, schedule_params
from .channel import SlotKind, SlotOutcome, resolve_slot, tx_duration
from .config import ConfigError, ExperimentMatrix, parse_config
from .engine import (Engine, ScenarioConfig, mixed_scenario, run,
                     run_replications, scenario)
from .metrics import (MetricsReport, NodeReport, RunSummary, aggregate_runs,
                      collision_fraction_window, jfi)
from .params import BackoffParams, PhyParams
from .protocol import (CSMA_CA, CSMA_ECA, ECA_HYS, ECA_HYS_FS,
                       ECA_HYS_MAXAG, ProtocolVariant, parse_variant)
from .traffic import ArrivalProcess, MacQueue

__all__ = [
    "ArrivalProcess", "BackoffParams", "BoundsResult", "CSMA_CA", "CSMA_ECA",
    "ConfigError", "ECA_HYS", "ECA_HYS_FS", "ECA_HYS_MAXAG", "Engine",
    "ExperimentMatrix", "MacQueue", "MetricsReport", "NodeReport",
    "PhyParams", "ProtocolVariant", "RunSummary", "ScenarioConfig",
    "SlotKind", "SlotOutcome", "aggregate_runs", "bound_curves", "bounds_for",
    "collision_fraction_window", "jfi", "mixed_scenario", "parse_config",
    "parse_variant", "resolve_slot", "run", "run_replications",
    "scenario", "schedule_params", "tx_duration",
]
