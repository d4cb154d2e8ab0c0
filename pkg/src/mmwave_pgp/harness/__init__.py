"""Scenario presets, Monte-Carlo runner, aggregation and CLI."""

from .config import PRESETS, ScenarioConfig, load_config, parse_config, preset
from .report import Summary, aggregate, emit, emit_opgpa, read_records
from .runner import RunRecord, RunResult, run_scenario, run_trial

__all__ = [
    "PRESETS",
    "ScenarioConfig",
    "load_config",
    "parse_config",
    "preset",
    "Summary",
    "aggregate",
    "emit",
    "emit_opgpa",
    "read_records",
    "RunRecord",
    "RunResult",
    "run_scenario",
    "run_trial",
]
