"""Scenario configuration, experiment plans and result files."""
from .config import DataConfig, ScenarioConfig, ScenarioError, default_scenario, load_scenario, parse_scenario
from .runner import bound_files, emit_bound_sweep, run_plan, time_to_accuracy

__all__ = [
    "DataConfig",
    "ScenarioConfig",
    "ScenarioError",
    "bound_files",
    "default_scenario",
    "emit_bound_sweep",
    "load_scenario",
    "parse_scenario",
    "run_plan",
    "time_to_accuracy",
]
