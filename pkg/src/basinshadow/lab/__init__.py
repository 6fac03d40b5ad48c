"""Scenarios, the verdict engine, report emission and the ``lab`` command."""

from .compare import CompareError, DriftSummary, compare_runs, load_report
from .presets import PRESETS
from .report import emit_report
from .runner import BOUNDED, INCONCLUSIVE, UNBOUNDED, Report, StageError, run_scenario
from .scenario import Scenario, ScenarioError, load_scenario

__all__ = [
    "BOUNDED",
    "CompareError",
    "DriftSummary",
    "INCONCLUSIVE",
    "PRESETS",
    "Report",
    "Scenario",
    "ScenarioError",
    "StageError",
    "UNBOUNDED",
    "compare_runs",
    "emit_report",
    "load_report",
    "load_scenario",
    "run_scenario",
]
