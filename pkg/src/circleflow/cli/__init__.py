"""Scenario catalog, configuration, orchestration and report emission."""
from .config import AuditSpec, Scenario, SeedSpec, load_scenario
from .expr import parse_nonlinearity
from .runner import ExperimentReport, emit_plot_data, run_scenario

__all__ = ["AuditSpec", "Scenario", "SeedSpec", "load_scenario", "parse_nonlinearity",
           "ExperimentReport", "emit_plot_data", "run_scenario"]
