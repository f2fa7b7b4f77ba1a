"""Experiment configs, the Monte Carlo engine, reports and the CLI."""

from .config import AttackSpec, ConfigError, ExperimentConfig, SourceSpec, load_config
from .engine import run_experiment, run_learning_experiment, run_testing_experiment, sweep
from .report import CSV_COLUMNS, RiskReport, RiskRow, concat_reports, emit_report

__all__ = [
    "AttackSpec",
    "ConfigError",
    "ExperimentConfig",
    "SourceSpec",
    "load_config",
    "run_experiment",
    "run_learning_experiment",
    "run_testing_experiment",
    "sweep",
    "CSV_COLUMNS",
    "RiskReport",
    "RiskRow",
    "concat_reports",
    "emit_report",
]
