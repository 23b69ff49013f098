"""Command-line driver: configs, CSV traces, SVG plots, acceptance suite."""
from .config import ExperimentConfig, RunSpec, config_from_mapping, load_config
from .main import cli_run, cli_schedule, cli_verify, main
from .plot import emit_plot
from .runner import RunResult, execute, run_experiment
from .tables import Table, cert_table, trace_table

__all__ = [
    "ExperimentConfig", "RunSpec", "config_from_mapping", "load_config",
    "cli_run", "cli_schedule", "cli_verify", "main", "emit_plot",
    "RunResult", "execute", "run_experiment", "Table", "cert_table", "trace_table",
]
