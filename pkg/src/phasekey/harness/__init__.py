"""Experiment runner: configuration, seeded experiments, CSV reports, replay."""

from .config import ExperimentConfig, load_config, parse_config
from .experiments import Report, run_experiment
from .replay import IQTrace, read_trace, replay_ingest, synthetic_trace, write_trace

__all__ = [
    "ExperimentConfig", "load_config", "parse_config", "Report", "run_experiment",
    "IQTrace", "read_trace", "write_trace", "replay_ingest", "synthetic_trace",
]
