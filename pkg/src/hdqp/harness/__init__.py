"""Experiment runner, figure presets, acceptance suite and CLI."""

from .config import ExperimentConfig, load_config, parse_config
from .runner import ReplicateRecord, run_experiment, run_replicates
from .figures import reproduce_figure
