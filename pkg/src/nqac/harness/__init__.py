"""Experiment configuration, orchestration, export and CLI."""
from .config import ExperimentConfig, derive_seed, dump_config, load_config
from .experiments import RunResult, run_optimization_experiment, run_sampling_experiment
from .export import FIGURES, RunAggregate, export_all, export_csv

__all__ = [
    "ExperimentConfig", "derive_seed", "dump_config", "load_config", "RunResult",
    "run_optimization_experiment", "run_sampling_experiment", "FIGURES", "RunAggregate",
    "export_all", "export_csv",
]
