"""Experiment configs, the training/evaluation loop, summaries and the CLI."""

from .config import ExperimentConfig, SamplerSpec, load_config, parse_config, seed_override
from .experiment import (
    RESULT_COLUMNS,
    TRAIN_LOG_COLUMNS,
    build_context_sets,
    evaluate,
    run_experiment,
    run_experiments,
)
from .plots import emit_plotdata
from .summary import SummaryRow, learning_curves, read_results, summarize, summarize_rows

__all__ = [
    "RESULT_COLUMNS",
    "TRAIN_LOG_COLUMNS",
    "ExperimentConfig",
    "SamplerSpec",
    "SummaryRow",
    "build_context_sets",
    "emit_plotdata",
    "evaluate",
    "learning_curves",
    "load_config",
    "parse_config",
    "read_results",
    "run_experiment",
    "run_experiments",
    "seed_override",
    "summarize",
    "summarize_rows",
]
