"""Gradient-free class-incremental learning for time series."""

import json as _json

from ._core import (
    AnalyticClassifier,
    RandomEncoder,
    TsaclError,
    __version__,
    average_accuracy,
    block_diagonal_labels,
    build_task_stream,
    expand,
    forgetting,
    generate_synthetic,
    init_rhl,
    joint_fit_oracle,
    softmax,
    task_accuracy,
    variance_ratio,
    woodbury_check,
)
from ._core import read_checkpoint_header as _read_checkpoint_header
from ._core import run_experiment_json as _run_experiment_json


def run_experiment(config):
    """Runs a full experiment. `config` is a dict or JSON string; returns the report dict."""
    text = config if isinstance(config, str) else _json.dumps(config)
    return _json.loads(_run_experiment_json(text))


def read_checkpoint_header(path):
    return _json.loads(_read_checkpoint_header(str(path)))


__all__ = [
    "AnalyticClassifier",
    "RandomEncoder",
    "TsaclError",
    "average_accuracy",
    "block_diagonal_labels",
    "build_task_stream",
    "expand",
    "forgetting",
    "generate_synthetic",
    "init_rhl",
    "joint_fit_oracle",
    "read_checkpoint_header",
    "run_experiment",
    "softmax",
    "task_accuracy",
    "variance_ratio",
    "woodbury_check",
]
