"""
Experiment orchestration: configuration, data, training, sweeps and results.
"""

from .config import ExperimentConfig, SweepGrid, load_config, load_grid
from .models import RESULT_COLUMNS, RunResult, RunStatus

__all__ = [
    "RESULT_COLUMNS",
    "ExperimentConfig",
    "RunResult",
    "RunStatus",
    "SweepGrid",
    "load_config",
    "load_grid",
]
