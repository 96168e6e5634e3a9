import pytest

from quantpareto.runner.config import ExperimentConfig


def tiny_config_dict(tmp_path, **train):
    """Mini ResNet at c=0.5 on 8x8 synthetic clusters: seconds per run"""
    return {
        "model": {"arch": "mini_resnet", "multiplier": 0.5},
        "quant": {"preset": "8bit"},
        "train": {"steps": 20, "batch_size": 8, "seed": 0, "log_every": 5, **train},
        "calibration": {"decay": 0.9, "freeze_fraction": 0.2},
        "dataset": {
            "kind": "synthetic_clusters",
            "num_classes": 3,
            "resolution": 8,
            "train_size": 64,
            "eval_size": 32,
            "separation": 3.0,
        },
        "output": {"directory": str(tmp_path / "runs"), "checkpoint": False},
    }


@pytest.fixture
def tiny_config(tmp_path) -> ExperimentConfig:
    return ExperimentConfig.model_validate(tiny_config_dict(tmp_path))
