"""
Compute and memory cost models.
"""

from .cost_model import (
    baseline_shapes,
    coefficient,
    conv_cost,
    dense_cost,
    memory_bits,
    model_cost,
    normalize,
    normalized_cost,
    relative_to,
)
from .manifest import load_manifest, save_manifest
from .models import CostReport, LayerCost

__all__ = [
    "CostReport",
    "LayerCost",
    "baseline_shapes",
    "coefficient",
    "conv_cost",
    "dense_cost",
    "load_manifest",
    "memory_bits",
    "model_cost",
    "normalize",
    "normalized_cost",
    "relative_to",
    "save_manifest",
]
