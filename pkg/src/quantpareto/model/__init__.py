"""
Scalable ResNet family with per-layer quantization.
"""

from .layers import ForwardContext, QuantEvent, QuantEventKind, QuantMode
from .resnet import (
    ResNet,
    build_resnet,
    count_params,
    export_manifest,
    layer_shapes,
    params_by_multiplier,
)
from .spec import (
    LayerQuantConfig,
    ResNetSpec,
    mini_resnet_spec,
    resnet50_spec,
    scaled_widths,
    spec_for,
)

__all__ = [
    "ForwardContext",
    "LayerQuantConfig",
    "QuantEvent",
    "QuantEventKind",
    "QuantMode",
    "ResNet",
    "ResNetSpec",
    "build_resnet",
    "count_params",
    "export_manifest",
    "layer_shapes",
    "mini_resnet_spec",
    "params_by_multiplier",
    "resnet50_spec",
    "scaled_widths",
    "spec_for",
]
