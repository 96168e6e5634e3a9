"""
Uniform quantization primitives.
"""

from .models import QuantizedTensor, QuantRange, ScaleVector
from .quantizer import (
    EPSILON_BOUND,
    compute_scales,
    dequantize,
    fake_quantize,
    quant_range,
    quantize_to_int,
    ste_backward,
)
from .rounding import RoundingMode

__all__ = [
    "EPSILON_BOUND",
    "QuantRange",
    "QuantizedTensor",
    "RoundingMode",
    "ScaleVector",
    "compute_scales",
    "dequantize",
    "fake_quantize",
    "quant_range",
    "quantize_to_int",
    "ste_backward",
]
