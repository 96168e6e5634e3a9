"""
Activation clipping-bound calibration and dynamic weight bounds.
"""

from .calibrator import (
    ActivationCalibrator,
    activations_quantized,
    maybe_freeze,
    update_ema,
    weight_bounds,
)
from .models import BoundsState, CalibrationSchedule, Calibrating, EmaTracker, Frozen

__all__ = [
    "ActivationCalibrator",
    "BoundsState",
    "CalibrationSchedule",
    "Calibrating",
    "EmaTracker",
    "Frozen",
    "activations_quantized",
    "maybe_freeze",
    "update_ema",
    "weight_bounds",
]
