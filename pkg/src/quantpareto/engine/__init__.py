"""
Minimal NHWC tensor engine with reverse-mode autodiff.
"""

from .im2col import Padding
from .tensor import Parameter, Tape, Tensor, apply_op, current_tape

__all__ = ["Padding", "Parameter", "Tape", "Tensor", "apply_op", "current_tape"]
