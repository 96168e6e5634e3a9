"""
Exception hierarchy shared by every quantpareto module.

All errors derive from ValueError so callers catching ValueError keep working.
"""


class QuantParetoError(ValueError):
    """Base class for all quantpareto errors"""


class QuantizationError(QuantParetoError):
    """Invalid precision, bound or operand shape for a quantizer"""


class AccumulatorOverflowError(QuantizationError):
    """Worst-case integer dot product does not fit the accumulator"""


class ShapeError(QuantParetoError):
    """Tensor shapes are incompatible with the requested op"""


class GraphError(QuantParetoError):
    """Autodiff tape misuse (backward before forward, non-scalar loss)"""


class CostModelError(QuantParetoError):
    """Unsupported bit width, wrong layer kind or mismatched shape lists"""


class DatasetError(QuantParetoError):
    """Malformed dataset files or empty streams"""


class ConfigError(QuantParetoError):
    """Invalid experiment or sweep configuration"""


class TrainingDivergedError(QuantParetoError):
    """Loss became non-finite after the early-transient window"""


class CalibrationError(QuantParetoError):
    """Calibration statistics missing or inconsistent"""


class ParetoError(QuantParetoError):
    """Empty or inconsistent tradeoff point sets"""
