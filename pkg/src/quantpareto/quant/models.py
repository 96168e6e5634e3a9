"""
Data models for the uniform quantizer
"""

from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from quantpareto.core.errors import QuantizationError


class QuantRange(BaseModel):
    """Integer range a quantizer clips to"""

    model_config = ConfigDict(frozen=True)

    lo: int
    hi: int

    @model_validator(mode="after")
    def _check_bounds(self) -> "QuantRange":
        if not (self.lo <= 0 <= self.hi) or self.hi < 1:
            raise ValueError(f"Invalid integer range [{self.lo}, {self.hi}]")
        if self.lo != 0 and self.lo != -self.hi:
            raise ValueError("Range must be unsigned [0, hi] or symmetric [-hi, hi]")
        return self

    @property
    def is_symmetric(self) -> bool:
        return self.lo == -self.hi

    @property
    def max_magnitude(self) -> int:
        return max(abs(self.lo), self.hi)


@dataclass(frozen=True)
class ScaleVector:
    """Per-channel scales S; a real x maps to the integer domain via x * S.

    A vector of length 1 is a per-tensor scale and broadcasts over channels.
    """

    scales: np.ndarray

    def __post_init__(self) -> None:
        scales = np.asarray(self.scales, dtype=np.float64).reshape(-1)
        if scales.size == 0:
            raise QuantizationError("ScaleVector needs at least one scale")
        if not np.all(np.isfinite(scales)) or np.any(scales <= 0):
            raise QuantizationError("Scales must be strictly positive and finite")
        object.__setattr__(self, "scales", scales)

    def __len__(self) -> int:
        return int(self.scales.size)

    @property
    def is_per_tensor(self) -> bool:
        return self.scales.size == 1


@dataclass(frozen=True)
class QuantizedTensor:
    """Integer payload plus the range and scales needed to dequantize it"""

    values: np.ndarray
    range: QuantRange
    scales: ScaleVector
    channel_axis: int = -1

    def __post_init__(self) -> None:
        values = np.asarray(self.values)
        if values.size and (
            values.min() < self.range.lo or values.max() > self.range.hi
        ):
            raise QuantizationError(
                f"Integer values fall outside [{self.range.lo}, {self.range.hi}]"
            )


@dataclass(frozen=True)
class StaircaseRow:
    """One value walked through scale, clip, round and rescale"""

    input: float
    scaled: float
    clipped: float
    rounded: int
    rescaled: float
    error: float
