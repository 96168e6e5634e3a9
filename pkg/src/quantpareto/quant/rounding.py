"""
Rounding rules used when mapping scaled values onto the integer grid.

Every quantizer routes through ``round_to_grid`` so the tie-breaking rule can be
swapped in one place.
"""

from enum import Enum

import numpy as np


class RoundingMode(str, Enum):
    HALF_AWAY_FROM_ZERO = "half_away_from_zero"
    HALF_TO_EVEN = "half_to_even"


DEFAULT_ROUNDING = RoundingMode.HALF_AWAY_FROM_ZERO


def round_half_away_from_zero(values: np.ndarray) -> np.ndarray:
    """Round to nearest, ties away from zero (2.5 -> 3, -2.5 -> -3)"""
    with np.errstate(invalid="ignore"):
        whole = np.trunc(values)
        # exact for every finite float: trunc only drops fraction bits
        frac = values - whole
        step = np.where(np.abs(frac) >= 0.5, np.sign(values), 0)
    return (whole + step).astype(values.dtype, copy=False)


def round_to_grid(
    values: np.ndarray, mode: RoundingMode = DEFAULT_ROUNDING
) -> np.ndarray:
    values = np.asarray(values)
    if mode == RoundingMode.HALF_TO_EVEN:
        return np.rint(values)
    return round_half_away_from_zero(values)


def round_half_away_scalar(value: float) -> int:
    """Scalar form of the default rule, for widths and step counts"""
    return int(round_half_away_from_zero(np.asarray(value, dtype=np.float64)))
