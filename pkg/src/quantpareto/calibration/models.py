"""
Data models for the calibration lifecycle
"""

from dataclasses import dataclass, field
from typing import Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from quantpareto.core.errors import ConfigError
from quantpareto.quant.rounding import round_half_away_scalar

DEFAULT_EMA_DECAY = 0.9
DEFAULT_FREEZE_FRACTION = 0.2
# Recommended window for the freeze step, as a fraction of total steps.
RECOMMENDED_FREEZE_BAND = (0.1, 0.4)


@dataclass(frozen=True)
class EmaTracker:
    """Per-channel EMA of max(abs(x)); empty until the first observation"""

    per_channel_ema: np.ndarray = field(
        default_factory=lambda: np.zeros(0, dtype=np.float64)
    )
    decay: float = DEFAULT_EMA_DECAY
    observations: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.decay < 1.0:
            raise ConfigError(f"EMA decay must lie in (0, 1), got {self.decay}")


@dataclass(frozen=True)
class Calibrating:
    """Activation bounds still being estimated; activations stay unquantized"""

    tracker: EmaTracker


@dataclass(frozen=True)
class Frozen:
    """Activation bounds fixed for the rest of training"""

    bounds: np.ndarray


BoundsState = Union[Calibrating, Frozen]


class CalibrationSchedule(BaseModel):
    """When to freeze activation bounds: step N out of total_steps"""

    model_config = ConfigDict(frozen=True)

    freeze_step: int = Field(gt=0)
    total_steps: int = Field(gt=1)

    @model_validator(mode="after")
    def _freeze_inside_run(self) -> "CalibrationSchedule":
        if self.freeze_step >= self.total_steps:
            raise ValueError(
                f"freeze_step {self.freeze_step} must be below total_steps {self.total_steps}"
            )
        return self

    @classmethod
    def from_fraction(
        cls, total_steps: int, fraction: float = DEFAULT_FREEZE_FRACTION
    ) -> "CalibrationSchedule":
        """N = round(fraction * total_steps)"""
        freeze_step = round_half_away_scalar(fraction * total_steps)
        if not 0 < freeze_step < total_steps:
            raise ConfigError(
                f"Freeze fraction {fraction} of {total_steps} steps gives step "
                f"{freeze_step}, outside (0, {total_steps})"
            )
        return cls(freeze_step=freeze_step, total_steps=total_steps)
