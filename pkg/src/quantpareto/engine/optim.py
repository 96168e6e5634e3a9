"""
SGD with momentum and the cosine learning-rate schedule with linear warmup
"""

import math
from typing import Iterable

from pydantic import BaseModel, ConfigDict, Field

from quantpareto.core.errors import ConfigError
from quantpareto.engine.tensor import Parameter

DEFAULT_MOMENTUM = 0.9
DEFAULT_WARMUP_FRACTION = 0.05
REFERENCE_BATCH = 256
REFERENCE_LR = 0.1


def scaled_base_lr(batch_size: int, reference_lr: float = REFERENCE_LR) -> float:
    """Linear scaling rule: reference_lr * batch / 256"""
    return reference_lr * batch_size / REFERENCE_BATCH


def sgd_momentum_step(
    params: Iterable[Parameter],
    lr: float,
    momentum: float = DEFAULT_MOMENTUM,
    weight_decay: float = 0.0,
) -> None:
    """In place: v <- m * v + g ; w <- w - lr * v"""
    if lr <= 0:
        raise ConfigError(f"Learning rate must be positive, got {lr}")

    for p in params:
        grad = p.grad
        if weight_decay:
            grad = grad + weight_decay * p.data
        buf = p.momentum_buf
        buf *= momentum
        buf += grad
        p.data -= lr * buf


class CosineWarmupSchedule(BaseModel):
    """Linear warmup to ``base_lr`` followed by cosine decay towards zero"""

    model_config = ConfigDict(frozen=True)

    base_lr: float = Field(gt=0)
    total_steps: int = Field(gt=0)
    warmup_fraction: float = Field(default=DEFAULT_WARMUP_FRACTION, ge=0, lt=1)

    @property
    def warmup_steps(self) -> int:
        return int(round(self.warmup_fraction * self.total_steps))

    def lr(self, step: int) -> float:
        warmup = self.warmup_steps
        if step < warmup:
            return self.base_lr * (step + 1) / warmup
        decay_steps = max(1, self.total_steps - warmup)
        progress = min(1.0, (step - warmup) / decay_steps)
        return self.base_lr * 0.5 * (1.0 + math.cos(math.pi * progress))
