"""
Tradeoff points and frontiers
"""

from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field


class Direction(str, Enum):
    HIGHER_IS_BETTER = "higher"
    LOWER_IS_BETTER = "lower"


class CostAxis(str, Enum):
    LINEAR = "linear"
    QUADRATIC = "quadratic"
    MEMORY = "memory"


class Metric(str, Enum):
    TOP1 = "top1"
    EVAL_LOGLOSS = "eval_logloss"
    TRAIN_LOGLOSS = "train_logloss"

    @property
    def default_direction(self) -> Direction:
        if self == Metric.TOP1:
            return Direction.HIGHER_IS_BETTER
        return Direction.LOWER_IS_BETTER


class TradeoffPoint(BaseModel):
    """A (cost, accuracy) pair where accuracy is always higher-is-better.

    Lower-is-better metrics are negated on the way in (``from_metric``) and
    restored on the way out (``metric``).
    """

    model_config = ConfigDict(frozen=True)

    cost: float = Field(gt=0)
    accuracy: float
    label: str
    preset: Optional[str] = None
    multiplier: Optional[float] = None
    run_id: Optional[str] = None

    @classmethod
    def from_metric(
        cls,
        cost: float,
        value: float,
        label: str,
        direction: Direction = Direction.HIGHER_IS_BETTER,
        **labels: object,
    ) -> "TradeoffPoint":
        accuracy = value if direction == Direction.HIGHER_IS_BETTER else -value
        return cls.model_validate(
            {"cost": cost, "accuracy": accuracy, "label": label, **labels}
        )

    def metric(self, direction: Direction = Direction.HIGHER_IS_BETTER) -> float:
        return self.accuracy if direction == Direction.HIGHER_IS_BETTER else -self.accuracy


class Frontier(BaseModel):
    """Non-dominated points in ascending cost (and ascending accuracy)"""

    points: list[TradeoffPoint]

    def __len__(self) -> int:
        return len(self.points)

    @property
    def labels(self) -> list[str]:
        return [p.label for p in self.points]
