"""
Data models for training runs and their results
"""

from enum import Enum
from typing import Any, Optional

from pydantic import BaseModel, Field, model_validator

from quantpareto.core.models import QuantSettingPreset

# Fixed column order of the results CSV.
RESULT_COLUMNS = (
    "run_id",
    "preset",
    "multiplier",
    "params",
    "cost_linear_ratio",
    "cost_quadratic_ratio",
    "mem_bits",
    "train_logloss",
    "eval_logloss",
    "gen_gap",
    "top1",
    "status",
    "cost_linear",
    "cost_quadratic",
    "mem_ratio",
    "initial_loss",
    "wall_clock_s",
    "config_digest",
)


class RunStatus(str, Enum):
    OK = "ok"
    FAILED = "failed"


class RunResult(BaseModel):
    """One row of the results table.

    Cost ratios are against the run's own 16-bit baseline; ``cost_linear``,
    ``cost_quadratic`` and ``mem_bits`` are absolute totals. Metrics are None
    for failed runs. ``preset`` is None for a run defined by an explicit
    per-layer config.
    """

    run_id: str
    preset: Optional[QuantSettingPreset] = None
    multiplier: float = Field(gt=0)
    params: int = Field(ge=0)
    cost_linear_ratio: float
    cost_quadratic_ratio: float
    mem_bits: int = Field(ge=0)
    train_logloss: Optional[float] = None
    eval_logloss: Optional[float] = None
    gen_gap: Optional[float] = None
    top1: Optional[float] = Field(default=None, ge=0, le=1)
    status: RunStatus = RunStatus.OK
    cost_linear: int = Field(ge=0)
    cost_quadratic: int = Field(ge=0)
    mem_ratio: float
    initial_loss: Optional[float] = None
    wall_clock_s: float = Field(default=0.0, ge=0)
    config_digest: str

    @model_validator(mode="after")
    def _check_gap(self) -> "RunResult":
        if self.status == RunStatus.OK and (
            self.train_logloss is None or self.eval_logloss is None or self.top1 is None
        ):
            raise ValueError(f"Completed run {self.run_id} is missing metrics")
        if (
            self.gen_gap is not None
            and self.train_logloss is not None
            and self.eval_logloss is not None
            and self.gen_gap != self.eval_logloss - self.train_logloss
        ):
            raise ValueError("gen_gap must equal eval_logloss - train_logloss")
        return self

    @property
    def ok(self) -> bool:
        return self.status == RunStatus.OK

    @property
    def setting(self) -> str:
        """Preset name, or the layer-config label the run id starts with"""
        if self.preset is not None:
            return self.preset.value
        suffix = f"_c{self.multiplier:g}"
        return self.run_id.removesuffix(suffix)

    def to_row(self) -> dict[str, str]:
        """CSV cells; floats use repr so reading them back is lossless"""
        row: dict[str, str] = {}
        for column in RESULT_COLUMNS:
            value: Any = getattr(self, column)
            if value is None:
                row[column] = ""
            elif isinstance(value, Enum):
                row[column] = str(value.value)
            elif isinstance(value, float):
                row[column] = repr(value)
            else:
                row[column] = str(value)
        return row

    @classmethod
    def from_row(cls, row: dict[str, str]) -> "RunResult":
        cells: dict[str, Optional[str]] = {
            column: (row.get(column) or None) for column in RESULT_COLUMNS
        }
        return cls.model_validate(cells)
