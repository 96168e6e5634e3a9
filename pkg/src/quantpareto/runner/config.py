"""
Experiment and sweep configuration.

An experiment config file is JSON with six sections:

    {
      "model":       {"arch": "mini_resnet", "multiplier": 1.0},
      "quant":       {"preset": "8bit", "aqt_mode": false},
      "train":       {"steps": 2000, "batch_size": 64, "seed": 0},
      "calibration": {"decay": 0.9, "freeze_fraction": 0.2},
      "dataset":     {"kind": "synthetic_clusters", "separation": 3.0},
      "output":      {"directory": "runs/example"}
    }

Only ``train.seed`` is required. A sweep grid file wraps one experiment config
as ``base`` and lists ``multipliers`` and ``presets`` to cross.
"""

import hashlib
import json
import logging
from enum import Enum
from pathlib import Path
from typing import Optional

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from quantpareto.calibration.models import (
    DEFAULT_EMA_DECAY,
    DEFAULT_FREEZE_FRACTION,
    RECOMMENDED_FREEZE_BAND,
)
from quantpareto.core.errors import ConfigError
from quantpareto.core.models import COSTED_BITS, QuantSettingPreset
from quantpareto.engine.optim import DEFAULT_MOMENTUM, DEFAULT_WARMUP_FRACTION
from quantpareto.model.layers import QuantMode
from quantpareto.model.spec import (
    ARCHITECTURES,
    DESK_SWEEP_MULTIPLIERS,
    FULL_SWEEP_MULTIPLIERS,
    LayerQuantConfig,
    ResNetSpec,
    spec_for,
)
from quantpareto.quant.rounding import DEFAULT_ROUNDING, RoundingMode

logger = logging.getLogger(__name__)

CIFAR10_RESOLUTION = 32
CIFAR10_CLASSES = 10


class DatasetKind(str, Enum):
    SYNTHETIC_CLUSTERS = "synthetic_clusters"
    CIFAR10_BINARY = "cifar10_binary"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ModelSection(_Section):
    arch: str = "mini_resnet"
    multiplier: float = Field(default=1.0, gt=0)

    @field_validator("arch")
    @classmethod
    def _known_arch(cls, v: str) -> str:
        if v not in ARCHITECTURES:
            raise ValueError(f"Unknown architecture {v!r}; expected one of {sorted(ARCHITECTURES)}")
        return v


class QuantSection(_Section):
    """Quantization setting of a run: a named preset or an explicit layer config.

    With neither given the run is the Baseline. A run defined by ``layers``
    has no preset and is labelled from its layer config.
    """

    preset: Optional[QuantSettingPreset] = None
    layers: Optional[LayerQuantConfig] = None
    aqt_mode: bool = False
    rounding: RoundingMode = DEFAULT_ROUNDING

    @model_validator(mode="after")
    def _check_setting(self) -> "QuantSection":
        if self.preset is not None and self.layers is not None:
            raise ValueError("Give either quant.preset or quant.layers, not both")
        if self.layers is not None:
            uncosted = sorted(
                {b for b in self.layers.bit_widths() if b not in COSTED_BITS}
            )
            if uncosted:
                raise ValueError(
                    f"Layer bit widths {uncosted} have no cost-model coefficient; "
                    f"use one of {COSTED_BITS}"
                )
        return self

    @property
    def setting_preset(self) -> Optional[QuantSettingPreset]:
        """The preset this run belongs to; None for an explicit layer config"""
        if self.layers is not None:
            return None
        return self.preset or QuantSettingPreset.BASELINE

    @property
    def setting_label(self) -> str:
        preset = self.setting_preset
        if preset is not None:
            return preset.value
        assert self.layers is not None
        return self.layers.label()

    def layer_config(self) -> LayerQuantConfig:
        """Explicit per-layer config if given, else the preset's"""
        if self.layers is not None:
            return self.layers
        return LayerQuantConfig.from_preset(self.preset or QuantSettingPreset.BASELINE)

    @property
    def mode(self) -> QuantMode:
        return QuantMode.AQT if self.aqt_mode else QuantMode.FAKE


class TrainSection(_Section):
    steps: int = Field(default=2000, gt=1)
    batch_size: int = Field(default=64, ge=2)
    lr: Optional[float] = Field(default=None, gt=0)
    momentum: float = Field(default=DEFAULT_MOMENTUM, ge=0, lt=1)
    weight_decay: float = Field(default=0.0, ge=0)
    warmup_fraction: float = Field(default=DEFAULT_WARMUP_FRACTION, ge=0, lt=1)
    seed: int
    log_every: int = Field(default=100, ge=1)
    eval_batch_size: int = Field(default=256, ge=1)
    # Examples of the train split scored for the final train log-loss.
    train_eval_examples: Optional[int] = Field(default=2048, ge=1)


class CalibrationSection(_Section):
    decay: float = Field(default=DEFAULT_EMA_DECAY, gt=0, lt=1)
    freeze_fraction: float = Field(default=DEFAULT_FREEZE_FRACTION, gt=0, lt=1)

    @model_validator(mode="after")
    def _warn_outside_band(self) -> "CalibrationSection":
        lo, hi = RECOMMENDED_FREEZE_BAND
        if not lo <= self.freeze_fraction <= hi:
            logger.warning(
                "Freeze fraction %s is outside the recommended band [%s, %s]",
                self.freeze_fraction,
                lo,
                hi,
            )
        return self


class DatasetSection(_Section):
    """Dataset descriptor.

    ``path`` is the CIFAR-10 binary directory (``data_batch_{1..5}.bin`` and
    ``test_batch.bin``); QUANTPARETO_DATA_ROOT overrides it.
    """

    kind: DatasetKind = DatasetKind.SYNTHETIC_CLUSTERS
    path: Optional[Path] = None
    num_classes: int = Field(default=10, ge=2, le=256)
    resolution: int = Field(default=32, ge=4)
    separation: float = Field(default=3.0, ge=0)
    train_size: Optional[int] = Field(default=None, ge=1)
    eval_size: Optional[int] = Field(default=None, ge=1)
    augment: bool = True

    @model_validator(mode="after")
    def _cifar_geometry(self) -> "DatasetSection":
        if self.kind == DatasetKind.CIFAR10_BINARY and (
            self.resolution != CIFAR10_RESOLUTION or self.num_classes != CIFAR10_CLASSES
        ):
            raise ValueError("CIFAR-10 is 32x32 with 10 classes")
        return self


class OutputSection(_Section):
    directory: Path = Path("runs")
    results_csv: Optional[Path] = None
    checkpoint: bool = True


class ExperimentConfig(_Section):
    name: Optional[str] = None
    model: ModelSection = Field(default_factory=ModelSection)
    quant: QuantSection = Field(default_factory=QuantSection)
    train: TrainSection
    calibration: CalibrationSection = Field(default_factory=CalibrationSection)
    dataset: DatasetSection = Field(default_factory=DatasetSection)
    output: OutputSection = Field(default_factory=OutputSection)

    @property
    def run_id(self) -> str:
        return self.name or f"{self.quant.setting_label}_c{self.model.multiplier:g}"

    def resnet_spec(self) -> ResNetSpec:
        """Architecture at the configured multiplier, sized to the dataset"""
        spec = spec_for(self.model.arch, self.model.multiplier)
        return spec.model_copy(
            update={
                "num_classes": self.dataset.num_classes,
                "input_resolution": self.dataset.resolution,
            }
        )

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form"""
        canonical = json.dumps(
            self.model_dump(mode="json"), sort_keys=True, separators=(",", ":")
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def for_run(
        self, preset: QuantSettingPreset, multiplier: float
    ) -> "ExperimentConfig":
        """Copy targeting one sweep cell, writing under its own run directory"""
        run = self.model_copy(
            update={
                "name": None,
                "model": self.model.model_copy(update={"multiplier": multiplier}),
                "quant": self.quant.model_copy(update={"preset": preset, "layers": None}),
            }
        )
        return run.model_copy(
            update={
                "output": self.output.model_copy(
                    update={"directory": self.output.directory / run.run_id}
                )
            }
        )


class SweepGrid(_Section):
    base: ExperimentConfig
    multipliers: Optional[list[float]] = None
    presets: list[QuantSettingPreset] = Field(
        default_factory=lambda: list(QuantSettingPreset)
    )
    full_grid: bool = False

    @model_validator(mode="after")
    def _check_grid(self) -> "SweepGrid":
        if self.multipliers is not None and (
            not self.multipliers or any(c <= 0 for c in self.multipliers)
        ):
            raise ValueError("multipliers must be a non-empty list of positive values")
        if not self.presets:
            raise ValueError("presets must not be empty")
        return self

    def resolved_multipliers(self) -> list[float]:
        if self.full_grid:
            return list(FULL_SWEEP_MULTIPLIERS)
        return list(self.multipliers or DESK_SWEEP_MULTIPLIERS)

    def expand(self) -> list[ExperimentConfig]:
        """Multipliers x presets, multiplier-major"""
        return [
            self.base.for_run(preset, c)
            for c in self.resolved_multipliers()
            for preset in self.presets
        ]


def load_config(path: Path) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate_json(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"Failed to read config {path}: {e}") from e
    except ValidationError as e:
        raise ConfigError(f"Invalid experiment config {path}: {e}") from e


def load_grid(path: Path) -> SweepGrid:
    try:
        return SweepGrid.model_validate_json(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"Failed to read sweep grid {path}: {e}") from e
    except ValidationError as e:
        raise ConfigError(f"Invalid sweep grid {path}: {e}") from e
