"""
Architecture and per-layer quantization specs for the scalable ResNet family
"""

import hashlib
import json
from typing import Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from quantpareto.core.errors import ConfigError
from quantpareto.core.models import QuantSettingPreset
from quantpareto.quant.rounding import round_half_away_scalar

FIRST_LAYER = "conv_init"
LAST_LAYER = "dense"

# Filter multipliers of the full tradeoff sweep and of the desk-scale grid.
FULL_SWEEP_MULTIPLIERS = (0.5, 0.62, 0.75, 0.87, 1.0, 1.25, 1.5, 1.75, 2.0)
DESK_SWEEP_MULTIPLIERS = (0.5, 1.0, 2.0)
SWEEP_MULTIPLIER_RANGE = (0.5, 2.0)


class ConvSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kernel: int = Field(ge=1)
    stride: int = Field(ge=1)
    width: int = Field(ge=1)


class ResNetSpec(BaseModel):
    """Bottleneck ResNet topology plus the global filter multiplier c"""

    model_config = ConfigDict(frozen=True)

    name: str
    block_group_sizes: list[int]
    base_widths: list[int]
    expansion: int = Field(default=4, ge=1)
    init_conv: ConvSpec
    use_max_pool: bool = True
    num_classes: int = Field(ge=2)
    filter_multiplier: float = Field(default=1.0, gt=0)
    input_resolution: int = Field(ge=1)

    @model_validator(mode="after")
    def _check_groups(self) -> "ResNetSpec":
        if not self.block_group_sizes:
            raise ValueError("At least one block group is required")
        if len(self.block_group_sizes) != len(self.base_widths):
            raise ValueError(
                f"{len(self.block_group_sizes)} block groups but "
                f"{len(self.base_widths)} base widths"
            )
        if any(n < 1 for n in self.block_group_sizes) or any(
            w < 1 for w in self.base_widths
        ):
            raise ValueError("Block counts and widths must be positive")
        return self

    @property
    def num_blocks(self) -> int:
        return sum(self.block_group_sizes)

    @property
    def multiplier_in_sweep_range(self) -> bool:
        lo, hi = SWEEP_MULTIPLIER_RANGE
        return lo <= self.filter_multiplier <= hi

    def with_multiplier(self, multiplier: float) -> "ResNetSpec":
        return self.model_copy(update={"filter_multiplier": multiplier})

    def with_resolution(self, resolution: int) -> "ResNetSpec":
        return self.model_copy(update={"input_resolution": resolution})


def scaled_widths(base_widths: Sequence[int], multiplier: float) -> list[int]:
    """max(1, round(base * c)) per width, ties away from zero"""
    if multiplier <= 0:
        raise ConfigError(f"Filter multiplier must be positive, got {multiplier}")
    return [max(1, round_half_away_scalar(w * multiplier)) for w in base_widths]


def resnet50_spec(multiplier: float = 1.0) -> ResNetSpec:
    """ResNet50 v1.5 at 224x224 with 1000 classes"""
    return ResNetSpec(
        name="resnet50",
        block_group_sizes=[3, 4, 6, 3],
        base_widths=[64, 128, 256, 512],
        init_conv=ConvSpec(kernel=7, stride=2, width=64),
        use_max_pool=True,
        num_classes=1000,
        filter_multiplier=multiplier,
        input_resolution=224,
    )


def mini_resnet_spec(multiplier: float = 1.0) -> ResNetSpec:
    """Desk-scale variant: 32x32 input, three single-block groups, 10 classes"""
    return ResNetSpec(
        name="mini_resnet",
        block_group_sizes=[1, 1, 1],
        base_widths=[16, 32, 64],
        init_conv=ConvSpec(kernel=3, stride=1, width=16),
        use_max_pool=False,
        num_classes=10,
        filter_multiplier=multiplier,
        input_resolution=32,
    )


ARCHITECTURES = {"resnet50": resnet50_spec, "mini_resnet": mini_resnet_spec}


def spec_for(arch: str, multiplier: float = 1.0) -> ResNetSpec:
    try:
        factory = ARCHITECTURES[arch]
    except KeyError as e:
        raise ConfigError(
            f"Unknown architecture {arch!r}; expected one of {sorted(ARCHITECTURES)}"
        ) from e
    return factory(multiplier)


class LayerQuantConfig(BaseModel):
    """Bit width per quantized layer; ``None`` means FullPrecision.

    Weights and activations of a layer share its bit width. ``first_layer_bits``
    and ``last_layer_bits`` inherit ``default_bits`` when unset; an entry in
    ``overrides`` wins over everything, and an explicit ``null`` there keeps
    that layer in full precision.
    """

    model_config = ConfigDict(frozen=True)

    default_bits: Optional[int] = None
    first_layer_bits: Optional[int] = None
    last_layer_bits: Optional[int] = None
    overrides: dict[str, Optional[int]] = Field(default_factory=dict)

    @field_validator("default_bits", "first_layer_bits", "last_layer_bits")
    @classmethod
    def _bits_in_range(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and not 2 <= v <= 16:
            raise ValueError(f"Layer bit width must lie in [2, 16], got {v}")
        return v

    @field_validator("overrides")
    @classmethod
    def _override_bits_in_range(
        cls, v: dict[str, Optional[int]]
    ) -> dict[str, Optional[int]]:
        for name, bits in v.items():
            if bits is not None and not 2 <= bits <= 16:
                raise ValueError(f"Override for {name} must lie in [2, 16], got {bits}")
        return v

    def bits_for(self, layer_name: str) -> Optional[int]:
        if layer_name in self.overrides:
            return self.overrides[layer_name]
        if layer_name == FIRST_LAYER and self.first_layer_bits is not None:
            return self.first_layer_bits
        if layer_name == LAST_LAYER and self.last_layer_bits is not None:
            return self.last_layer_bits
        return self.default_bits

    def bit_widths(self) -> set[int]:
        """Every bit width a layer can resolve to, FullPrecision excluded"""
        candidates = [self.default_bits, self.first_layer_bits, self.last_layer_bits]
        candidates.extend(self.overrides.values())
        return {b for b in candidates if b is not None}

    def label(self) -> str:
        """Stable name like ``layers_d4_f8_l8``; overrides add a short digest"""

        def _bits(b: Optional[int]) -> str:
            return "fp" if b is None else str(b)

        parts = ["layers", f"d{_bits(self.default_bits)}"]
        if self.first_layer_bits is not None:
            parts.append(f"f{self.first_layer_bits}")
        if self.last_layer_bits is not None:
            parts.append(f"l{self.last_layer_bits}")
        if self.overrides:
            canonical = json.dumps(self.overrides, sort_keys=True)
            parts.append("o" + hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:8])
        return "_".join(parts)

    @classmethod
    def from_preset(cls, preset: QuantSettingPreset) -> "LayerQuantConfig":
        return PRESET_CONFIGS[preset]


PRESET_CONFIGS: dict[QuantSettingPreset, LayerQuantConfig] = {
    QuantSettingPreset.FOUR_BIT: LayerQuantConfig(default_bits=4),
    QuantSettingPreset.FOUR_BIT_FIRST_LAST_8: LayerQuantConfig(
        default_bits=4, first_layer_bits=8, last_layer_bits=8
    ),
    QuantSettingPreset.EIGHT_BIT: LayerQuantConfig(default_bits=8),
    QuantSettingPreset.BASELINE: LayerQuantConfig(),
}
