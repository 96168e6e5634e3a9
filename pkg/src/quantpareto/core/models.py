"""
Shared data types: numeric formats, quantization presets and layer shapes
"""

from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

# Bit widths the cost models know a coefficient for.
COSTED_BITS = (4, 8, 16)

# Full precision layers are costed as the 16-bit baseline format.
FULL_PRECISION_COST_BITS = 16


class Signedness(str, Enum):
    SIGNED = "signed"
    UNSIGNED = "unsigned"


class Precision(BaseModel):
    """Bit width and signedness of a quantization format.

    ``bits=None`` is the FullPrecision sentinel: no quantization, no range.
    """

    model_config = ConfigDict(frozen=True)

    bits: Optional[int] = Field(default=None, ge=1, le=16)
    signedness: Signedness = Signedness.SIGNED

    @model_validator(mode="after")
    def _signed_needs_two_bits(self) -> "Precision":
        if (
            self.bits is not None
            and self.signedness == Signedness.SIGNED
            and self.bits < 2
        ):
            raise ValueError("Signed precision requires at least 2 bits")
        return self

    @classmethod
    def signed(cls, bits: int) -> "Precision":
        return cls(bits=bits, signedness=Signedness.SIGNED)

    @classmethod
    def unsigned(cls, bits: int) -> "Precision":
        return cls(bits=bits, signedness=Signedness.UNSIGNED)

    @classmethod
    def full(cls) -> "Precision":
        return cls(bits=None)

    @property
    def is_full_precision(self) -> bool:
        return self.bits is None

    @property
    def cost_bits(self) -> int:
        """Bit width used by the cost models (FullPrecision costs as 16)"""
        return FULL_PRECISION_COST_BITS if self.bits is None else self.bits

    def __str__(self) -> str:
        if self.bits is None:
            return "full"
        prefix = "int" if self.signedness == Signedness.SIGNED else "uint"
        return f"{prefix}{self.bits}"


class QuantSettingPreset(str, Enum):
    """The four quantization settings of the tradeoff sweep"""

    FOUR_BIT = "4bit"
    FOUR_BIT_FIRST_LAST_8 = "4bit_first_last_8"
    EIGHT_BIT = "8bit"
    BASELINE = "bfloat16"


class CostModelKind(str, Enum):
    LINEAR = "linear"
    QUADRATIC = "quadratic"


class LayerKind(str, Enum):
    CONV2D = "conv2d"
    DENSE = "dense"


class LayerShape(BaseModel):
    """Shape record of one Conv2D or Dense layer, as consumed by the cost models"""

    name: str
    kind: LayerKind
    batch: int = Field(default=1, ge=1)
    kernel_h: Optional[int] = Field(default=None, ge=1)
    kernel_w: Optional[int] = Field(default=None, ge=1)
    out_w: Optional[int] = Field(default=None, ge=1)
    out_h: Optional[int] = Field(default=None, ge=1)
    c_in: int = Field(ge=1)
    c_out: int = Field(ge=1)
    precision_bits: int

    @model_validator(mode="after")
    def _check_shape(self) -> "LayerShape":
        if self.precision_bits not in COSTED_BITS:
            raise ValueError(
                f"precision_bits must be one of {COSTED_BITS}, got {self.precision_bits}"
            )
        spatial = (self.kernel_h, self.kernel_w, self.out_w, self.out_h)
        if self.kind == LayerKind.CONV2D and any(v is None for v in spatial):
            raise ValueError(f"Conv2D layer {self.name} needs kernel and output dims")
        if self.kind == LayerKind.DENSE and any(v is not None for v in spatial):
            raise ValueError(f"Dense layer {self.name} takes no kernel or output dims")
        return self


class LayerManifest(BaseModel):
    """Exported layer-shape manifest of a built model"""

    arch: str
    multiplier: float
    preset: Optional[str] = None
    input_resolution: int
    layers: list[LayerShape]
