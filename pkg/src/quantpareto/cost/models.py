"""
Data models for compute and memory cost reports
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from quantpareto.core.models import CostModelKind, LayerShape


@dataclass(frozen=True)
class LayerCost:
    """Compute cost and weight-memory bits of one layer"""

    shape: LayerShape
    compute: int
    memory_bits: int

    @property
    def name(self) -> str:
        return self.shape.name


@dataclass(frozen=True)
class CostReport:
    """Per-layer and total costs of a model under one cost model.

    Totals are exact integer sums. Ratios are filled in by ``normalize`` or
    ``relative_to`` and are exact fractions.
    """

    kind: CostModelKind
    layers: tuple[LayerCost, ...]
    total_compute: int
    total_memory_bits: int
    reference: Optional[str] = None
    compute_ratio: Optional[Fraction] = None
    memory_ratio: Optional[Fraction] = None

    @property
    def shapes(self) -> list[LayerShape]:
        return [layer.shape for layer in self.layers]

    def to_rows(self) -> list[dict[str, object]]:
        """CSV-ready rows: one per layer, then a TOTAL row"""
        rows: list[dict[str, object]] = [
            {
                "layer": layer.name,
                "kind": layer.shape.kind.value,
                "bits": layer.shape.precision_bits,
                "compute": layer.compute,
                "memory_bits": layer.memory_bits,
                "compute_share": f"{layer.compute / self.total_compute:.6f}",
            }
            for layer in self.layers
        ]
        total: dict[str, object] = {
            "layer": "TOTAL",
            "kind": self.kind.value,
            "bits": "",
            "compute": self.total_compute,
            "memory_bits": self.total_memory_bits,
            "compute_share": "1.000000",
        }
        rows.append(total)
        return rows
