"""
Closed-form compute and memory cost models.

A layer's compute cost is the number of multiplications times a per-bit-width
coefficient M:

    Conv2D: B * K_h * K_w * A_w * A_h * C_in * C_out * M
    Dense:  B * C_in * C_out * M

M is 16/8/4 for 16/8/4-bit operands under the linear model and 16/4/1 under
the quadratic model. Weight memory is K_h * K_w * C_in * C_out * bits for
Conv2D and C_in * C_out * bits for Dense, under both models.
"""

from dataclasses import replace
from fractions import Fraction
from typing import Sequence

from quantpareto.core.errors import CostModelError
from quantpareto.core.models import (
    FULL_PRECISION_COST_BITS,
    CostModelKind,
    LayerKind,
    LayerShape,
)
from quantpareto.cost.models import CostReport, LayerCost

COEFFICIENTS: dict[CostModelKind, dict[int, int]] = {
    CostModelKind.LINEAR: {16: 16, 8: 8, 4: 4},
    CostModelKind.QUADRATIC: {16: 16, 8: 4, 4: 1},
}


def coefficient(bits: int, kind: CostModelKind) -> int:
    """Compute coefficient M for a bit width"""
    try:
        return COEFFICIENTS[kind][bits]
    except KeyError as e:
        raise CostModelError(
            f"No {kind.value} cost coefficient for {bits}-bit operands"
        ) from e


def memory_coefficient(bits: int) -> int:
    """Memory coefficient M' (equal to the bit width for both models)"""
    if bits not in COEFFICIENTS[CostModelKind.LINEAR]:
        raise CostModelError(f"No memory coefficient for {bits}-bit operands")
    return bits


def conv_cost(s: LayerShape, kind: CostModelKind) -> int:
    if s.kind != LayerKind.CONV2D:
        raise CostModelError(f"conv_cost needs a Conv2D layer, {s.name} is {s.kind.value}")
    assert s.kernel_h and s.kernel_w and s.out_w and s.out_h
    return (
        s.batch
        * s.kernel_h
        * s.kernel_w
        * s.out_w
        * s.out_h
        * s.c_in
        * s.c_out
        * coefficient(s.precision_bits, kind)
    )


def dense_cost(s: LayerShape, kind: CostModelKind) -> int:
    if s.kind != LayerKind.DENSE:
        raise CostModelError(f"dense_cost needs a Dense layer, {s.name} is {s.kind.value}")
    return s.batch * s.c_in * s.c_out * coefficient(s.precision_bits, kind)


def layer_cost(s: LayerShape, kind: CostModelKind) -> int:
    return conv_cost(s, kind) if s.kind == LayerKind.CONV2D else dense_cost(s, kind)


def memory_bits(s: LayerShape) -> int:
    """Weight bits; batch and output spatial dims do not appear"""
    weights = s.c_in * s.c_out
    if s.kind == LayerKind.CONV2D:
        assert s.kernel_h and s.kernel_w
        weights *= s.kernel_h * s.kernel_w
    return weights * memory_coefficient(s.precision_bits)


def model_cost(shapes: Sequence[LayerShape], kind: CostModelKind) -> CostReport:
    """Sum of per-layer costs"""
    if not shapes:
        raise CostModelError("Cannot cost an empty layer list")
    layers = tuple(
        LayerCost(shape=s, compute=layer_cost(s, kind), memory_bits=memory_bits(s))
        for s in shapes
    )
    return CostReport(
        kind=kind,
        layers=layers,
        total_compute=sum(layer.compute for layer in layers),
        total_memory_bits=sum(layer.memory_bits for layer in layers),
    )


def baseline_shapes(shapes: Sequence[LayerShape]) -> list[LayerShape]:
    """The same layers with every operand costed at the 16-bit baseline"""
    return [
        s.model_copy(update={"precision_bits": FULL_PRECISION_COST_BITS}) for s in shapes
    ]


def _geometry(s: LayerShape) -> dict[str, object]:
    return s.model_dump(exclude={"precision_bits"})


def normalize(report: CostReport, baseline: CostReport) -> CostReport:
    """Ratios against a 16-bit baseline of the identical architecture"""
    if report.kind != baseline.kind:
        raise CostModelError(
            f"Cannot normalise a {report.kind.value} report by a {baseline.kind.value} baseline"
        )
    if len(report.layers) != len(baseline.layers) or any(
        _geometry(a.shape) != _geometry(b.shape)
        for a, b in zip(report.layers, baseline.layers)
    ):
        raise CostModelError("Report and baseline have different layer shapes")
    if any(
        layer.shape.precision_bits != FULL_PRECISION_COST_BITS
        for layer in baseline.layers
    ):
        raise CostModelError("Baseline must cost every layer at 16 bits")
    return relative_to(report, baseline, label="bfloat16 baseline")


def relative_to(
    report: CostReport, reference: CostReport, label: str = "reference"
) -> CostReport:
    """Ratios against any reference model, e.g. the c=1.0 baseline"""
    if report.kind != reference.kind:
        raise CostModelError(
            f"Cannot compare a {report.kind.value} report with a {reference.kind.value} one"
        )
    return replace(
        report,
        reference=label,
        compute_ratio=Fraction(report.total_compute, reference.total_compute),
        memory_ratio=Fraction(report.total_memory_bits, reference.total_memory_bits),
    )


def normalized_cost(shapes: Sequence[LayerShape], kind: CostModelKind) -> CostReport:
    """Cost of ``shapes`` normalised to its own 16-bit baseline"""
    return normalize(model_cost(shapes, kind), model_cost(baseline_shapes(shapes), kind))
