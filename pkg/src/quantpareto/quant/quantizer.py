"""
Uniform quantization: integer ranges, per-channel scales, fake quantization,
integer payloads and the straight-through gradient.

A value x is scaled by S, rounded to the nearest integer step, clipped to the
range and scaled back by 1/S. No zero-point shift is ever applied, so 0 stays 0.
"""

from typing import Sequence, Union

import numpy as np
import numpy.typing as npt

from quantpareto.core.errors import QuantizationError
from quantpareto.core.models import Precision, Signedness
from quantpareto.quant.models import (
    QuantizedTensor,
    QuantRange,
    ScaleVector,
    StaircaseRow,
)
from quantpareto.quant.rounding import DEFAULT_ROUNDING, RoundingMode, round_to_grid

# Bounds below this are floored so scales stay finite.
EPSILON_BOUND = 1e-6

BoundsLike = Union[float, Sequence[float], np.ndarray]


def quant_range(precision: Precision) -> QuantRange:
    """Integer range of a precision: [0, 2^B-1] unsigned, [-2^(B-1)+1, 2^(B-1)-1] signed"""
    if precision.bits is None:
        raise QuantizationError("FullPrecision has no quantization range")

    bits = precision.bits
    if precision.signedness == Signedness.UNSIGNED:
        return QuantRange(lo=0, hi=2**bits - 1)

    if bits < 2:
        raise QuantizationError(f"Signed quantization needs at least 2 bits, got {bits}")
    hi = 2 ** (bits - 1) - 1
    return QuantRange(lo=-hi, hi=hi)


def compute_scales(bounds: BoundsLike, precision: Precision) -> ScaleVector:
    """Per-channel scales S = hi / bound, with bounds floored at EPSILON_BOUND"""
    qrange = quant_range(precision)
    bounds_arr = np.atleast_1d(np.asarray(bounds, dtype=np.float64))

    if np.any(np.isnan(bounds_arr)):
        raise QuantizationError("Clipping bounds must not be NaN")
    if np.any(bounds_arr < 0):
        raise QuantizationError("Clipping bounds must be non-negative")

    floored = np.maximum(bounds_arr, EPSILON_BOUND)
    return ScaleVector(scales=qrange.hi / floored)


def bucket_width(bound: float, precision: Precision) -> float:
    """Distance between neighbouring quantization levels for one bound"""
    return 1.0 / float(compute_scales([bound], precision).scales[0])


def _scales_for(x: np.ndarray, scales: ScaleVector, channel_axis: int) -> np.ndarray:
    """Reshape scales so they broadcast along ``channel_axis`` of ``x``"""
    if scales.is_per_tensor:
        return scales.scales.astype(x.dtype).reshape(())

    if x.ndim == 0:
        raise QuantizationError("Per-channel scales need a tensor with a channel axis")

    axis = channel_axis % x.ndim
    if x.shape[axis] != len(scales):
        raise QuantizationError(
            f"Scale count {len(scales)} does not match channel dimension "
            f"{x.shape[axis]} (axis {channel_axis})"
        )
    shape = [1] * x.ndim
    shape[axis] = len(scales)
    return scales.scales.astype(x.dtype).reshape(shape)


def _float_input(x: np.ndarray) -> np.ndarray:
    arr = np.asarray(x)
    if not np.issubdtype(arr.dtype, np.floating):
        arr = arr.astype(np.float64)
    return arr


def _integer_grid(
    x: np.ndarray,
    scales: ScaleVector,
    qrange: QuantRange,
    channel_axis: int,
    rounding: RoundingMode,
) -> tuple[np.ndarray, np.ndarray]:
    s = _scales_for(x, scales, channel_axis)
    with np.errstate(over="ignore", invalid="ignore"):
        rounded = round_to_grid(x * s, rounding)
    return np.clip(rounded, qrange.lo, qrange.hi), s


def fake_quantize(
    x: np.ndarray,
    scales: ScaleVector,
    qrange: QuantRange,
    channel_axis: int = -1,
    rounding: RoundingMode = DEFAULT_ROUNDING,
) -> np.ndarray:
    """clamp(round(x * S), lo, hi) / S, computed in the dtype of ``x``"""
    x = _float_input(x)
    grid, s = _integer_grid(x, scales, qrange, channel_axis, rounding)
    return (grid / s).astype(x.dtype, copy=False)


def quantize_to_int(
    x: np.ndarray,
    scales: ScaleVector,
    qrange: QuantRange,
    channel_axis: int = -1,
    rounding: RoundingMode = DEFAULT_ROUNDING,
) -> QuantizedTensor:
    """Integer payload clamp(round(x * S), lo, hi)"""
    x = _float_input(x)
    grid, _ = _integer_grid(x, scales, qrange, channel_axis, rounding)
    return QuantizedTensor(
        values=grid.astype(np.int32),
        range=qrange,
        scales=scales,
        channel_axis=channel_axis,
    )


def dequantize(q: QuantizedTensor, dtype: npt.DTypeLike = np.float64) -> np.ndarray:
    """values / S per channel, in ``dtype`` (use the source dtype for bit-exactness)"""
    values = q.values.astype(dtype)
    s = _scales_for(values, q.scales, q.channel_axis)
    return (values / s).astype(dtype, copy=False)


def ste_backward(
    grad_out: np.ndarray,
    x: np.ndarray,
    bounds: BoundsLike,
    channel_axis: int = -1,
    signedness: Signedness = Signedness.SIGNED,
) -> np.ndarray:
    """Straight-through gradient: identity inside the clip window, zero outside.

    The window is |x| <= bound for signed ranges and 0 <= x <= bound for
    unsigned ones.
    """
    grad_out = np.asarray(grad_out)
    x = np.asarray(x)
    if grad_out.shape != x.shape:
        raise QuantizationError(
            f"Gradient shape {grad_out.shape} does not match input shape {x.shape}"
        )

    b = np.atleast_1d(np.asarray(bounds, dtype=x.dtype))
    if b.size == 1:
        b = b.reshape(())
    else:
        axis = channel_axis % x.ndim
        shape = [1] * x.ndim
        shape[axis] = b.size
        b = b.reshape(shape)

    if signedness == Signedness.UNSIGNED:
        inside = (x >= 0) & (x <= b)
    else:
        inside = np.abs(x) <= b
    return np.where(inside, grad_out, np.zeros_like(grad_out))


def quantization_staircase(
    values: Sequence[float],
    bound: float,
    precision: Precision,
    rounding: RoundingMode = DEFAULT_ROUNDING,
) -> list[StaircaseRow]:
    """Walk each value through scale, clip, round and rescale.

    Rounding and clipping commute on an integer range, so the table can show
    the clipped value before rounding while matching ``fake_quantize``.
    """
    qrange = quant_range(precision)
    scales = compute_scales([bound], precision)
    s = float(scales.scales[0])

    rows: list[StaircaseRow] = []
    for value in values:
        scaled = value * s
        clipped = min(max(scaled, float(qrange.lo)), float(qrange.hi))
        rounded = int(round_to_grid(np.asarray(clipped, dtype=np.float64), rounding))
        rescaled = rounded / s
        rows.append(
            StaircaseRow(
                input=value,
                scaled=scaled,
                clipped=clipped,
                rounded=rounded,
                rescaled=rescaled,
                error=rescaled - value,
            )
        )
    return rows
