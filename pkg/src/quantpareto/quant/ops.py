"""
Quantized matmul and convolution in the true integer domain.

Both operands are quantized to integers, multiplied with a wide accumulator and
rescaled once: result = (Qa . Qw) / (Sa * Sw). Activation scales are per row of
``a`` (or per tensor), weight scales per output column, so both factor out of
the integer dot product.
"""

import numpy as np

from quantpareto.calibration.calibrator import weight_bounds
from quantpareto.core.errors import AccumulatorOverflowError, QuantizationError, ShapeError
from quantpareto.core.models import Precision
from quantpareto.engine.im2col import Padding, im2col, output_size
from quantpareto.quant.models import QuantizedTensor, QuantRange
from quantpareto.quant.quantizer import (
    BoundsLike,
    compute_scales,
    fake_quantize,
    quant_range,
    quantize_to_int,
)
from quantpareto.quant.rounding import DEFAULT_ROUNDING, RoundingMode

ACCUMULATOR_BITS = 32

# float64 represents every integer below 2**53 exactly, so a float64 matmul of
# integer-valued operands is an exact integer accumulation within this limit.
_EXACT_FLOAT64_INT = 2**53


def check_accumulator(
    depth: int,
    a_range: QuantRange,
    w_range: QuantRange,
    accumulator_bits: int = ACCUMULATOR_BITS,
) -> None:
    """Reject dot products whose worst case k * |a|max * |w|max overflows"""
    worst = depth * a_range.max_magnitude * w_range.max_magnitude
    limit = 2 ** (accumulator_bits - 1) - 1
    if worst > limit or worst >= _EXACT_FLOAT64_INT:
        raise AccumulatorOverflowError(
            f"Dot product of depth {depth} can reach {worst}, beyond the "
            f"{accumulator_bits}-bit accumulator limit {limit}"
        )


def integer_matmul(
    qa: QuantizedTensor,
    qw: QuantizedTensor,
    accumulator_bits: int = ACCUMULATOR_BITS,
) -> np.ndarray:
    """Exact integer product Qa . Qw as int64"""
    if qa.values.ndim != 2 or qw.values.ndim != 2:
        raise ShapeError("integer_matmul expects 2-D operands")
    if qa.values.shape[1] != qw.values.shape[0]:
        raise ShapeError(
            f"Inner dimensions differ: {qa.values.shape} vs {qw.values.shape}"
        )
    check_accumulator(qa.values.shape[1], qa.range, qw.range, accumulator_bits)

    acc = qa.values.astype(np.float64) @ qw.values.astype(np.float64)
    return acc.astype(np.int64)


def _activation_bounds(a: np.ndarray, a_bounds: BoundsLike) -> np.ndarray:
    bounds = np.atleast_1d(np.asarray(a_bounds, dtype=np.float64))
    if bounds.size not in (1, a.shape[0]):
        raise QuantizationError(
            f"Activation bounds must be per tensor or per row ({a.shape[0]}), "
            f"got {bounds.size}"
        )
    return bounds


def quantized_matmul(
    a: np.ndarray,
    w: np.ndarray,
    a_precision: Precision,
    a_bounds: BoundsLike,
    w_precision: Precision,
    rounding: RoundingMode = DEFAULT_ROUNDING,
    accumulator_bits: int = ACCUMULATOR_BITS,
) -> np.ndarray:
    """Matmul with optional activation and weight quantization.

    Weight bounds are the per-output-column max(abs(w)). A FullPrecision side
    passes through unquantized; with both sides quantized the product runs in
    the integer domain.
    """
    a = np.asarray(a)
    w = np.asarray(w)
    if a.ndim != 2 or w.ndim != 2:
        raise ShapeError(f"quantized_matmul expects 2-D operands, got {a.shape}, {w.shape}")
    if a.shape[1] != w.shape[0]:
        raise ShapeError(f"Inner dimensions differ: {a.shape} vs {w.shape}")

    out_dtype = np.result_type(a.dtype, w.dtype, np.float32)

    if a_precision.is_full_precision and w_precision.is_full_precision:
        return (a @ w).astype(out_dtype, copy=False)

    if a_precision.is_full_precision:
        w_scales = compute_scales(weight_bounds(w, out_channel_axis=-1), w_precision)
        wq = fake_quantize(w, w_scales, quant_range(w_precision), -1, rounding)
        return (a @ wq).astype(out_dtype, copy=False)

    a_scales = compute_scales(_activation_bounds(a, a_bounds), a_precision)
    a_range = quant_range(a_precision)

    if w_precision.is_full_precision:
        aq = fake_quantize(a, a_scales, a_range, 0, rounding)
        return (aq @ w).astype(out_dtype, copy=False)

    w_scales = compute_scales(weight_bounds(w, out_channel_axis=-1), w_precision)
    qa = quantize_to_int(a, a_scales, a_range, 0, rounding)
    qw = quantize_to_int(w, w_scales, quant_range(w_precision), -1, rounding)
    acc = integer_matmul(qa, qw, accumulator_bits)

    sa = a_scales.scales.reshape(-1, 1)
    sw = w_scales.scales.reshape(1, -1)
    return (acc / (sa * sw)).astype(out_dtype)


def quantized_conv2d(
    x: np.ndarray,
    kernel: np.ndarray,
    stride: int,
    padding: Padding,
    a_precision: Precision,
    a_bound: BoundsLike,
    w_precision: Precision,
    rounding: RoundingMode = DEFAULT_ROUNDING,
    accumulator_bits: int = ACCUMULATOR_BITS,
) -> np.ndarray:
    """NHWC convolution lowered to ``quantized_matmul`` over the patch matrix.

    The activation bound is per tensor (it must factor out of every patch row);
    weight scales are per output channel.
    """
    x = np.asarray(x)
    kernel = np.asarray(kernel)
    if x.ndim != 4 or kernel.ndim != 4:
        raise ShapeError(
            f"Expected NHWC input and [kh, kw, C_in, C_out] kernel, got {x.shape}, {kernel.shape}"
        )
    kh, kw, c_in, c_out = kernel.shape
    if x.shape[3] != c_in:
        raise ShapeError(f"Input has {x.shape[3]} channels, kernel expects {c_in}")
    if np.atleast_1d(np.asarray(a_bound)).size != 1:
        raise QuantizationError("Integer-domain conv needs a single per-tensor activation bound")

    n, h, w_, _ = x.shape
    out_h = output_size(h, kh, stride, padding)
    out_w = output_size(w_, kw, stride, padding)

    cols = im2col(x, kh, kw, stride, padding)
    out = quantized_matmul(
        cols,
        kernel.reshape(kh * kw * c_in, c_out),
        a_precision,
        a_bound,
        w_precision,
        rounding,
        accumulator_bits,
    )
    return out.reshape(n, out_h, out_w, c_out)
