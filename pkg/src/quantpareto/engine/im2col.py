"""
Patch extraction for NHWC convolutions and pooling.

Convolutions are lowered to a matmul of the patch matrix with the flattened
kernel, so the quantized conv can share the integer matmul kernel. Patch
columns are ordered (kh, kw, C), matching a [kh, kw, C_in, C_out] kernel
reshaped to [kh*kw*C_in, C_out].
"""

import math
from enum import Enum

import numpy as np

from quantpareto.core.errors import ShapeError


class Padding(str, Enum):
    SAME = "SAME"
    VALID = "VALID"


def output_size(size: int, kernel: int, stride: int, padding: Padding) -> int:
    """Spatial output size of a sliding window along one axis"""
    if stride < 1:
        raise ShapeError(f"Stride must be >= 1, got {stride}")
    if padding == Padding.SAME:
        return math.ceil(size / stride)
    if size < kernel:
        raise ShapeError(f"VALID window {kernel} larger than input {size}")
    return (size - kernel) // stride + 1


def padding_amounts(
    size: int, kernel: int, stride: int, padding: Padding
) -> tuple[int, int]:
    """(before, after) padding; SAME puts the odd pixel after, like TF/JAX"""
    if padding == Padding.VALID:
        return 0, 0
    out = output_size(size, kernel, stride, padding)
    total = max((out - 1) * stride + kernel - size, 0)
    return total // 2, total - total // 2


def extract_windows(
    x: np.ndarray,
    kernel_h: int,
    kernel_w: int,
    stride: int,
    padding: Padding,
    pad_value: float = 0.0,
) -> np.ndarray:
    """Sliding windows of an NHWC tensor as an (N, Ho, Wo, kh, kw, C) array"""
    if x.ndim != 4:
        raise ShapeError(f"Expected an NHWC tensor, got shape {x.shape}")

    _, h, w, _ = x.shape
    out_h = output_size(h, kernel_h, stride, padding)
    out_w = output_size(w, kernel_w, stride, padding)
    top, bottom = padding_amounts(h, kernel_h, stride, padding)
    left, right = padding_amounts(w, kernel_w, stride, padding)

    padded = np.pad(
        x,
        ((0, 0), (top, bottom), (left, right), (0, 0)),
        mode="constant",
        constant_values=pad_value,
    )
    windows = np.lib.stride_tricks.sliding_window_view(
        padded, (kernel_h, kernel_w), axis=(1, 2)
    )
    # (N, H', W', C, kh, kw) -> strided output positions
    windows = windows[
        :, : (out_h - 1) * stride + 1 : stride, : (out_w - 1) * stride + 1 : stride
    ]
    return windows.transpose(0, 1, 2, 4, 5, 3)


def im2col(
    x: np.ndarray, kernel_h: int, kernel_w: int, stride: int, padding: Padding
) -> np.ndarray:
    """Patch matrix of shape (N*Ho*Wo, kh*kw*C)"""
    windows = extract_windows(x, kernel_h, kernel_w, stride, padding)
    n, out_h, out_w = windows.shape[:3]
    return np.ascontiguousarray(windows).reshape(n * out_h * out_w, -1)


def col2im(
    cols: np.ndarray,
    x_shape: tuple[int, ...],
    kernel_h: int,
    kernel_w: int,
    stride: int,
    padding: Padding,
) -> np.ndarray:
    """Scatter-add a patch-matrix gradient back onto the NHWC input"""
    n, h, w, c = x_shape
    out_h = output_size(h, kernel_h, stride, padding)
    out_w = output_size(w, kernel_w, stride, padding)
    top, bottom = padding_amounts(h, kernel_h, stride, padding)
    left, right = padding_amounts(w, kernel_w, stride, padding)

    grads = cols.reshape(n, out_h, out_w, kernel_h, kernel_w, c)
    padded = np.zeros((n, h + top + bottom, w + left + right, c), dtype=cols.dtype)
    for i in range(kernel_h):
        for j in range(kernel_w):
            padded[
                :,
                i : i + stride * (out_h - 1) + 1 : stride,
                j : j + stride * (out_w - 1) + 1 : stride,
                :,
            ] += grads[:, :, :, i, j, :]
    return padded[:, top : top + h, left : left + w, :]
